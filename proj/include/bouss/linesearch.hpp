#pragma once

// Step-size selection for the plain Newton iteration: halving with a floor
// (LS1) and bounded golden-section/parabolic minimization (LS2).

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bouss {

enum class LineSearchKind { none, ls1, ls2 };

struct LineSearchSpec {
    LineSearchKind kind = LineSearchKind::none;
    double ls1_floor = 1.0 / 64.0;
    double ls2_lower = 0.01;
    double ls2_upper = 1.0;
    double ls2_tolerance = 1e-3;
    int ls2_budget = 50;  // objective evaluation cap

    void validate() const {
        if (!(ls1_floor > 0.0 && ls1_floor <= 1.0)) throw std::invalid_argument("linesearch: floor must be in (0,1]");
        if (!(ls2_lower > 0.0 && ls2_lower < ls2_upper && ls2_upper <= 1.0))
            throw std::invalid_argument("linesearch: LS2 bracket must satisfy 0 < lo < hi <= 1");
        if (!(ls2_tolerance > 0.0) || ls2_budget < 3) throw std::invalid_argument("linesearch: bad LS2 options");
    }
};

struct LineSearchResult {
    double ratio = 1.0;
    double objective = std::numeric_limits<double>::quiet_NaN();
    bool hit_floor = false;  // LS1 found no decreasing ratio
    int evaluations = 0;
};

// Halve the ratio starting from 1 until the objective drops below
// current_objective; fall back to the floor ratio when nothing decreases.
template <typename F>
LineSearchResult ls1(double current_objective, F&& objective, const LineSearchSpec& spec) {
    spec.validate();
    LineSearchResult res;
    double r = 1.0;
    double last_r = 1.0, last_f = std::numeric_limits<double>::quiet_NaN();
    while (r >= spec.ls1_floor * (1.0 - 1e-12)) {
        const double f = objective(r);
        ++res.evaluations;
        last_r = r;
        last_f = f;
        if (f < current_objective) {
            res.ratio = r;
            res.objective = f;
            return res;
        }
        r *= 0.5;
    }
    if (last_r > spec.ls1_floor * (1.0 + 1e-12)) {  // floor not on the halving ladder
        last_r = spec.ls1_floor;
        last_f = objective(last_r);
        ++res.evaluations;
    }
    res.ratio = last_r;
    res.objective = last_f;
    res.hit_floor = true;
    return res;
}

// Brent's bounded minimization (golden section with parabolic interpolation)
// of the objective over [ls2_lower, ls2_upper].
template <typename F>
LineSearchResult ls2(F&& objective, const LineSearchSpec& spec) {
    spec.validate();
    constexpr double golden = 0.3819660112501051;
    constexpr double zeps = 1e-12;
    double a = spec.ls2_lower, b = spec.ls2_upper;
    double x = a + golden * (b - a);
    double w = x, v = x;
    double fx = objective(x);
    int evals = 1;
    double fw = fx, fv = fx;
    double d = 0.0, e = 0.0;

    while (evals < spec.ls2_budget) {
        const double xm = 0.5 * (a + b);
        const double tol1 = spec.ls2_tolerance * std::fabs(x) + zeps;
        const double tol2 = 2.0 * tol1;
        if (std::fabs(x - xm) <= tol2 - 0.5 * (b - a)) break;
        bool take_golden = true;
        if (std::fabs(e) > tol1) {
            // trial parabola through (x,fx), (w,fw), (v,fv)
            const double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::fabs(q);
            const double e_old = e;
            e = d;
            if (std::fabs(p) < std::fabs(0.5 * q * e_old) && p > q * (a - x) && p < q * (b - x)) {
                d = p / q;
                const double u = x + d;
                if (u - a < tol2 || b - u < tol2) d = xm >= x ? tol1 : -tol1;
                take_golden = false;
            }
        }
        if (take_golden) {
            e = (x >= xm ? a : b) - x;
            d = golden * e;
        }
        const double u = std::fabs(d) >= tol1 ? x + d : x + (d >= 0.0 ? tol1 : -tol1);
        const double fu = objective(u);
        ++evals;
        if (fu <= fx) {
            if (u >= x) a = x;
            else b = x;
            v = w; fv = fw;
            w = x; fw = fx;
            x = u; fx = fu;
        } else {
            if (u < x) a = u;
            else b = u;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }

    LineSearchResult res;
    res.ratio = x;
    res.objective = fx;
    res.evaluations = evals;
    return res;
}

}  // namespace bouss
