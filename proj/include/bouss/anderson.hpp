#pragma once

// Anderson acceleration over an arbitrary fixed-point map and inner product.
// The engine sees iterates only as vectors: it forms the E/F difference
// windows, solves the residual minimization in the supplied inner product,
// applies damping, and logs the per-step optimization gain.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bouss {

using Vector = Eigen::VectorXd;
using InnerProduct = std::function<double(const Vector&, const Vector&)>;
using FixedPointMap = std::function<Vector(const Vector&)>;

// Optional per-step damping choice (used to hook Newton line searches in);
// returns the step ratio β in (0,1].
using StepSizeSelector = std::function<double(const Vector& x, const Vector& w, double rnorm)>;

class blowup_error : public std::runtime_error {
public:
    blowup_error(const std::string& what, int iteration) : std::runtime_error(what), iteration(iteration) {}
    int iteration = 0;
};

enum class DepthMode { constant, two_stage };

struct AndersonConfig {
    int depth = 0;  // m; 0 recovers the damped fixed-point iteration
    DepthMode depth_mode = DepthMode::constant;
    int m_small = 1;
    int m_large = 20;
    double stage_threshold = 1e-3;  // B-norm residual at which the 2-stage depth switches
    bool flush_on_switch = false;   // default keeps the accumulated history columns
    double beta = 1.0;              // damping factor
    bool beta_grid = false;         // look-ahead β selection over beta_candidates
    std::vector<double> beta_candidates{0.0625, 0.125, 0.25, 0.5, 1.0};
    double drop_tol = 1e-10;  // near-dependent column drop tolerance
    int max_iterations = 200;
    double tolerance = 1e-8;        // convergence threshold on the residual norm
    double blowup_threshold = 1e4;  // residual norm declaring blowup

    void validate() const {
        if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("anderson: beta must be in (0,1]");
        if (depth < 0) throw std::invalid_argument("anderson: depth must be >= 0");
        if (!(tolerance > 0.0) || !(blowup_threshold > 0.0) || !(drop_tol > 0.0) || !(stage_threshold > 0.0))
            throw std::invalid_argument("anderson: thresholds must be positive");
        if (max_iterations < 1) throw std::invalid_argument("anderson: max_iterations must be >= 1");
        if (depth_mode == DepthMode::two_stage && !(m_small >= 0 && m_small < m_large))
            throw std::invalid_argument("anderson: two-stage depths need m_small < m_large");
        if (beta_grid) {
            if (beta_candidates.empty()) throw std::invalid_argument("anderson: empty beta grid");
            for (double b : beta_candidates)
                if (!(b > 0.0 && b <= 1.0)) throw std::invalid_argument("anderson: beta candidates must be in (0,1]");
        }
    }

    int max_depth() const {
        return depth_mode == DepthMode::constant ? depth : std::max(m_small, m_large);
    }
};

// Depth for the current step: constant m, or the small/large 2-stage choice
// driven by the residual norm.
inline int depth_schedule(double residual_norm, const AndersonConfig& cfg) {
    if (cfg.depth_mode == DepthMode::constant) return cfg.depth;
    return residual_norm > cfg.stage_threshold ? cfg.m_small : cfg.m_large;
}

// Sliding iterate/residual windows. iterates holds x_{k-m-1}..x_{k-1},
// residuals holds w_{k-m}..w_{k-1}; the step about to be taken appends w_k
// and x_k.
struct AndersonHistory {
    std::deque<Vector> iterates;
    std::deque<Vector> residuals;
    std::vector<double> residual_norms;  // ||w_k|| per step
    std::vector<double> gains;           // ξ_k per step
    int steps = 0;                       // completed steps
    bool stage_latched = false;          // 2-stage switch is one-way

    void reset(const Vector& x0) {
        iterates.assign(1, x0);
        residuals.clear();
        residual_norms.clear();
        gains.clear();
        steps = 0;
        stage_latched = false;
    }

    int columns_available() const { return static_cast<int>(residuals.size()); }

    void trim(int capacity) {
        while (static_cast<int>(residuals.size()) > capacity) residuals.pop_front();
        while (static_cast<int>(iterates.size()) > capacity + 1) iterates.pop_front();
    }
};

struct LeastSquaresResult {
    Eigen::VectorXd gamma;
    double objective = 0.0;  // ||w - Fγ|| in the supplied inner product
    int effective_rank = 0;
    std::vector<int> dropped;
};

// argmin_γ ||w - Fγ|| in the supplied inner product by modified Gram-Schmidt
// with a re-orthogonalization pass. Columns whose orthogonalized norm falls
// below drop_tol times their original norm are dropped (their γ is 0). The
// returned objective never exceeds the objective at γ=0.
inline LeastSquaresResult solve_ls(const Vector& w, const std::vector<Vector>& columns, const InnerProduct& ip,
                                   double drop_tol) {
    const int m = static_cast<int>(columns.size());
    LeastSquaresResult out;
    out.gamma = Eigen::VectorXd::Zero(m);
    const double wnorm = std::sqrt(std::max(0.0, ip(w, w)));
    out.objective = wnorm;
    if (m == 0) return out;

    std::vector<Vector> Q;
    std::vector<int> kept;
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(m, m);
    for (int j = 0; j < m; ++j) {
        if (!columns[j].allFinite()) throw std::invalid_argument("solve_ls: non-finite column");
        Vector v = columns[j];
        const double orig = std::sqrt(std::max(0.0, ip(v, v)));
        for (int pass = 0; pass < 2; ++pass)
            for (size_t i = 0; i < Q.size(); ++i) {
                const double c = ip(Q[i], v);
                v -= c * Q[i];
                R(static_cast<int>(i), j) += c;
            }
        const double nrm = std::sqrt(std::max(0.0, ip(v, v)));
        if (orig == 0.0 || !(nrm > drop_tol * orig)) {
            out.dropped.push_back(j);
            continue;
        }
        R(static_cast<int>(Q.size()), j) = nrm;
        Q.push_back(v / nrm);
        kept.push_back(j);
    }
    const int r = static_cast<int>(kept.size());
    out.effective_rank = r;
    if (r == 0) return out;

    Eigen::VectorXd c = Eigen::VectorXd::Zero(r);
    Vector resid = w;
    for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i < r; ++i) {
            const double ci = ip(Q[i], resid);
            resid -= ci * Q[i];
            c[i] += ci;
        }
    const double obj = std::sqrt(std::max(0.0, ip(resid, resid)));

    //  f_{kept[j]} = Σ_{i<=j} R(i, kept[j]) q_i  =>  back substitution
    Eigen::VectorXd g = Eigen::VectorXd::Zero(r);
    for (int i = r - 1; i >= 0; --i) {
        double s = c[i];
        for (int j = i + 1; j < r; ++j) s -= R(i, kept[j]) * g[j];
        g[i] = s / R(i, kept[i]);
    }
    for (int j = 0; j < r; ++j) out.gamma[kept[j]] = g[j];

    if (obj > wnorm) {  // rounding can only lose at γ≈0; γ=0 is always admissible
        out.gamma.setZero();
        out.objective = wnorm;
    } else {
        out.objective = obj;
    }
    return out;
}

namespace detail {

struct StepPlan {
    int m_k = 0;
    double xi = 1.0;
    LeastSquaresResult ls;
    std::vector<Vector> E, F;  // most recent difference first
};

// Resolves the depth for this step, applying the one-way 2-stage switch and
// the optional history flush, and clamps to the available window.
inline int scheduled_depth(AndersonHistory& h, double rnorm, const AndersonConfig& cfg) {
    const int k = h.steps + 1;
    int m = cfg.depth;
    if (cfg.depth_mode == DepthMode::two_stage) {
        if (!h.stage_latched && !(rnorm > cfg.stage_threshold)) {
            h.stage_latched = true;
            if (cfg.flush_on_switch) {
                h.residuals.clear();
                Vector keep = h.iterates.back();
                h.iterates.assign(1, std::move(keep));
            }
        }
        m = h.stage_latched ? cfg.m_large : cfg.m_small;
    }
    m = std::min(m, k - 1);
    m = std::min(m, h.columns_available());
    return std::max(m, 0);
}

inline StepPlan make_plan(const AndersonHistory& h, const Vector& w, double rnorm, int m_k,
                          const AndersonConfig& cfg, const InnerProduct& ip) {
    StepPlan plan;
    plan.m_k = m_k;
    if (m_k == 0) {
        plan.xi = 1.0;
        return plan;
    }
    plan.F.reserve(m_k);
    plan.E.reserve(m_k);
    const int lr = static_cast<int>(h.residuals.size()) - 1;
    const int li = static_cast<int>(h.iterates.size()) - 1;
    plan.F.push_back(w - h.residuals[lr]);
    for (int j = 1; j < m_k; ++j) plan.F.push_back(h.residuals[lr - j + 1] - h.residuals[lr - j]);
    for (int j = 0; j < m_k; ++j) plan.E.push_back(h.iterates[li - j] - h.iterates[li - j - 1]);
    plan.ls = solve_ls(w, plan.F, ip, cfg.drop_tol);
    plan.xi = rnorm > 0.0 ? plan.ls.objective / rnorm : 0.0;
    return plan;
}

//  x_k = x_{k-1} + β w_k - (E_{k-1} + β F_k) γ
inline Vector form_update(const AndersonHistory& h, const StepPlan& plan, const Vector& w, double beta) {
    Vector x = h.iterates.back() + beta * w;
    for (int j = 0; j < plan.m_k; ++j) x -= plan.ls.gamma[j] * (plan.E[j] + beta * plan.F[j]);
    return x;
}

inline void commit(AndersonHistory& h, const Vector& w, Vector x_next, double rnorm, double xi,
                   const AndersonConfig& cfg) {
    h.residuals.push_back(w);
    h.iterates.push_back(std::move(x_next));
    h.residual_norms.push_back(rnorm);
    h.gains.push_back(xi);
    h.steps += 1;
    h.trim(cfg.max_depth());
}

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

struct AAStepResult {
    Vector x_next;
    double rnorm = 0.0;  // ||w_k||
    double xi = 1.0;     // optimization gain ξ_k
    int m_used = 0;
    double beta_used = 1.0;
    Eigen::VectorXd gamma;
    std::vector<int> dropped_columns;
};

// One accelerated step given g_eval = G(x_{k-1}). Updates the history window.
inline AAStepResult aa_step(AndersonHistory& h, const Vector& g_eval, const AndersonConfig& cfg,
                            const InnerProduct& ip) {
    if (h.iterates.empty()) throw std::logic_error("aa_step: history holds no initial iterate");
    if (!g_eval.allFinite()) throw blowup_error("aa_step: fixed-point output has non-finite entries", h.steps + 1);
    const Vector w = g_eval - h.iterates.back();
    const double rnorm = std::sqrt(std::max(0.0, ip(w, w)));
    const int m_k = detail::scheduled_depth(h, rnorm, cfg);
    const detail::StepPlan plan = detail::make_plan(h, w, rnorm, m_k, cfg, ip);

    AAStepResult res;
    res.rnorm = rnorm;
    res.xi = plan.xi;
    res.m_used = m_k;
    res.beta_used = cfg.beta;
    res.gamma = plan.ls.gamma;
    res.dropped_columns = plan.ls.dropped;
    res.x_next = detail::form_update(h, plan, w, cfg.beta);
    detail::commit(h, w, res.x_next, rnorm, plan.xi, cfg);
    return res;
}

enum class SolveStatus { converged, max_iterations, blowup };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::converged: return "converged";
        case SolveStatus::max_iterations: return "F";
        case SolveStatus::blowup: return "B";
    }
    return "?";
}

struct IterationLog {
    int k = 0;
    double rnorm = 0.0;
    double xi = std::numeric_limits<double>::quiet_NaN();     // NaN on terminal rows (no step taken)
    double sigma = std::numeric_limits<double>::quiet_NaN();  // NaN at k=1 and on stagnation
    int m_k = 0;
    double beta_k = std::numeric_limits<double>::quiet_NaN();
};

struct ConvergenceRecord {
    std::vector<IterationLog> iterations;
    SolveStatus status = SolveStatus::max_iterations;
    int iteration_count = 0;
    double seconds = 0.0;
    std::string label;
    std::string diagnostic;
    Vector final_state;
    double final_residual_norm = std::numeric_limits<double>::quiet_NaN();
};

// Runs the accelerated iteration until the residual norm drops below the
// tolerance, exceeds the blowup threshold, or the iteration budget is spent.
// Emits one machine-readable line per iteration to `log` when given:
//   k,residual,xi,sigma,m_k,beta_k,status
inline ConvergenceRecord drive(const FixedPointMap& g, const Vector& x0, const AndersonConfig& cfg,
                               const InnerProduct& ip, const StepSizeSelector& beta_selector = {},
                               std::ostream* log = nullptr) {
    cfg.validate();
    const auto t_start = std::chrono::steady_clock::now();
    ConvergenceRecord rec;
    AndersonHistory h;
    h.reset(x0);

    auto eval_g = [&g](const Vector& x, int k) -> Vector {
        try {
            return g(x);
        } catch (const std::exception& e) {
            throw std::runtime_error("fixed-point operator failed at iteration " + std::to_string(k) + ": " +
                                     e.what());
        }
    };
    auto emit = [&](const IterationLog& il, const char* status) {
        if (!log) return;
        (*log) << il.k << ',' << detail::fmt(il.rnorm) << ',' << detail::fmt(il.xi) << ','
               << detail::fmt(il.sigma) << ',' << il.m_k << ',' << detail::fmt(il.beta_k) << ',' << status
               << '\n';
    };

    Vector g_eval = eval_g(x0, 1);
    Vector w_prev, x_prev2;
    bool done = false;

    for (int k = 1; k <= cfg.max_iterations && !done; ++k) {
        if (!g_eval.allFinite()) {
            rec.status = SolveStatus::blowup;
            rec.iteration_count = k;
            rec.diagnostic = "fixed-point output has non-finite entries";
            rec.final_state = h.iterates.back();
            IterationLog il;
            il.k = k;
            il.rnorm = std::numeric_limits<double>::infinity();
            rec.iterations.push_back(il);
            emit(il, to_string(rec.status));
            done = true;
            break;
        }
        const Vector w = g_eval - h.iterates.back();
        const double rnorm = std::sqrt(std::max(0.0, ip(w, w)));

        IterationLog il;
        il.k = k;
        il.rnorm = rnorm;
        if (k >= 2) {
            const double den = std::sqrt(std::max(0.0, ip(h.iterates.back() - x_prev2, h.iterates.back() - x_prev2)));
            il.sigma = den == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                                  : std::sqrt(std::max(0.0, ip(w - w_prev, w - w_prev))) / den;
        }
        const int m_k = detail::scheduled_depth(h, rnorm, cfg);
        il.m_k = m_k;

        if (rnorm < cfg.tolerance) {
            rec.status = SolveStatus::converged;
            rec.iteration_count = k;
            rec.final_state = g_eval;
            rec.final_residual_norm = rnorm;
            rec.iterations.push_back(il);
            emit(il, to_string(rec.status));
            done = true;
            break;
        }
        if (rnorm > cfg.blowup_threshold) {
            rec.status = SolveStatus::blowup;
            rec.iteration_count = k;
            rec.final_state = h.iterates.back();
            rec.final_residual_norm = rnorm;
            rec.iterations.push_back(il);
            emit(il, to_string(rec.status));
            done = true;
            break;
        }

        const detail::StepPlan plan = detail::make_plan(h, w, rnorm, m_k, cfg, ip);
        il.xi = plan.xi;

        double beta = cfg.beta;
        Vector x_next;
        Vector g_next;
        bool have_g_next = false;
        if (beta_selector) {
            beta = beta_selector(h.iterates.back(), w, rnorm);
            if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("drive: step selector returned ratio outside (0,1]");
            x_next = detail::form_update(h, plan, w, beta);
        } else if (cfg.beta_grid) {
            double best = std::numeric_limits<double>::infinity();
            for (double b : cfg.beta_candidates) {
                Vector xc = detail::form_update(h, plan, w, b);
                Vector gc = eval_g(xc, k + 1);
                const double n = gc.allFinite() ? std::sqrt(std::max(0.0, ip(gc - xc, gc - xc)))
                                                : std::numeric_limits<double>::infinity();
                if (n < best) {
                    best = n;
                    beta = b;
                    x_next = std::move(xc);
                    g_next = std::move(gc);
                    have_g_next = true;
                }
            }
            if (!have_g_next) {  // every candidate blew up; surface it next iteration
                beta = cfg.beta_candidates.front();
                x_next = detail::form_update(h, plan, w, beta);
                g_next = eval_g(x_next, k + 1);
                have_g_next = true;
            }
        } else {
            x_next = detail::form_update(h, plan, w, beta);
        }
        il.beta_k = beta;
        rec.iterations.push_back(il);
        emit(il, "running");

        x_prev2 = h.iterates.back();
        w_prev = w;
        detail::commit(h, w, x_next, rnorm, plan.xi, cfg);
        if (k < cfg.max_iterations) g_eval = have_g_next ? std::move(g_next) : eval_g(h.iterates.back(), k + 1);
    }

    if (!done) {
        rec.status = SolveStatus::max_iterations;
        rec.iteration_count = cfg.max_iterations;
        rec.final_state = h.iterates.back();
        if (!rec.iterations.empty()) rec.final_residual_norm = rec.iterations.back().rnorm;
        if (log) (*log) << "# terminated," << to_string(rec.status) << '\n';
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return rec;
}

}  // namespace bouss
