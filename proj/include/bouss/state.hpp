#pragma once

// Discrete iterate (u, p, θ) and the weighted energy inner product
//   <(v,w),(v',w')>_B = ν(∇v,∇v') + κ(∇w,∇w'),
// realized through the assembled scalar stiffness operator. Pressure is
// carried in the packed vector but excluded from the norm.

#include <Eigen/Sparse>

#include <cmath>
#include <stdexcept>

#include "bouss/assembly.hpp"

namespace bouss {

struct StateLayout {
    int n_scalar = 0;
    int n_pressure = 0;

    int velocity_offset() const { return 0; }
    int pressure_offset() const { return 2 * n_scalar; }
    int temperature_offset() const { return 2 * n_scalar + n_pressure; }
    int total() const { return 3 * n_scalar + n_pressure; }
};

struct State {
    Vec u;      // 2*n_scalar, x-component then y-component
    Vec p;      // n_pressure
    Vec theta;  // n_scalar

    bool all_finite() const { return u.allFinite() && p.allFinite() && theta.allFinite(); }
};

inline Vec pack(const StateLayout& layout, const State& s) {
    Vec x(layout.total());
    x.segment(layout.velocity_offset(), 2 * layout.n_scalar) = s.u;
    x.segment(layout.pressure_offset(), layout.n_pressure) = s.p;
    x.segment(layout.temperature_offset(), layout.n_scalar) = s.theta;
    return x;
}

inline State unpack(const StateLayout& layout, const Vec& x) {
    if (x.size() != layout.total()) throw std::invalid_argument("unpack: bad packed state size");
    State s;
    s.u = x.segment(layout.velocity_offset(), 2 * layout.n_scalar);
    s.p = x.segment(layout.pressure_offset(), layout.n_pressure);
    s.theta = x.segment(layout.temperature_offset(), layout.n_scalar);
    return s;
}

class BInnerProduct {
public:
    BInnerProduct() = default;
    BInnerProduct(SpMat scalar_stiffness, StateLayout layout, double nu, double kappa)
        : A_(std::move(scalar_stiffness)), layout_(layout), nu_(nu), kappa_(kappa) {
        if (A_.rows() != layout_.n_scalar) throw std::invalid_argument("BInnerProduct: stiffness size mismatch");
    }

    const StateLayout& layout() const { return layout_; }

    double dot(const Vec& x, const Vec& y) const {
        const int ns = layout_.n_scalar;
        double s = 0.0;
        s += nu_ * x.segment(0, ns).dot(A_ * y.segment(0, ns));
        s += nu_ * x.segment(ns, ns).dot(A_ * y.segment(ns, ns));
        const int toff = layout_.temperature_offset();
        s += kappa_ * x.segment(toff, ns).dot(A_ * y.segment(toff, ns));
        return s;
    }

    double norm(const Vec& x) const { return std::sqrt(std::max(0.0, dot(x, x))); }

    double dot_state(const State& a, const State& b) const {
        const int ns = layout_.n_scalar;
        double s = 0.0;
        s += nu_ * a.u.segment(0, ns).dot(A_ * b.u.segment(0, ns));
        s += nu_ * a.u.segment(ns, ns).dot(A_ * b.u.segment(ns, ns));
        s += kappa_ * a.theta.dot(A_ * b.theta);
        return s;
    }

    double norm_state(const State& a) const { return std::sqrt(std::max(0.0, dot_state(a, a))); }

private:
    SpMat A_;  // unscaled scalar P2 stiffness
    StateLayout layout_;
    double nu_ = 1.0, kappa_ = 1.0;
};

}  // namespace bouss
