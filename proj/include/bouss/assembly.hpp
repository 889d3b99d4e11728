#pragma once

// Sparse operators of the weak forms: diffusion, skew-symmetrized convection,
// divergence/pressure coupling, buoyancy, Newton linearization blocks, loads.

#include <Eigen/Sparse>

#include <array>
#include <functional>
#include <stdexcept>
#include <vector>

#include "bouss/fespace.hpp"
#include "bouss/mesh.hpp"
#include "bouss/quadrature.hpp"

namespace bouss {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

struct ProblemConfig {
    double nu = 0.01;     // kinematic viscosity, 1/Re
    double kappa = 0.01;  // thermal conductivity, 1/(Re*Pr)
    double Ri = 1.0;      // Richardson number
    std::function<std::array<double, 2>(double, double)> momentum_source;  // f (empty = 0)
    std::function<double(double, double)> thermal_source;                  // gamma (empty = 0)

    double rayleigh() const { return Ri / (nu * kappa); }  // Ra = Ri*Re^2*Pr

    void validate() const {
        if (!(nu > 0.0)) throw std::invalid_argument("ProblemConfig: nu must be positive");
        if (!(kappa > 0.0)) throw std::invalid_argument("ProblemConfig: kappa must be positive");
        if (!(Ri >= 0.0)) throw std::invalid_argument("ProblemConfig: Ri must be nonnegative");
    }

    // Heated cavity parameters at a given Rayleigh number (nu=kappa=0.01,
    // Ra swept through Ri, no body sources).
    static ProblemConfig cavity(double Ra) {
        ProblemConfig c;
        c.nu = 0.01;
        c.kappa = 0.01;
        c.Ri = Ra * c.nu * c.kappa;
        return c;
    }
};

// Precomputes per-cell geometry and P2 physical gradients at the quadrature
// points; all assemble calls share one degree-5 rule.
class Assembler {
public:
    Assembler(const Mesh& mesh, const DofMap& dofs)
        : mesh_(mesh), dofs_(dofs), quad_(triangle_rule_degree5()) {
        const int nt = mesh_.n_triangles();
        nq_ = quad_.size();
        p2val_.resize(nq_);
        p1val_.resize(nq_);
        for (int q = 0; q < nq_; ++q) {
            p2_shape(quad_.points[q], p2val_[q]);
            p1_shape(quad_.points[q], p1val_[q]);
        }
        detj_.resize(nt);
        grads_.resize(static_cast<size_t>(nt) * nq_ * 12);
        qpoints_.resize(static_cast<size_t>(nt) * nq_);
        std::array<std::array<double, 2>, 6> gref;
        for (int t = 0; t < nt; ++t) {
            const auto g = detail::cell_geometry(mesh_, t);
            detj_[t] = g.det;
            for (int q = 0; q < nq_; ++q) {
                p2_shape_grad(quad_.points[q], gref);
                double* gp = grad_ptr(t, q);
                for (int i = 0; i < 6; ++i) {
                    gp[2 * i] = g.inv_jt[0][0] * gref[i][0] + g.inv_jt[0][1] * gref[i][1];
                    gp[2 * i + 1] = g.inv_jt[1][0] * gref[i][0] + g.inv_jt[1][1] * gref[i][1];
                }
                qpoints_[static_cast<size_t>(t) * nq_ + q] = detail::physical_point(mesh_, t, quad_.points[q]);
            }
        }
    }

    const QuadratureRule& quadrature() const { return quad_; }
    const DofMap& dofs() const { return dofs_; }
    const Mesh& mesh() const { return mesh_; }

    // (∇ψ_j, ∇ψ_i) on the scalar P2 space
    SpMat scalar_stiffness() const {
        std::vector<Triplet> trip;
        trip.reserve(cells() * 36);
        for (int t = 0; t < cells(); ++t) {
            double loc[6][6] = {};
            for (int q = 0; q < nq_; ++q) {
                const double w = quad_.weights[q] * detj_[t];
                const double* gp = grad_ptr(t, q);
                for (int i = 0; i < 6; ++i)
                    for (int j = 0; j < 6; ++j)
                        loc[i][j] += w * (gp[2 * i] * gp[2 * j] + gp[2 * i + 1] * gp[2 * j + 1]);
            }
            scatter6(trip, t, loc);
        }
        return from_triplets(dofs_.n_scalar, dofs_.n_scalar, trip);
    }

    // (ψ_j, ψ_i) on the scalar P2 space
    SpMat scalar_mass() const {
        std::vector<Triplet> trip;
        trip.reserve(cells() * 36);
        for (int t = 0; t < cells(); ++t) {
            double loc[6][6] = {};
            for (int q = 0; q < nq_; ++q) {
                const double w = quad_.weights[q] * detj_[t];
                const auto& val = p2val_[q];
                for (int i = 0; i < 6; ++i)
                    for (int j = 0; j < 6; ++j) loc[i][j] += w * val[i] * val[j];
            }
            scatter6(trip, t, loc);
        }
        return from_triplets(dofs_.n_scalar, dofs_.n_scalar, trip);
    }

    // coeff*(∇ψ_j, ∇ψ_i); coefficient 0 yields the zero operator
    SpMat diffusion_temperature(double coeff) const {
        if (coeff == 0.0) return SpMat(dofs_.n_scalar, dofs_.n_scalar);
        return coeff * scalar_stiffness();
    }

    // Block-diagonal vector version on both velocity components
    SpMat diffusion_velocity(double coeff) const {
        if (coeff == 0.0) return SpMat(dofs_.n_velocity, dofs_.n_velocity);
        const SpMat A = scalar_stiffness();
        std::vector<Triplet> trip;
        trip.reserve(2 * A.nonZeros());
        append_block(trip, A, 0, 0, coeff);
        append_block(trip, A, dofs_.n_scalar, dofs_.n_scalar, coeff);
        return from_triplets(dofs_.n_velocity, dofs_.n_velocity, trip);
    }

    // Skew form on the scalar P2 space for advecting velocity a:
    //   C_ij = 1/2[(a·∇ψ_j, ψ_i) - (a·∇ψ_i, ψ_j)],
    // antisymmetrized exactly at the element level so vᵀCv vanishes.
    SpMat convection_scalar(const Vec& velocity) const {
        check_velocity_size(velocity);
        std::vector<Triplet> trip;
        trip.reserve(cells() * 36);
        const int ns = dofs_.n_scalar;
        for (int t = 0; t < cells(); ++t) {
            const auto& cd = dofs_.cell_scalar[t];
            double p[6][6] = {};
            for (int q = 0; q < nq_; ++q) {
                const double w = quad_.weights[q] * detj_[t];
                const auto& val = p2val_[q];
                const double* gp = grad_ptr(t, q);
                double ax = 0.0, ay = 0.0;
                for (int i = 0; i < 6; ++i) {
                    ax += velocity[cd[i]] * val[i];
                    ay += velocity[ns + cd[i]] * val[i];
                }
                for (int j = 0; j < 6; ++j) {
                    const double adg = ax * gp[2 * j] + ay * gp[2 * j + 1];
                    for (int i = 0; i < 6; ++i) p[i][j] += w * val[i] * adg;
                }
            }
            double loc[6][6];
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j) loc[i][j] = 0.5 * (p[i][j] - p[j][i]);
            scatter6(trip, t, loc);
        }
        return from_triplets(ns, ns, trip);
    }

    // blockdiag(C, C): the vector trilinear form does not couple components
    SpMat convection_velocity(const Vec& velocity) const {
        const SpMat C = convection_scalar(velocity);
        std::vector<Triplet> trip;
        trip.reserve(2 * C.nonZeros());
        append_block(trip, C, 0, 0, 1.0);
        append_block(trip, C, dofs_.n_scalar, dofs_.n_scalar, 1.0);
        return from_triplets(dofs_.n_velocity, dofs_.n_velocity, trip);
    }

    // D[q, (c,j)] = (∂_c ψ_j, p1_q): pressure row, velocity column
    SpMat divergence() const {
        std::vector<Triplet> trip;
        trip.reserve(cells() * 36);
        const int ns = dofs_.n_scalar;
        for (int t = 0; t < cells(); ++t) {
            const auto& cd = dofs_.cell_scalar[t];
            const auto& cp = dofs_.cell_pressure[t];
            double loc[3][12] = {};
            for (int q = 0; q < nq_; ++q) {
                const double w = quad_.weights[q] * detj_[t];
                const double* gp = grad_ptr(t, q);
                const auto& pv = p1val_[q];
                for (int ip = 0; ip < 3; ++ip)
                    for (int j = 0; j < 6; ++j) {
                        loc[ip][j] += w * pv[ip] * gp[2 * j];
                        loc[ip][6 + j] += w * pv[ip] * gp[2 * j + 1];
                    }
            }
            for (int ip = 0; ip < 3; ++ip)
                for (int j = 0; j < 6; ++j) {
                    trip.emplace_back(cp[ip], cd[j], loc[ip][j]);
                    trip.emplace_back(cp[ip], ns + cd[j], loc[ip][6 + j]);
                }
        }
        return from_triplets(dofs_.n_pressure, dofs_.n_velocity, trip);
    }

    // m_q = ∫ p1_q, the single mean-zero constraint row for pressure
    Vec pressure_integral() const {
        Vec m = Vec::Zero(dofs_.n_pressure);
        for (int t = 0; t < cells(); ++t) {
            const auto& cp = dofs_.cell_pressure[t];
            for (int q = 0; q < nq_; ++q) {
                const double w = quad_.weights[q] * detj_[t];
                for (int ip = 0; ip < 3; ++ip) m[cp[ip]] += w * p1val_[q][ip];
            }
        }
        return m;
    }

    // Ri*(<0,θ>ᵀ, v): temperature mass coupled into the vertical velocity rows
    SpMat buoyancy(double Ri) const {
        SpMat out(dofs_.n_velocity, dofs_.n_scalar);
        if (Ri == 0.0) return out;
        std::vector<Triplet> trip;
        trip.reserve(cells() * 36);
        const int ns = dofs_.n_scalar;
        for (int t = 0; t < cells(); ++t) {
            const auto& cd = dofs_.cell_scalar[t];
            for (int q = 0; q < nq_; ++q) {
                const double w = Ri * quad_.weights[q] * detj_[t];
                const auto& val = p2val_[q];
                for (int i = 0; i < 6; ++i)
                    for (int j = 0; j < 6; ++j) trip.emplace_back(ns + cd[i], cd[j], w * val[i] * val[j]);
            }
        }
        out.setFromTriplets(trip.begin(), trip.end());
        return out;
    }

    // Newton linearization in the transporting argument for the momentum
    // equation: N[(d,i),(c,j)] = b(e_c ψ_j, u_old, e_d ψ_i).
    SpMat newton_convection_velocity(const Vec& u_old) const {
        check_velocity_size(u_old);
        std::vector<Triplet> trip;
        trip.reserve(cells() * 144);
        const int ns = dofs_.n_scalar;
        for (int t = 0; t < cells(); ++t) {
            const auto& cd = dofs_.cell_scalar[t];
            double loc[12][12] = {};
            for (int q = 0; q < nq_; ++q) {
                const double w = quad_.weights[q] * detj_[t];
                const auto& val = p2val_[q];
                const double* gp = grad_ptr(t, q);
                double uval[2] = {0.0, 0.0};
                double ugrad[2][2] = {{0, 0}, {0, 0}};  // ugrad[c][d] = ∂_c u_d
                for (int i = 0; i < 6; ++i) {
                    const double ux = u_old[cd[i]], uy = u_old[ns + cd[i]];
                    uval[0] += ux * val[i];
                    uval[1] += uy * val[i];
                    ugrad[0][0] += ux * gp[2 * i];
                    ugrad[1][0] += ux * gp[2 * i + 1];
                    ugrad[0][1] += uy * gp[2 * i];
                    ugrad[1][1] += uy * gp[2 * i + 1];
                }
                for (int d = 0; d < 2; ++d)
                    for (int c = 0; c < 2; ++c)
                        for (int i = 0; i < 6; ++i)
                            for (int j = 0; j < 6; ++j)
                                loc[d * 6 + i][c * 6 + j] +=
                                    0.5 * w *
                                    (val[i] * val[j] * ugrad[c][d] - val[j] * gp[2 * i + c] * uval[d]);
            }
            for (int d = 0; d < 2; ++d)
                for (int c = 0; c < 2; ++c)
                    for (int i = 0; i < 6; ++i)
                        for (int j = 0; j < 6; ++j)
                            trip.emplace_back(d * ns + cd[i], c * ns + cd[j], loc[d * 6 + i][c * 6 + j]);
        }
        return from_triplets(dofs_.n_velocity, dofs_.n_velocity, trip);
    }

    // Same linearization for the energy equation:
    // T[i,(c,j)] = b*(e_c ψ_j, θ_old, ψ_i)
    SpMat newton_convection_temperature(const Vec& theta_old) const {
        if (theta_old.size() != dofs_.n_scalar)
            throw std::invalid_argument("newton_convection_temperature: bad coefficient size");
        std::vector<Triplet> trip;
        trip.reserve(cells() * 72);
        const int ns = dofs_.n_scalar;
        for (int t = 0; t < cells(); ++t) {
            const auto& cd = dofs_.cell_scalar[t];
            double loc[6][12] = {};
            for (int q = 0; q < nq_; ++q) {
                const double w = quad_.weights[q] * detj_[t];
                const auto& val = p2val_[q];
                const double* gp = grad_ptr(t, q);
                double th = 0.0, thg[2] = {0.0, 0.0};
                for (int i = 0; i < 6; ++i) {
                    th += theta_old[cd[i]] * val[i];
                    thg[0] += theta_old[cd[i]] * gp[2 * i];
                    thg[1] += theta_old[cd[i]] * gp[2 * i + 1];
                }
                for (int c = 0; c < 2; ++c)
                    for (int i = 0; i < 6; ++i)
                        for (int j = 0; j < 6; ++j)
                            loc[i][c * 6 + j] +=
                                0.5 * w * (val[i] * val[j] * thg[c] - val[j] * gp[2 * i + c] * th);
            }
            for (int c = 0; c < 2; ++c)
                for (int i = 0; i < 6; ++i)
                    for (int j = 0; j < 6; ++j) trip.emplace_back(cd[i], c * ns + cd[j], loc[i][c * 6 + j]);
        }
        return from_triplets(dofs_.n_scalar, dofs_.n_velocity, trip);
    }

    // (γ, ψ_i) over the scalar P2 space; empty function = zero load
    Vec load_scalar(const std::function<double(double, double)>& f) const {
        Vec b = Vec::Zero(dofs_.n_scalar);
        if (!f) return b;
        for (int t = 0; t < cells(); ++t) {
            const auto& cd = dofs_.cell_scalar[t];
            for (int q = 0; q < nq_; ++q) {
                const double w = quad_.weights[q] * detj_[t];
                const Vertex& x = qpoints_[static_cast<size_t>(t) * nq_ + q];
                const double fx = f(x[0], x[1]);
                for (int i = 0; i < 6; ++i) b[cd[i]] += w * fx * p2val_[q][i];
            }
        }
        return b;
    }

    // (f, v) over the vector P2 space
    Vec load_velocity(const std::function<std::array<double, 2>(double, double)>& f) const {
        Vec b = Vec::Zero(dofs_.n_velocity);
        if (!f) return b;
        const int ns = dofs_.n_scalar;
        for (int t = 0; t < cells(); ++t) {
            const auto& cd = dofs_.cell_scalar[t];
            for (int q = 0; q < nq_; ++q) {
                const double w = quad_.weights[q] * detj_[t];
                const Vertex& x = qpoints_[static_cast<size_t>(t) * nq_ + q];
                const auto fv = f(x[0], x[1]);
                for (int i = 0; i < 6; ++i) {
                    b[cd[i]] += w * fv[0] * p2val_[q][i];
                    b[ns + cd[i]] += w * fv[1] * p2val_[q][i];
                }
            }
        }
        return b;
    }

    // Appends scale*op(M) into a triplet list with its (0,0) entry at
    // (row_off, col_off); op is the identity or the transpose.
    static void append_block(std::vector<Triplet>& trip, const SpMat& M, int row_off, int col_off,
                             double scale, bool transpose = false) {
        for (int k = 0; k < M.outerSize(); ++k)
            for (SpMat::InnerIterator it(M, k); it; ++it) {
                if (transpose)
                    trip.emplace_back(row_off + static_cast<int>(it.col()), col_off + static_cast<int>(it.row()),
                                      scale * it.value());
                else
                    trip.emplace_back(row_off + static_cast<int>(it.row()), col_off + static_cast<int>(it.col()),
                                      scale * it.value());
            }
    }

private:
    int cells() const { return mesh_.n_triangles(); }
    double* grad_ptr(int t, int q) { return grads_.data() + (static_cast<size_t>(t) * nq_ + q) * 12; }
    const double* grad_ptr(int t, int q) const { return grads_.data() + (static_cast<size_t>(t) * nq_ + q) * 12; }

    void check_velocity_size(const Vec& v) const {
        if (v.size() != dofs_.n_velocity) throw std::invalid_argument("assembler: bad velocity coefficient size");
        if (!v.allFinite()) throw std::invalid_argument("assembler: non-finite velocity coefficients");
    }

    void scatter6(std::vector<Triplet>& trip, int t, const double loc[6][6]) const {
        const auto& cd = dofs_.cell_scalar[t];
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) trip.emplace_back(cd[i], cd[j], loc[i][j]);
    }

    static SpMat from_triplets(int rows, int cols, const std::vector<Triplet>& trip) {
        SpMat m(rows, cols);
        m.setFromTriplets(trip.begin(), trip.end());
        return m;
    }

    const Mesh& mesh_;
    const DofMap& dofs_;
    QuadratureRule quad_;
    int nq_ = 0;
    std::vector<double> detj_;
    std::vector<std::array<double, 6>> p2val_;
    std::vector<std::array<double, 3>> p1val_;
    std::vector<double> grads_;  // [cell][qp][basis][xy]
    std::vector<Vertex> qpoints_;
};

// --- Dirichlet elimination -------------------------------------------------

// Symmetric row/column removal with lifting of the prescribed values into the
// right-hand side.
struct DirichletReduction {
    std::vector<int> full_to_reduced;  // -1 on constrained dofs
    std::vector<int> reduced_to_full;
    Vec values;  // full-sized; constrained entries hold the boundary values

    int n_reduced() const { return static_cast<int>(reduced_to_full.size()); }
};

inline DirichletReduction make_reduction(const std::vector<uint8_t>& mask, const Vec& values) {
    if (static_cast<int>(mask.size()) != values.size())
        throw std::invalid_argument("make_reduction: mask/value size mismatch");
    DirichletReduction r;
    r.values = values;
    r.full_to_reduced.assign(mask.size(), -1);
    for (size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) {
            r.full_to_reduced[i] = static_cast<int>(r.reduced_to_full.size());
            r.reduced_to_full.push_back(static_cast<int>(i));
        }
    }
    return r;
}

struct ReducedSystem {
    SpMat A;
    Vec b;
};

inline ReducedSystem eliminate_dirichlet(const SpMat& A, const Vec& b, const DirichletReduction& red) {
    if (A.rows() != b.size() || A.rows() != static_cast<Eigen::Index>(red.full_to_reduced.size()))
        throw std::invalid_argument("eliminate_dirichlet: dimension mismatch");
    const int nr = red.n_reduced();
    ReducedSystem out;
    out.b = Vec(nr);
    for (int i = 0; i < nr; ++i) out.b[i] = b[red.reduced_to_full[i]];
    std::vector<Triplet> trip;
    trip.reserve(A.nonZeros());
    for (int k = 0; k < A.outerSize(); ++k) {
        for (SpMat::InnerIterator it(A, k); it; ++it) {
            const int r = red.full_to_reduced[it.row()];
            if (r < 0) continue;
            const int c = red.full_to_reduced[it.col()];
            if (c < 0)
                out.b[r] -= it.value() * red.values[it.col()];
            else
                trip.emplace_back(r, c, it.value());
        }
    }
    out.A = SpMat(nr, nr);
    out.A.setFromTriplets(trip.begin(), trip.end());
    return out;
}

inline Vec expand_solution(const DirichletReduction& red, const Vec& reduced) {
    Vec full = red.values;
    for (int i = 0; i < red.n_reduced(); ++i) full[red.reduced_to_full[i]] = reduced[i];
    return full;
}

}  // namespace bouss
