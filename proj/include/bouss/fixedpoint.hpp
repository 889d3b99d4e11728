#pragma once

// The two fixed-point maps on discrete states: the decoupled Picard solution
// operator (temperature transport first, then the Oseen system) and the fully
// coupled Newton step, plus residuals and small-data theory diagnostics.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "bouss/assembly.hpp"
#include "bouss/fespace.hpp"
#include "bouss/linsolve.hpp"
#include "bouss/mesh.hpp"
#include "bouss/state.hpp"

namespace bouss {

struct ResidualInfo {
    Vec w;       // velocity difference
    Vec z;       // temperature difference
    Vec p_diff;  // recorded but excluded from the norm
    double bnorm = 0.0;
};

struct TheoryEstimates {
    double C_P = 1.0;        // Poincaré constant
    double M = 1.0;          // trilinear form bound
    double f_neg1 = 0.0;     // ||f||_{-1}
    double gamma_neg1 = 0.0; // ||γ||_{-1}
};

struct TheoryDiagnostics {
    double K1 = 0.0;
    double K2 = 0.0;
    double eta = 0.0;
    double uniqueness_lhs1 = 0.0, uniqueness_lhs2 = 0.0;  // small-data pair
    bool uniqueness_ok1 = false, uniqueness_ok2 = false;
    double strong_lhs1 = 0.0, strong_lhs2 = 0.0;          // stronger η-form pair
    bool strong_ok1 = false, strong_ok2 = false;
};

inline TheoryDiagnostics theory_diagnostics(const ProblemConfig& cfg, const TheoryEstimates& est) {
    if (!(est.C_P > 0.0) || !(est.M > 0.0) || est.f_neg1 < 0.0 || est.gamma_neg1 < 0.0)
        throw std::invalid_argument("theory_diagnostics: estimates must be positive");
    TheoryDiagnostics d;
    const double nu = cfg.nu, kappa = cfg.kappa, Ri = cfg.Ri;
    d.K1 = Ri * est.C_P * est.C_P / (nu * kappa) * est.gamma_neg1 + est.f_neg1 / nu;
    d.K2 = est.gamma_neg1 / kappa;
    d.eta = std::min(nu, kappa);
    d.uniqueness_lhs1 = est.M / nu * (2.0 * d.K1 + est.M * d.K2 * d.K2 / kappa);
    d.uniqueness_lhs2 = Ri * Ri * std::pow(est.C_P, 4) / (nu * kappa);
    d.uniqueness_ok1 = d.uniqueness_lhs1 < 1.0;
    d.uniqueness_ok2 = d.uniqueness_lhs2 < 1.0;
    const double inv_eta2 = 1.0 / (d.eta * d.eta);
    d.strong_lhs1 = inv_eta2 * est.M *
                    (2.0 * (Ri * est.C_P * est.C_P / kappa * est.gamma_neg1 + est.f_neg1) +
                     est.M * est.gamma_neg1 * est.gamma_neg1 / (kappa * kappa));
    d.strong_lhs2 = Ri * est.C_P * est.C_P / d.eta;
    d.strong_ok1 = d.strong_lhs1 < 1.0;
    d.strong_ok2 = d.strong_lhs2 < 1.0;
    return d;
}

// σ_k = ||w_{k+1} - w_k||_B / ||x_k - x_{k-1}||_B; NaN when the iteration
// stagnated (zero denominator).
inline double sigma_estimate(const BInnerProduct& ip, const Vec& w_next, const Vec& w_cur, const Vec& x_cur,
                             const Vec& x_prev) {
    const double den = ip.norm(x_cur - x_prev);
    if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return ip.norm(w_next - w_cur) / den;
}

class BoussinesqProblem {
public:
    BoussinesqProblem(Mesh mesh, const ElementFamily& family, const BoundarySpec& bc, const ProblemConfig& cfg,
                      SolverOptions solver = {})
        : mesh_(std::move(mesh)),
          cfg_(cfg),
          solver_(std::move(solver)),
          dofs_(build_dofmap(mesh_, family, bc)),
          assembler_(mesh_, dofs_) {
        cfg_.validate();
        layout_.n_scalar = dofs_.n_scalar;
        layout_.n_pressure = dofs_.n_pressure;

        scalar_stiffness_ = assembler_.scalar_stiffness();
        bip_ = BInnerProduct(scalar_stiffness_, layout_, cfg_.nu, cfg_.kappa);
        visc_ = assembler_.diffusion_velocity(cfg_.nu);
        kdiff_ = assembler_.diffusion_temperature(cfg_.kappa);
        div_ = assembler_.divergence();
        p_integral_ = assembler_.pressure_integral();
        buoyancy_ = assembler_.buoyancy(cfg_.Ri);
        f_load_ = assembler_.load_velocity(cfg_.momentum_source);
        gamma_load_ = assembler_.load_scalar(cfg_.thermal_source);

        const int ns = dofs_.n_scalar;
        temp_reduction_ = make_reduction(dofs_.temperature_dirichlet,
                                         Eigen::Map<const Vec>(dofs_.temperature_value.data(), ns));

        // Oseen unknowns: [u; p; λ] with no-slip velocity eliminated
        {
            std::vector<uint8_t> mask(oseen_dim(), 0);
            for (int i = 0; i < ns; ++i)
                if (dofs_.velocity_dirichlet[i]) mask[i] = mask[ns + i] = 1;
            oseen_reduction_ = make_reduction(mask, Vec::Zero(oseen_dim()));
        }
        // Newton unknowns: [u; p; θ; λ]
        {
            std::vector<uint8_t> mask(newton_dim(), 0);
            Vec values = Vec::Zero(newton_dim());
            for (int i = 0; i < ns; ++i)
                if (dofs_.velocity_dirichlet[i]) mask[i] = mask[ns + i] = 1;
            const int toff = 2 * ns + dofs_.n_pressure;
            for (int i = 0; i < ns; ++i)
                if (dofs_.temperature_dirichlet[i]) {
                    mask[toff + i] = 1;
                    values[toff + i] = dofs_.temperature_value[i];
                }
            newton_reduction_ = make_reduction(mask, values);
        }
    }

    const Mesh& mesh() const { return mesh_; }
    const DofMap& dofs() const { return dofs_; }
    const ProblemConfig& config() const { return cfg_; }
    const StateLayout& layout() const { return layout_; }
    const BInnerProduct& b_inner_product() const { return bip_; }
    const Assembler& assembler() const { return assembler_; }

    // u0 = 0, θ0 = 0 in the interior with the Dirichlet lifting applied.
    State initial_state() const {
        State s;
        s.u = Vec::Zero(dofs_.n_velocity);
        s.p = Vec::Zero(dofs_.n_pressure);
        s.theta = Vec::Zero(dofs_.n_scalar);
        for (int i = 0; i < dofs_.n_scalar; ++i)
            if (dofs_.temperature_dirichlet[i]) s.theta[i] = dofs_.temperature_value[i];
        return s;
    }

    // One application of the decoupled solution operator: solve the
    // temperature transport with advecting velocity u_{k-1}, then the Oseen
    // system with the fresh buoyancy load. The ordering is normative.
    State picard_apply(const State& s) const {
        check_state(s);
        const SpMat C = assembler_.convection_scalar(s.u);

        Vec theta;
        {
            const SpMat At = kdiff_ + C;
            const auto reduced = eliminate_dirichlet(At, gamma_load_, temp_reduction_);
            theta = expand_solution(temp_reduction_, stage_solve(reduced, "temperature"));
        }

        const int ns = dofs_.n_scalar;
        const int nv = dofs_.n_velocity;
        const int np = dofs_.n_pressure;
        std::vector<Triplet> trip;
        trip.reserve(static_cast<size_t>(visc_.nonZeros()) + 2 * C.nonZeros() + 2 * div_.nonZeros() + 2 * np);
        Assembler::append_block(trip, visc_, 0, 0, 1.0);
        Assembler::append_block(trip, C, 0, 0, 1.0);
        Assembler::append_block(trip, C, ns, ns, 1.0);
        Assembler::append_block(trip, div_, 0, nv, -1.0, /*transpose=*/true);
        Assembler::append_block(trip, div_, nv, 0, 1.0);
        for (int ip = 0; ip < np; ++ip) {
            trip.emplace_back(nv + ip, nv + np, p_integral_[ip]);
            trip.emplace_back(nv + np, nv + ip, p_integral_[ip]);
        }
        SpMat A(oseen_dim(), oseen_dim());
        A.setFromTriplets(trip.begin(), trip.end());

        Vec rhs = Vec::Zero(oseen_dim());
        rhs.head(nv) = f_load_ + buoyancy_ * theta;

        const auto reduced = eliminate_dirichlet(A, rhs, oseen_reduction_);
        const Vec x = expand_solution(oseen_reduction_, stage_solve(reduced, "momentum"));

        State out;
        out.u = x.head(nv);
        out.p = x.segment(nv, np);
        out.theta = std::move(theta);
        return out;
    }

    // One Newton step: assemble the fully coupled block system linearized at
    // the current iterate and solve for the next iterate directly.
    State newton_apply(const State& s) const {
        check_state(s);
        const int ns = dofs_.n_scalar;
        const int nv = dofs_.n_velocity;
        const int np = dofs_.n_pressure;
        const int toff = nv + np;
        const int lam = toff + ns;

        const SpMat C = assembler_.convection_scalar(s.u);
        const SpMat Nv = assembler_.newton_convection_velocity(s.u);
        const SpMat Nt = assembler_.newton_convection_temperature(s.theta);

        std::vector<Triplet> trip;
        trip.reserve(static_cast<size_t>(visc_.nonZeros()) + 3 * C.nonZeros() + Nv.nonZeros() + Nt.nonZeros() +
                     2 * div_.nonZeros() + buoyancy_.nonZeros() + kdiff_.nonZeros() + 2 * np);
        Assembler::append_block(trip, visc_, 0, 0, 1.0);
        Assembler::append_block(trip, C, 0, 0, 1.0);
        Assembler::append_block(trip, C, ns, ns, 1.0);
        Assembler::append_block(trip, Nv, 0, 0, 1.0);
        Assembler::append_block(trip, div_, 0, nv, -1.0, /*transpose=*/true);
        Assembler::append_block(trip, buoyancy_, 0, toff, -1.0);
        Assembler::append_block(trip, div_, nv, 0, 1.0);
        Assembler::append_block(trip, Nt, toff, 0, 1.0);
        Assembler::append_block(trip, kdiff_, toff, toff, 1.0);
        Assembler::append_block(trip, C, toff, toff, 1.0);
        for (int ip = 0; ip < np; ++ip) {
            trip.emplace_back(nv + ip, lam, p_integral_[ip]);
            trip.emplace_back(lam, nv + ip, p_integral_[ip]);
        }
        SpMat A(newton_dim(), newton_dim());
        A.setFromTriplets(trip.begin(), trip.end());

        Vec rhs = Vec::Zero(newton_dim());
        rhs.segment(0, ns) = C * s.u.head(ns);
        rhs.segment(ns, ns) = C * s.u.tail(ns);
        rhs.head(nv) += f_load_;
        rhs.segment(toff, ns) = gamma_load_ + C * s.theta;

        const auto reduced = eliminate_dirichlet(A, rhs, newton_reduction_);
        const Vec x = expand_solution(newton_reduction_, stage_solve(reduced, "newton"));

        State out;
        out.u = x.head(nv);
        out.p = x.segment(nv, np);
        out.theta = x.segment(toff, ns);
        return out;
    }

    ResidualInfo residual(const State& current, const State& next) const {
        if (current.u.size() != next.u.size() || current.theta.size() != next.theta.size() ||
            current.p.size() != next.p.size())
            throw std::invalid_argument("residual: state dimension mismatch");
        ResidualInfo r;
        r.w = next.u - current.u;
        r.z = next.theta - current.theta;
        r.p_diff = next.p - current.p;
        State d;
        d.u = r.w;
        d.p = r.p_diff;
        d.theta = r.z;
        r.bnorm = bip_.norm_state(d);
        return r;
    }

    // --- diagnostics used by tests and the benchmark ---

    double divergence_l2(const State& s) const {
        const auto& quad = assembler_.quadrature();
        const int ns = dofs_.n_scalar;
        double acc = 0.0;
        for (int t = 0; t < mesh_.n_triangles(); ++t) {
            const auto sv = shape_values_p2(mesh_, t, quad);
            const auto& cd = dofs_.cell_scalar[t];
            for (int q = 0; q < quad.size(); ++q) {
                double div = 0.0;
                for (int i = 0; i < 6; ++i)
                    div += s.u[cd[i]] * sv.grads[q][i][0] + s.u[ns + cd[i]] * sv.grads[q][i][1];
                acc += quad.weights[q] * sv.det_jacobian * div * div;
            }
        }
        return std::sqrt(acc);
    }

    template <typename F2>
    double velocity_l2_error(const State& s, F2&& exact) const {
        const auto& quad = assembler_.quadrature();
        const int ns = dofs_.n_scalar;
        double acc = 0.0;
        for (int t = 0; t < mesh_.n_triangles(); ++t) {
            const auto sv = shape_values_p2(mesh_, t, quad);
            const auto& cd = dofs_.cell_scalar[t];
            for (int q = 0; q < quad.size(); ++q) {
                const Vertex x = detail::physical_point(mesh_, t, quad.points[q]);
                const auto ue = exact(x[0], x[1]);
                double uh0 = 0.0, uh1 = 0.0;
                for (int i = 0; i < 6; ++i) {
                    uh0 += s.u[cd[i]] * sv.values[q][i];
                    uh1 += s.u[ns + cd[i]] * sv.values[q][i];
                }
                const double d0 = uh0 - ue[0], d1 = uh1 - ue[1];
                acc += quad.weights[q] * sv.det_jacobian * (d0 * d0 + d1 * d1);
            }
        }
        return std::sqrt(acc);
    }

    template <typename F>
    double temperature_l2_error(const State& s, F&& exact) const {
        const auto& quad = assembler_.quadrature();
        double acc = 0.0;
        for (int t = 0; t < mesh_.n_triangles(); ++t) {
            const auto sv = shape_values_p2(mesh_, t, quad);
            const auto& cd = dofs_.cell_scalar[t];
            for (int q = 0; q < quad.size(); ++q) {
                const Vertex x = detail::physical_point(mesh_, t, quad.points[q]);
                double th = 0.0;
                for (int i = 0; i < 6; ++i) th += s.theta[cd[i]] * sv.values[q][i];
                const double d = th - exact(x[0], x[1]);
                acc += quad.weights[q] * sv.det_jacobian * d * d;
            }
        }
        return std::sqrt(acc);
    }

private:
    int oseen_dim() const { return dofs_.n_velocity + dofs_.n_pressure + 1; }
    int newton_dim() const { return dofs_.n_velocity + dofs_.n_pressure + dofs_.n_scalar + 1; }

    void check_state(const State& s) const {
        if (s.u.size() != dofs_.n_velocity || s.p.size() != dofs_.n_pressure || s.theta.size() != dofs_.n_scalar)
            throw std::invalid_argument("state dimensions do not match the dof map");
        if (!s.all_finite()) throw std::invalid_argument("state contains non-finite entries");
    }

    Vec stage_solve(const ReducedSystem& reduced, const char* stage) const {
        LinearSystem sys;
        sys.A = reduced.A;
        sys.b = reduced.b;
        sys.options = solver_;
        try {
            return solve(sys).first;
        } catch (const solver_error& e) {
            throw solver_error(std::string(stage) + " stage: " + e.what(), e.achieved_residual);
        }
    }

    Mesh mesh_;
    ProblemConfig cfg_;
    SolverOptions solver_;
    DofMap dofs_;
    Assembler assembler_;
    StateLayout layout_;
    BInnerProduct bip_;
    SpMat scalar_stiffness_, visc_, kdiff_, div_, buoyancy_;
    Vec p_integral_, f_load_, gamma_load_;
    DirichletReduction temp_reduction_, oseen_reduction_, newton_reduction_;
};

}  // namespace bouss
