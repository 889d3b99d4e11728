#pragma once

// Sparse linear solves behind one interface: a direct factorization default
// and an iterative option, both with an algebraic residual check.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <Eigen/IterativeLinearSolvers>

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "bouss/assembly.hpp"

namespace bouss {

class solver_error : public std::runtime_error {
public:
    solver_error(const std::string& what, double achieved)
        : std::runtime_error(what), achieved_residual(achieved) {}
    double achieved_residual = -1.0;
};

struct SolverOptions {
    double tolerance = 1e-12;        // relative algebraic residual
    int max_iterations = 10000;      // iterative method budget
    std::string method = "sparselu";  // "sparselu" | "bicgstab"
};

struct LinearSystem {
    SpMat A;
    Vec b;
    int constraint_rows = 0;  // trailing rows appended for constraints (e.g. pressure mean)
    SolverOptions options;
};

struct SolveReport {
    double rel_residual = 0.0;
    std::string method;
    int n = 0;
};

inline std::pair<Vec, SolveReport> solve(const LinearSystem& sys) {
    if (sys.A.rows() != sys.A.cols())
        throw std::invalid_argument("solve: system matrix is not square after constraint augmentation");
    if (sys.A.rows() != sys.b.size()) throw std::invalid_argument("solve: rhs dimension mismatch");

    Vec x;
    if (sys.options.method == "sparselu") {
        Eigen::SparseLU<SpMat> lu;
        lu.compute(sys.A);
        if (lu.info() != Eigen::Success)
            throw solver_error("sparselu: factorization failed (singular or ill-conditioned matrix)", -1.0);
        x = lu.solve(sys.b);
        // iterative refinement recovers the last digits on ill-conditioned
        // saddle-point systems
        const double bnorm0 = sys.b.norm();
        for (int pass = 0; pass < 3; ++pass) {
            const Vec r = sys.b - sys.A * x;
            if (!x.allFinite() || r.norm() <= sys.options.tolerance * std::max(bnorm0, 1e-300)) break;
            x += lu.solve(r);
        }
    } else if (sys.options.method == "bicgstab") {
        Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>> it;
        it.setTolerance(sys.options.tolerance);
        it.setMaxIterations(sys.options.max_iterations);
        it.compute(sys.A);
        x = it.solve(sys.b);
    } else {
        throw std::invalid_argument("solve: unknown method '" + sys.options.method + "'");
    }

    const double bnorm = sys.b.norm();
    const double resid = (sys.A * x - sys.b).norm();
    const double rel = bnorm > 0.0 ? resid / bnorm : resid;
    if (!(rel <= sys.options.tolerance) || !x.allFinite()) {
        char msg[96];
        std::snprintf(msg, sizeof msg, "solve: achieved residual %.3e above tolerance %.3e", rel,
                      sys.options.tolerance);
        throw solver_error(msg, rel);
    }

    SolveReport rep;
    rep.rel_residual = rel;
    rep.method = sys.options.method;
    rep.n = static_cast<int>(sys.A.rows());
    return {std::move(x), rep};
}

}  // namespace bouss
