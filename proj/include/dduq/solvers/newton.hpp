#pragma once

/**
 * @file newton.hpp
 * @brief Newton iteration with a halving line search.
 *
 * A trial step x - alpha*dx is accepted once
 * ||R(x - alpha dx)|| < (1 - 1e-4 alpha) ||R(x)||, halving alpha otherwise.
 */

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dduq/errors.hpp"
#include "dduq/solvers/bicgstab.hpp"
#include "dduq/solvers/ilu0.hpp"
#include "dduq/sparse.hpp"

namespace dduq {

struct NewtonConfig {
    double tol_abs = 1e-12;
    double tol_rel = 1e-10;
    int max_iter = 20;
    int ls_max_halvings = 10;

    void validate() const {
        if (!(tol_abs > 0.0) || !(tol_rel > 0.0)) throw ConfigError("solver: Newton tolerances must be positive");
        if (max_iter < 1) throw ConfigError("solver: Newton max_iter must be >= 1");
        if (ls_max_halvings < 0) throw ConfigError("solver: ls_max_halvings must be >= 0");
    }
};

struct NewtonReport {
    int iterations = 0;
    std::vector<double> residual_norms;  ///< ||R|| before the first and after every step
    std::vector<int> krylov_iterations;
    std::vector<int> halvings;
};

struct NewtonResult {
    Vector x;
    NewtonReport report;
};

/// Linear step result: dx solves J dx = r.
struct LinearStep {
    Vector dx;
    int krylov_iterations = 0;
};

/// Called after each accepted Newton step: (iteration, ||R||, Krylov iterations).
using NewtonObserver = std::function<void(int, double, int)>;

/// `residual(x)` returns R(x); `step(x, r)` returns a LinearStep for the linearization at x.
template <class ResidualFn, class StepFn>
NewtonResult newton_solve_with(ResidualFn&& residual, StepFn&& step, Vector x0, const NewtonConfig& cfg,
                               const NewtonObserver& observer = {}) {
    NewtonResult out;
    out.x = std::move(x0);
    Vector r = residual(std::span<const double>(out.x));
    double rnorm = norm2(r);
    out.report.residual_norms.push_back(rnorm);
    const double target = std::max(cfg.tol_abs, cfg.tol_rel * rnorm);
    if (!std::isfinite(rnorm)) throw NonConvergenceError("newton: non-finite initial residual", out.report.residual_norms);
    if (rnorm <= target) return out;

    for (int it = 1; it <= cfg.max_iter; ++it) {
        LinearStep ls = step(std::span<const double>(out.x), std::span<const double>(r));
        double alpha = 1.0;
        int halvings = 0;
        Vector trial(out.x.size());
        Vector rt;
        double tnorm = 0.0;
        while (true) {
            for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = out.x[i] - alpha * ls.dx[i];
            rt = residual(std::span<const double>(trial));
            tnorm = norm2(rt);
            if (std::isfinite(tnorm) && (tnorm < (1.0 - 1e-4 * alpha) * rnorm || tnorm <= target)) break;
            if (halvings == cfg.ls_max_halvings)
                throw NonConvergenceError("newton: line search stagnated at iteration " + std::to_string(it),
                                          out.report.residual_norms);
            alpha *= 0.5;
            ++halvings;
        }
        out.x.swap(trial);
        r.swap(rt);
        rnorm = tnorm;
        out.report.iterations = it;
        out.report.residual_norms.push_back(rnorm);
        out.report.krylov_iterations.push_back(ls.krylov_iterations);
        out.report.halvings.push_back(halvings);
        if (observer) observer(it, rnorm, ls.krylov_iterations);
        if (rnorm <= target) return out;
    }
    throw NonConvergenceError("newton: no convergence in " + std::to_string(cfg.max_iter) + " iterations",
                              out.report.residual_norms);
}

/// Newton with an assembled Jacobian, solved by BiCGStab preconditioned with ILU(0).
template <int B, class ResidualFn, class JacobianFn>
NewtonResult newton_solve(ResidualFn&& residual, JacobianFn&& jacobian, Vector x0, const NewtonConfig& cfg,
                          const LinearSolverConfig& lin, const NewtonObserver& observer = {}) {
    auto step = [&](std::span<const double> x, std::span<const double> r) {
        const BlockCsrMatrix<B> j = jacobian(x);
        const Ilu0<B> ilu(j);
        auto precond = [&ilu](std::span<const double> in, std::span<double> o) { ilu.solve(in, o); };
        auto kr = bicgstab(matrix_operator(j), precond, r, lin);
        return LinearStep{std::move(kr.x), kr.iterations};
    };
    return newton_solve_with(residual, step, std::move(x0), cfg, observer);
}

}  // namespace dduq
