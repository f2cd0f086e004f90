#pragma once

/**
 * @file bicgstab.hpp
 * @brief Preconditioned BiCGStab (van der Vorst) with a single restart on breakdown.
 */

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dduq/errors.hpp"
#include "dduq/sparse.hpp"

namespace dduq {

enum class CoarseSolve { Direct, ManySmooths };

struct LinearSolverConfig {
    double krylov_tol_rel = 1e-8;
    int krylov_max_iter = 200;
    int mg_pre_smooth = 1;
    int mg_post_smooth = 1;
    CoarseSolve mg_coarse = CoarseSolve::Direct;

    void validate() const {
        if (!(krylov_tol_rel > 0.0)) throw ConfigError("solver: krylov_tol_rel must be positive");
        if (krylov_max_iter < 1) throw ConfigError("solver: krylov_max_iter must be >= 1");
        if (mg_pre_smooth < 0 || mg_post_smooth < 0 || mg_pre_smooth + mg_post_smooth < 1)
            throw ConfigError("solver: smoothing counts must be non-negative and not both zero");
    }
};

struct KrylovResult {
    Vector x;
    int iterations = 0;
    bool restarted = false;
    std::vector<double> residual_history;  ///< ||b - A x|| / ||b|| after each iteration
};

/// Solves A x = b. `apply_a(in, out)` and `apply_m_inv(in, out)` write into `out`.
template <class ApplyA, class ApplyM>
KrylovResult bicgstab(ApplyA&& apply_a, ApplyM&& apply_m_inv, std::span<const double> b,
                      const LinearSolverConfig& cfg, Vector x0 = {}) {
    const std::size_t n = b.size();
    KrylovResult res;
    res.x = x0.empty() ? Vector(n, 0.0) : std::move(x0);
    if (res.x.size() != n) throw UsageError("bicgstab: initial guess has wrong length");

    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        std::fill(res.x.begin(), res.x.end(), 0.0);
        return res;
    }
    const double target = cfg.krylov_tol_rel * bnorm;
    constexpr double tiny = std::numeric_limits<double>::min() * 1e10;

    Vector r(n), rhat(n), p(n, 0.0), v(n, 0.0), phat(n), s(n), shat(n), t(n);
    auto restart = [&] {
        apply_a(std::span<const double>(res.x), std::span<double>(r));
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
        rhat = r;
        std::fill(p.begin(), p.end(), 0.0);
        std::fill(v.begin(), v.end(), 0.0);
    };
    restart();
    if (norm2(r) <= target) return res;

    double rho_prev = 1.0, alpha = 1.0, omega = 1.0;
    bool fresh = true;
    auto breakdown = [&](const char* what) {
        if (res.restarted)
            throw NonConvergenceError(std::string("bicgstab: breakdown (") + what + ") after restart",
                                      res.residual_history);
        res.restarted = true;
        restart();
        fresh = true;
    };

    while (res.iterations < cfg.krylov_max_iter) {
        const double rho = dot(rhat, r);
        if (std::abs(rho) < tiny) {
            breakdown("rho");
            continue;
        }
        if (fresh) {
            p = r;
            fresh = false;
        } else {
            const double beta = (rho / rho_prev) * (alpha / omega);
            for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        apply_m_inv(std::span<const double>(p), std::span<double>(phat));
        apply_a(std::span<const double>(phat), std::span<double>(v));
        const double rv = dot(rhat, v);
        if (std::abs(rv) < tiny) {
            breakdown("rhat.v");
            continue;
        }
        alpha = rho / rv;
        for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
        ++res.iterations;
        const double snorm = norm2(s);
        if (snorm <= target) {
            axpy(alpha, phat, res.x);
            res.residual_history.push_back(snorm / bnorm);
            return res;
        }
        apply_m_inv(std::span<const double>(s), std::span<double>(shat));
        apply_a(std::span<const double>(shat), std::span<double>(t));
        const double tt = dot(t, t);
        omega = tt > 0.0 ? dot(t, s) / tt : 0.0;
        for (std::size_t i = 0; i < n; ++i) res.x[i] += alpha * phat[i] + omega * shat[i];
        for (std::size_t i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];
        const double rnorm = norm2(r);
        res.residual_history.push_back(rnorm / bnorm);
        if (rnorm <= target) return res;
        if (std::abs(omega) < tiny) {
            breakdown("omega");
            continue;
        }
        rho_prev = rho;
    }
    throw NonConvergenceError("bicgstab: no convergence in " + std::to_string(cfg.krylov_max_iter) +
                                  " iterations",
                              res.residual_history);
}

/// Identity preconditioner.
inline auto identity_preconditioner() {
    return [](std::span<const double> in, std::span<double> out) {
        std::copy(in.begin(), in.end(), out.begin());
    };
}

template <int B>
auto matrix_operator(const BlockCsrMatrix<B>& a) {
    return [&a](std::span<const double> in, std::span<double> out) { a.multiply(in, out); };
}

}  // namespace dduq
