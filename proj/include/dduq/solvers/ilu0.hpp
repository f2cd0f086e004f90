#pragma once

/**
 * @file ilu0.hpp
 * @brief Block incomplete LU factorization without fill-in, used as a multigrid smoother.
 *
 * The factors live on the sparsity pattern of the input matrix: strictly lower
 * blocks hold L (unit block diagonal implied), upper blocks hold U, and the
 * inverted diagonal blocks of U are kept separately.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dduq/sparse.hpp"

namespace dduq {

template <int B>
class Ilu0 {
public:
    Ilu0() = default;

    explicit Ilu0(const BlockCsrMatrix<B>& a) : lu_(a) {
        const std::size_t n = lu_.block_rows();
        const auto& rp = lu_.row_ptr();
        const auto& col = lu_.col();
        dinv_.resize(n);

        double diag_scale = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double* d = lu_.block(lu_.diag_pos(i));
            for (int q = 0; q < B; ++q) diag_scale = std::max(diag_scale, std::abs(d[q * B + q]));
        }
        if (diag_scale == 0.0) diag_scale = 1.0;

        std::vector<std::size_t> pos(n, BlockCsrMatrix<B>::npos);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) pos[col[k]] = k;
            for (std::size_t kk = rp[i]; kk < rp[i + 1]; ++kk) {
                const std::size_t k = col[kk];
                if (k >= i) break;
                Block<B> lik;
                std::copy_n(lu_.block(kk), B * B, lik.begin());
                lik = block_mul<B>(lik, dinv_[k]);
                std::copy_n(lik.begin(), B * B, lu_.block(kk));
                for (std::size_t kj = lu_.diag_pos(k) + 1; kj < rp[k + 1]; ++kj) {
                    const std::size_t p = pos[col[kj]];
                    if (p == BlockCsrMatrix<B>::npos) continue;
                    Block<B> ukj;
                    std::copy_n(lu_.block(kj), B * B, ukj.begin());
                    const Block<B> prod = block_mul<B>(lik, ukj);
                    double* aij = lu_.block(p);
                    for (int q = 0; q < B * B; ++q) aij[q] -= prod[q];
                }
            }
            Block<B> d;
            std::copy_n(lu_.block(lu_.diag_pos(i)), B * B, d.begin());
            if (!block_invert<B>(d, dinv_[i], 1e-300)) {
                for (int q = 0; q < B; ++q) d[q * B + q] += 1e-12 * diag_scale;
                warnings_.push_back("ilu0: zero pivot at block row " + std::to_string(i) + ", diagonal shifted");
                if (!block_invert<B>(d, dinv_[i], 0.0))
                    throw NonConvergenceError("ilu0: pivot vanished after shift", {});
            }
            for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) pos[col[k]] = BlockCsrMatrix<B>::npos;
        }
    }

    /// z = (LU)^{-1} r
    void solve(std::span<const double> r, std::span<double> z) const {
        const std::size_t n = lu_.block_rows();
        const auto& rp = lu_.row_ptr();
        const auto& col = lu_.col();
        for (std::size_t i = 0; i < n; ++i) {
            std::array<double, B> y;
            for (int q = 0; q < B; ++q) y[q] = r[i * B + q];
            for (std::size_t k = rp[i]; k < lu_.diag_pos(i); ++k) {
                const double* l = lu_.block(k);
                const double* zk = z.data() + col[k] * B;
                for (int a = 0; a < B; ++a)
                    for (int b = 0; b < B; ++b) y[a] -= l[a * B + b] * zk[b];
            }
            for (int q = 0; q < B; ++q) z[i * B + q] = y[q];
        }
        for (std::size_t i = n; i-- > 0;) {
            std::array<double, B> y;
            for (int q = 0; q < B; ++q) y[q] = z[i * B + q];
            for (std::size_t k = lu_.diag_pos(i) + 1; k < rp[i + 1]; ++k) {
                const double* u = lu_.block(k);
                const double* zk = z.data() + col[k] * B;
                for (int a = 0; a < B; ++a)
                    for (int b = 0; b < B; ++b) y[a] -= u[a * B + b] * zk[b];
            }
            const auto& d = dinv_[i];
            for (int a = 0; a < B; ++a) {
                double s = 0.0;
                for (int b = 0; b < B; ++b) s += d[a * B + b] * y[b];
                z[i * B + a] = s;
            }
        }
    }

    /// One smoothing step x <- x + (LU)^{-1}(b - A x).
    void smooth(const BlockCsrMatrix<B>& a, std::span<const double> b, std::span<double> x) const {
        Vector r(b.size()), z(b.size());
        a.residual(b, x, r);
        solve(r, z);
        axpy(1.0, z, x);
    }

    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

private:
    BlockCsrMatrix<B> lu_;
    std::vector<Block<B>> dinv_;
    std::vector<std::string> warnings_;
};

/// Factory matching the operation name used throughout the docs.
template <int B>
Ilu0<B> ilu0_smoother(const BlockCsrMatrix<B>& a) {
    return Ilu0<B>(a);
}

}  // namespace dduq
