#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "dduq/errors.hpp"

namespace dduq {

/// Dense LU with partial pivoting; used for coarse-grid solves and as a test oracle.
class DenseLu {
public:
    DenseLu() = default;

    DenseLu(std::size_t n, std::vector<double> a) : n_(n), lu_(std::move(a)), perm_(n) {
        if (lu_.size() != n * n) throw UsageError("DenseLu: matrix size mismatch");
        for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t p = k;
            for (std::size_t r = k + 1; r < n; ++r)
                if (std::abs(lu_[r * n + k]) > std::abs(lu_[p * n + k])) p = r;
            if (lu_[p * n + k] == 0.0) throw NonConvergenceError("DenseLu: singular matrix", {});
            if (p != k) {
                for (std::size_t j = 0; j < n; ++j) std::swap(lu_[p * n + j], lu_[k * n + j]);
                std::swap(perm_[p], perm_[k]);
            }
            const double inv = 1.0 / lu_[k * n + k];
            for (std::size_t r = k + 1; r < n; ++r) {
                const double f = lu_[r * n + k] * inv;
                lu_[r * n + k] = f;
                if (f == 0.0) continue;
                for (std::size_t j = k + 1; j < n; ++j) lu_[r * n + j] -= f * lu_[k * n + j];
            }
        }
    }

    std::size_t size() const noexcept { return n_; }

    std::vector<double> solve(std::span<const double> b) const {
        std::vector<double> x(n_);
        for (std::size_t i = 0; i < n_; ++i) x[i] = b[perm_[i]];
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < i; ++j) x[i] -= lu_[i * n_ + j] * x[j];
        for (std::size_t ii = n_; ii-- > 0;) {
            for (std::size_t j = ii + 1; j < n_; ++j) x[ii] -= lu_[ii * n_ + j] * x[j];
            x[ii] /= lu_[ii * n_ + ii];
        }
        return x;
    }

private:
    std::size_t n_ = 0;
    std::vector<double> lu_;
    std::vector<std::size_t> perm_;
};

}  // namespace dduq
