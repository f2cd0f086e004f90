#pragma once

/**
 * @file sparse.hpp
 * @brief Block compressed-row matrices with compile-time block size and basic vector kernels.
 *
 * Blocks are dense B x B, stored row-major. Column indices within a block row are
 * sorted ascending, so the diagonal block can be located by binary search.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "dduq/errors.hpp"

namespace dduq {

using Vector = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

template <int B>
using Block = std::array<double, B * B>;

template <int B>
Block<B> block_mul(const Block<B>& a, const Block<B>& b) {
    Block<B> c{};
    for (int i = 0; i < B; ++i)
        for (int k = 0; k < B; ++k)
            for (int j = 0; j < B; ++j) c[i * B + j] += a[i * B + k] * b[k * B + j];
    return c;
}

/// Gauss-Jordan inverse with partial pivoting. Returns false on a vanishing pivot.
template <int B>
bool block_invert(const Block<B>& a, Block<B>& inv, double pivot_tol = 0.0) {
    Block<B> m = a;
    inv = {};
    for (int i = 0; i < B; ++i) inv[i * B + i] = 1.0;
    for (int col = 0; col < B; ++col) {
        int piv = col;
        for (int r = col + 1; r < B; ++r)
            if (std::abs(m[r * B + col]) > std::abs(m[piv * B + col])) piv = r;
        if (!(std::abs(m[piv * B + col]) > pivot_tol)) return false;
        if (piv != col)
            for (int j = 0; j < B; ++j) {
                std::swap(m[piv * B + j], m[col * B + j]);
                std::swap(inv[piv * B + j], inv[col * B + j]);
            }
        const double d = 1.0 / m[col * B + col];
        for (int j = 0; j < B; ++j) {
            m[col * B + j] *= d;
            inv[col * B + j] *= d;
        }
        for (int r = 0; r < B; ++r) {
            if (r == col) continue;
            const double f = m[r * B + col];
            if (f == 0.0) continue;
            for (int j = 0; j < B; ++j) {
                m[r * B + j] -= f * m[col * B + j];
                inv[r * B + j] -= f * inv[col * B + j];
            }
        }
    }
    return true;
}

template <int B>
class BlockCsrMatrix {
public:
    static constexpr int block_size = B;

    BlockCsrMatrix() = default;

    /// Builds the sparsity pattern from per-row column lists (duplicates are merged).
    explicit BlockCsrMatrix(std::vector<std::vector<std::size_t>> pattern) {
        rows_ = pattern.size();
        row_ptr_.assign(rows_ + 1, 0);
        for (std::size_t i = 0; i < rows_; ++i) {
            auto& cols = pattern[i];
            std::sort(cols.begin(), cols.end());
            cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
            row_ptr_[i + 1] = row_ptr_[i] + cols.size();
        }
        col_.reserve(row_ptr_.back());
        for (auto& cols : pattern) col_.insert(col_.end(), cols.begin(), cols.end());
        val_.assign(row_ptr_.back() * B * B, 0.0);
        diag_.resize(rows_);
        for (std::size_t i = 0; i < rows_; ++i) {
            const auto k = find(i, i);
            if (k == npos) throw UsageError("BlockCsrMatrix: pattern lacks a diagonal block");
            diag_[i] = k;
        }
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    std::size_t block_rows() const noexcept { return rows_; }
    std::size_t rows() const noexcept { return rows_ * B; }
    std::size_t nnz_blocks() const noexcept { return col_.size(); }

    const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }
    const std::vector<std::size_t>& col() const noexcept { return col_; }
    std::size_t diag_pos(std::size_t i) const noexcept { return diag_[i]; }

    std::size_t find(std::size_t i, std::size_t j) const noexcept {
        const auto b = col_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
        const auto e = col_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
        const auto it = std::lower_bound(b, e, j);
        return (it != e && *it == j) ? static_cast<std::size_t>(it - col_.begin()) : npos;
    }

    double* block(std::size_t pos) noexcept { return val_.data() + pos * B * B; }
    const double* block(std::size_t pos) const noexcept { return val_.data() + pos * B * B; }

    double* block(std::size_t i, std::size_t j) {
        const auto k = find(i, j);
        if (k == npos) throw UsageError("BlockCsrMatrix: entry outside the sparsity pattern");
        return block(k);
    }

    /// Scalar access by unblocked (row, column).
    double& at(std::size_t r, std::size_t c) { return block(r / B, c / B)[(r % B) * B + (c % B)]; }
    double at(std::size_t r, std::size_t c) const {
        const auto k = find(r / B, c / B);
        return k == npos ? 0.0 : block(k)[(r % B) * B + (c % B)];
    }

    void set_zero() noexcept { std::fill(val_.begin(), val_.end(), 0.0); }

    /// Replaces scalar row r by the unit row e_r.
    void set_identity_row(std::size_t r) {
        const std::size_t bi = r / B;
        const int q = static_cast<int>(r % B);
        for (std::size_t k = row_ptr_[bi]; k < row_ptr_[bi + 1]; ++k)
            for (int j = 0; j < B; ++j) val_[k * B * B + q * B + j] = 0.0;
        block(diag_[bi])[q * B + q] = 1.0;
    }

    void multiply(std::span<const double> x, std::span<double> y) const {
        for (std::size_t i = 0; i < rows_; ++i) {
            std::array<double, B> acc{};
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
                const double* a = block(k);
                const double* xv = x.data() + col_[k] * B;
                for (int r = 0; r < B; ++r)
                    for (int c = 0; c < B; ++c) acc[r] += a[r * B + c] * xv[c];
            }
            for (int r = 0; r < B; ++r) y[i * B + r] = acc[r];
        }
    }

    Vector operator*(std::span<const double> x) const {
        Vector y(rows());
        multiply(x, y);
        return y;
    }

    /// r = b - A x
    void residual(std::span<const double> b, std::span<const double> x, std::span<double> r) const {
        multiply(x, r);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
    }

    /// Row-major dense copy; test and coarse-solve helper.
    std::vector<double> to_dense() const {
        const std::size_t n = rows();
        std::vector<double> d(n * n, 0.0);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
                for (int r = 0; r < B; ++r)
                    for (int c = 0; c < B; ++c)
                        d[(i * B + r) * n + col_[k] * B + c] = block(k)[r * B + c];
        return d;
    }

private:
    std::size_t rows_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::size_t> col_;
    std::vector<double> val_;
    std::vector<std::size_t> diag_;
};

}  // namespace dduq
