#pragma once

/**
 * @file multigrid.hpp
 * @brief Geometric multigrid V-cycle on a nested structured hierarchy.
 *
 * Each level carries its own (rediscretized) block matrix and an ILU(0)
 * smoother. Residuals of finite-volume equations are control-volume integrals,
 * so they are moved to coarse levels with the plain transpose of prolongation.
 * Dirichlet components are masked: their coarse defect and prolonged
 * correction are zero, and the smoother resolves them exactly.
 */

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dduq/grid.hpp"
#include "dduq/solvers/bicgstab.hpp"
#include "dduq/solvers/dense_lu.hpp"
#include "dduq/solvers/ilu0.hpp"
#include "dduq/sparse.hpp"

namespace dduq {

template <int B>
struct MgLevel {
    const StructuredGrid* grid = nullptr;
    BlockCsrMatrix<B> matrix;
    std::vector<std::uint8_t> dirichlet;  ///< one flag per scalar unknown; empty means none
};

template <int B>
class Multigrid {
public:
    static constexpr std::size_t kDirectCoarseLimit = 2000;
    static constexpr int kCoarseSweeps = 50;

    Multigrid(std::vector<MgLevel<B>> levels, const LinearSolverConfig& cfg)
        : levels_(std::move(levels)), cfg_(cfg) {
        if (levels_.empty()) throw UsageError("multigrid: no levels");
        for (std::size_t l = 0; l < levels_.size(); ++l) {
            const auto& lv = levels_[l];
            if (lv.grid == nullptr) throw UsageError("multigrid: level without grid");
            if (lv.matrix.block_rows() != lv.grid->num_vertices())
                throw UsageError("multigrid: missing or mismatched level matrix");
            if (l + 1 < levels_.size()) detail::check_pair(*lv.grid, *levels_[l + 1].grid);
        }
        smoothers_.reserve(levels_.size());
        for (const auto& lv : levels_) smoothers_.emplace_back(lv.matrix);
        const auto& coarse = levels_.back().matrix;
        if (cfg_.mg_coarse == CoarseSolve::Direct && coarse.rows() <= kDirectCoarseLimit)
            coarse_lu_.emplace(coarse.rows(), coarse.to_dense());
    }

    std::size_t num_levels() const noexcept { return levels_.size(); }
    const MgLevel<B>& level(std::size_t l) const { return levels_[l]; }

    /// One V-cycle for A x = rhs starting from x (updated in place).
    void cycle(std::span<const double> rhs, std::span<double> x) const { vcycle(0, rhs, x); }

    /// x = V(rhs) starting from zero; the preconditioner application.
    void apply(std::span<const double> rhs, std::span<double> x) const {
        std::fill(x.begin(), x.end(), 0.0);
        vcycle(0, rhs, x);
    }

    std::vector<std::string> warnings() const {
        std::vector<std::string> w;
        for (const auto& s : smoothers_) w.insert(w.end(), s.warnings().begin(), s.warnings().end());
        return w;
    }

private:
    static void mask(std::span<double> v, const std::vector<std::uint8_t>& m) {
        if (m.empty()) return;
        for (std::size_t i = 0; i < v.size(); ++i)
            if (m[i]) v[i] = 0.0;
    }

    void vcycle(std::size_t l, std::span<const double> rhs, std::span<double> x) const {
        const auto& lv = levels_[l];
        if (l + 1 == levels_.size()) {
            if (coarse_lu_) {
                const auto sol = coarse_lu_->solve(rhs);
                std::copy(sol.begin(), sol.end(), x.begin());
            } else {
                for (int s = 0; s < kCoarseSweeps; ++s) smoothers_[l].smooth(lv.matrix, rhs, x);
            }
            return;
        }
        for (int s = 0; s < cfg_.mg_pre_smooth; ++s) smoothers_[l].smooth(lv.matrix, rhs, x);

        Vector r(rhs.size());
        lv.matrix.residual(rhs, x, r);
        mask(r, lv.dirichlet);
        const auto& next = levels_[l + 1];
        Vector rc = prolong_transpose(*lv.grid, *next.grid, r, B);
        mask(rc, next.dirichlet);
        Vector ec(rc.size(), 0.0);
        vcycle(l + 1, rc, ec);
        Vector e = prolong(*lv.grid, *next.grid, ec, B);
        mask(e, lv.dirichlet);
        axpy(1.0, e, x);

        for (int s = 0; s < cfg_.mg_post_smooth; ++s) smoothers_[l].smooth(lv.matrix, rhs, x);
    }

    std::vector<MgLevel<B>> levels_;
    LinearSolverConfig cfg_;
    std::vector<Ilu0<B>> smoothers_;
    std::optional<DenseLu> coarse_lu_;
};

/// One V-cycle applied to (rhs, x0).
template <int B>
Vector mg_vcycle(const Multigrid<B>& mg, std::span<const double> rhs, Vector x0) {
    mg.cycle(rhs, x0);
    return x0;
}

}  // namespace dduq
