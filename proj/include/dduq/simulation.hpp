#pragma once

/**
 * @file simulation.hpp
 * @brief Implicit-Euler time stepping of the coupled system.
 *
 * Each step solves the nonlinear system with Newton; every linearization is
 * solved by BiCGStab preconditioned with one multigrid V-cycle whose coarse
 * operators are rediscretized Jacobians on injected states and coefficients.
 */

#include <algorithm>
#include <cstdio>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dduq/discretization.hpp"
#include "dduq/grid.hpp"
#include "dduq/solvers/bicgstab.hpp"
#include "dduq/solvers/multigrid.hpp"
#include "dduq/solvers/newton.hpp"

namespace dduq {

/// Strong conditions on a given grid at time t.
using BoundaryProvider = std::function<DirichletData(const StructuredGrid&, double)>;
/// Integrated sources (salt, mass) on the finest grid at time t.
using SourceProvider = std::function<void(const StructuredGrid&, double, Vector&, Vector&)>;

struct StepReport {
    int step = 0;
    double t = 0.0;
    int newton_iterations = 0;
    std::vector<int> krylov_iterations;
    std::vector<double> residual_norms;
};

/// One line of the structured convergence log.
inline std::string format_step_log(const StepReport& r) {
    char head[96];
    std::snprintf(head, sizeof head, "step=%d t=%.17g res0=%.6e", r.step, r.t,
                  r.residual_norms.empty() ? 0.0 : r.residual_norms.front());
    std::string s = head;
    for (std::size_t k = 0; k < r.krylov_iterations.size(); ++k) {
        char buf[96];
        std::snprintf(buf, sizeof buf, " | newton=%zu res=%.6e krylov=%d", k + 1, r.residual_norms[k + 1],
                      r.krylov_iterations[k]);
        s += buf;
    }
    return s;
}

struct SimulationSetup {
    const GridHierarchy* grids = nullptr;  ///< finest first
    CoefficientFields coeff;               ///< on the finest grid
    FlowParameters params{};
    NewtonConfig newton{};
    LinearSolverConfig linear{};
    BoundaryProvider boundary;  ///< defaults to the tagged Elder conditions
    SourceProvider source;      ///< optional
    int threads = 1;
};

class TransientSolver {
public:
    explicit TransientSolver(SimulationSetup setup) : s_(std::move(setup)) {
        if (s_.grids == nullptr || s_.grids->empty()) throw UsageError("simulation: empty grid hierarchy");
        const auto& fine = s_.grids->front();
        if (s_.coeff.phi.size() != fine.num_vertices() || s_.coeff.K.size() != fine.num_vertices())
            throw UsageError("simulation: coefficient fields do not match the finest grid");
        if (!s_.boundary) s_.boundary = [](const StructuredGrid& g, double) { return tagged_boundary(g); };
        level_coeff_.push_back(s_.coeff);
        for (std::size_t l = 1; l < s_.grids->size(); ++l) {
            const auto& f = (*s_.grids)[l - 1];
            const auto& c = (*s_.grids)[l];
            CoefficientFields cc;
            cc.phi = inject(f, c, level_coeff_.back().phi);
            cc.K = inject(f, c, level_coeff_.back().K);
            level_coeff_.push_back(std::move(cc));
        }
    }

    const GridHierarchy& grids() const noexcept { return *s_.grids; }
    const SimulationSetup& setup() const noexcept { return s_; }

    DiscreteProblem problem(std::size_t level, double t) const {
        DiscreteProblem pr;
        pr.grid = &(*s_.grids)[level];
        pr.coeff = &level_coeff_[level];
        pr.params = s_.params;
        pr.bc = s_.boundary(*pr.grid, t);
        pr.threads = s_.threads;
        if (level == 0 && s_.source) s_.source(*pr.grid, t, pr.salt_source, pr.mass_source);
        return pr;
    }

    /// Advances `state` by dt in place.
    StepReport advance(FieldState& state, double dt, int step_index = 0,
                       const NewtonObserver& observer = {}) const {
        const double t_new = state.t + dt;
        const DiscreteProblem fine = problem(0, t_new);
        std::vector<DiscreteProblem> coarse;
        for (std::size_t l = 1; l < s_.grids->size(); ++l) coarse.push_back(problem(l, t_new));

        const Vector x_old = pack_state(state);
        Vector x0 = x_old;
        const std::size_t nv = fine.grid->num_vertices();
        for (std::size_t v = 0; v < nv; ++v) {
            if (fine.bc.c_is_fixed(v)) x0[2 * v] = fine.bc.c_value[v];
            if (fine.bc.p_is_fixed(v)) x0[2 * v + 1] = fine.bc.p_value[v];
        }

        // Injected old states per level, fixed for the whole step.
        std::vector<Vector> old_levels{x_old};
        for (std::size_t l = 1; l < s_.grids->size(); ++l)
            old_levels.push_back(inject((*s_.grids)[l - 1], (*s_.grids)[l], old_levels.back(), 2));

        auto residual = [&](std::span<const double> x) { return assemble_residual(fine, x, x_old, dt); };
        auto step = [&](std::span<const double> x, std::span<const double> r) {
            std::vector<MgLevel<2>> levels;
            levels.push_back({fine.grid, assemble_jacobian(fine, x, x_old, dt), fine.bc.unknown_mask(nv)});
            Vector xl(x.begin(), x.end());
            for (std::size_t l = 1; l < s_.grids->size(); ++l) {
                xl = inject((*s_.grids)[l - 1], (*s_.grids)[l], xl, 2);
                const auto& pr = coarse[l - 1];
                levels.push_back({pr.grid, assemble_jacobian(pr, xl, old_levels[l], dt),
                                  pr.bc.unknown_mask(pr.grid->num_vertices())});
            }
            const Multigrid<2> mg(std::move(levels), s_.linear);
            const auto& jac = mg.level(0).matrix;
            auto precond = [&mg](std::span<const double> in, std::span<double> out) { mg.apply(in, out); };
            auto kr = bicgstab(matrix_operator(jac), precond, r, s_.linear);
            return LinearStep{std::move(kr.x), kr.iterations};
        };

        NewtonResult res = newton_solve_with(residual, step, std::move(x0), s_.newton, observer);
        state = unpack_state(res.x, t_new);
        StepReport rep;
        rep.step = step_index;
        rep.t = t_new;
        rep.newton_iterations = res.report.iterations;
        rep.krylov_iterations = res.report.krylov_iterations;
        rep.residual_norms = res.report.residual_norms;
        return rep;
    }

private:
    SimulationSetup s_;
    std::vector<CoefficientFields> level_coeff_;
};

struct TransientRun {
    std::vector<int> snapshot_steps;
    std::vector<FieldState> snapshots;
    std::vector<StepReport> steps;
};

using StepCallback = std::function<void(const StepReport&, const FieldState&)>;

/// Runs n_steps of size dt, keeping the states after the listed step counts (0 = initial).
inline TransientRun run_transient(const TransientSolver& solver, FieldState state, double dt, int n_steps,
                                  std::vector<int> snapshot_steps, const StepCallback& on_step = {}) {
    std::sort(snapshot_steps.begin(), snapshot_steps.end());
    snapshot_steps.erase(std::unique(snapshot_steps.begin(), snapshot_steps.end()), snapshot_steps.end());
    for (int s : snapshot_steps)
        if (s < 0 || s > n_steps) throw ConfigError("time: snapshot step outside [0, n_steps]");
    TransientRun run;
    run.snapshot_steps = snapshot_steps;
    auto next = snapshot_steps.begin();
    if (next != snapshot_steps.end() && *next == 0) {
        run.snapshots.push_back(state);
        ++next;
    }
    for (int k = 1; k <= n_steps; ++k) {
        StepReport rep = solver.advance(state, dt, k);
        if (on_step) on_step(rep, state);
        run.steps.push_back(std::move(rep));
        if (next != snapshot_steps.end() && *next == k) {
            run.snapshots.push_back(state);
            ++next;
        }
    }
    return run;
}

}  // namespace dduq
