#pragma once

// Shared fixtures for the unit tests and the acceptance runner.

#include <cstdint>
#include <random>
#include <vector>

#include "dduq/discretization.hpp"
#include "dduq/grid.hpp"
#include "dduq/solvers/multigrid.hpp"

namespace dduq::testing {

enum class PoissonBc { AllDirichlet, TopDirichlet };

inline BoxDomain unit_square() {
    BoxDomain d;
    d.dim = 2;
    d.lo = {0.0, 0.0, 0.0};
    d.hi = {1.0, 1.0, 1.0};
    return d;
}

inline std::vector<std::uint8_t> poisson_mask(const StructuredGrid& g, PoissonBc bc) {
    return bc == PoissonBc::AllDirichlet ? boundary_mask(g) : [&] {
        std::vector<std::uint8_t> m(g.num_vertices(), 0);
        for (std::size_t v = 0; v < m.size(); ++v) m[v] = g.on_top(v);
        return m;
    }();
}

/// Rediscretized unit-coefficient diffusion operators on every level of the hierarchy.
inline std::vector<MgLevel<1>> poisson_levels(const GridHierarchy& h, PoissonBc bc) {
    std::vector<MgLevel<1>> levels;
    for (const auto& g : h) {
        auto mask = poisson_mask(g, bc);
        levels.push_back({&g, assemble_diffusion_operator(g, 1.0, 0.0, mask), mask});
    }
    return levels;
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

}  // namespace dduq::testing
