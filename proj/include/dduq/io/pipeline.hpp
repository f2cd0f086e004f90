#pragma once

// Glue from a RunConfig to grids, sampling rules and scenario problems.

#include <string>
#include <vector>

#include "dduq/ensemble.hpp"
#include "dduq/gpc.hpp"
#include "dduq/grid.hpp"
#include "dduq/io/config.hpp"
#include "dduq/quadrature.hpp"

namespace dduq::io {

inline GridHierarchy make_grids(const RunConfig& c) {
    return build_grid(c.domain(), c.coarse_n, c.levels, c.dirichlet_patch(), c.pin_mode());
}

inline ScenarioProblem make_problem(const RunConfig& c, const GridHierarchy& grids) {
    ScenarioProblem p;
    p.grids = &grids;
    p.field = c.field_spec();
    p.params = c.physics;
    p.newton = c.newton;
    p.linear = c.linear;
    p.dt = c.dt_seconds();
    p.n_steps = c.n_steps;
    p.snapshot_steps = c.snapshot_steps;
    p.threads = c.threads;
    p.validate();
    return p;
}

/// Sampling or quadrature rule selected by the method section.
inline QuadratureRule make_rule(const RunConfig& c) {
    const int m = c.dim_theta;
    switch (c.method) {
        case Method::Deterministic: {
            QuadratureRule q;
            q.kind = RuleKind::GaussLegendreTensor;
            q.dim = m;
            q.nodes = {std::vector<double>(m, 0.0)};
            q.weights = {1.0};
            return q;
        }
        case Method::Qmc: return halton(c.rule_size, m);
        case Method::Mc: return monte_carlo(c.rule_size, m, c.seed);
        case Method::Gpc: break;
    }
    switch (rule_kind_from_string(c.rule)) {
        case RuleKind::GaussLegendreTensor: return tensor_rule(gauss_legendre_1d(c.rule_size), m);
        case RuleKind::ClenshawCurtisTensor:
            return tensor_rule(clenshaw_curtis_1d(c.rule_level), m, RuleKind::ClenshawCurtisTensor);
        case RuleKind::SmolyakCc: return smolyak_cc(c.rule_level, m);
        case RuleKind::QmcHalton: return halton(c.rule_size, m);
        case RuleKind::Mc: return monte_carlo(c.rule_size, m, c.seed);
    }
    throw ConfigError("method: unsupported rule");
}

inline MultiIndexSet make_index_set(const RunConfig& c) {
    return build_multiindex_set(c.dim_theta, c.gpc_order, truncation_from_string(c.truncation));
}

inline FailurePolicy ensemble_policy(const RunConfig& c) {
    return c.failure_policy == PolicyKind::Abort ? FailurePolicy::Abort : FailurePolicy::Continue;
}

/// Nearest vertex to a probe coordinate.
inline std::size_t nearest_vertex(const StructuredGrid& g, const std::vector<double>& x) {
    std::array<int, 3> id{0, 0, 0};
    for (int k = 0; k < g.dim(); ++k) {
        const double s = (x[k] - g.domain().lo[k]) / g.spacing()[k];
        id[k] = std::clamp(static_cast<int>(std::lround(s)), 0, g.n()[k] - 1);
    }
    return g.index(id[0], id[1], id[2]);
}

}  // namespace dduq::io
