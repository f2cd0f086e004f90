#pragma once

/**
 * @file mms.hpp
 * @brief Manufactured solutions for the coupled system and an order-of-convergence driver.
 *
 * On the unit box with vertical last axis:
 *   c = 0.5 + 0.25 S(t) prod_k sin(w_k pi x_k),  w = (1, 2, 1)
 *   p = rho0 g (1 - z) + A S(t) prod_k cos(pi x_k)
 * with S = 1 (steady) or S = exp(-lambda t). Sources are integrated per dual
 * cell: the flux divergence through the cell faces by Gauss-Legendre
 * quadrature of the exact normal fluxes, the storage term over the volume.
 * All boundary vertices carry the exact values of c and p.
 */

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <vector>

#include "dduq/discretization.hpp"
#include "dduq/grid.hpp"
#include "dduq/quadrature.hpp"
#include "dduq/simulation.hpp"

namespace dduq {

struct MmsSolution {
    int dim = 2;
    bool steady = true;
    double lambda = 2.0;
    double amp_c = 0.25;
    double amp_p = 0.05;
    FlowParameters params = default_params();
    double porosity = 0.5;
    double permeability = 1e-3;
    std::array<double, 3> wave{1.0, 2.0, 1.0};

    static FlowParameters default_params() {
        FlowParameters p;
        p.rho0 = 1.0;
        p.rho1 = 1.2;
        p.mu = 1.0;
        p.Dm = 1.0;
        p.g = 1.0;
        p.phi_mean = 0.5;
        p.K_mean = 1e-3;
        return p;
    }

    BoxDomain domain() const {
        BoxDomain d;
        d.dim = dim;
        d.lo = {0.0, 0.0, 0.0};
        d.hi = {1.0, 1.0, 1.0};
        return d;
    }

    double S(double t) const { return steady ? 1.0 : std::exp(-lambda * t); }
    double dS(double t) const { return steady ? 0.0 : -lambda * std::exp(-lambda * t); }

    double shape_c(const std::array<double, 3>& x) const {
        double s = 1.0;
        for (int k = 0; k < dim; ++k) s *= std::sin(wave[k] * std::numbers::pi * x[k]);
        return s;
    }
    double c(const std::array<double, 3>& x, double t) const { return 0.5 + amp_c * S(t) * shape_c(x); }
    double dc_dt(const std::array<double, 3>& x, double t) const { return amp_c * dS(t) * shape_c(x); }
    std::array<double, 3> grad_c(const std::array<double, 3>& x, double t) const {
        std::array<double, 3> g{0.0, 0.0, 0.0};
        for (int a = 0; a < dim; ++a) {
            double s = amp_c * S(t) * wave[a] * std::numbers::pi;
            for (int k = 0; k < dim; ++k) {
                const double arg = wave[k] * std::numbers::pi * x[k];
                s *= k == a ? std::cos(arg) : std::sin(arg);
            }
            g[a] = s;
        }
        return g;
    }
    double p(const std::array<double, 3>& x, double t) const {
        double s = 1.0;
        for (int k = 0; k < dim; ++k) s *= std::cos(std::numbers::pi * x[k]);
        return params.rho0 * params.g * (1.0 - x[dim - 1]) + amp_p * S(t) * s;
    }
    std::array<double, 3> grad_p(const std::array<double, 3>& x, double t) const {
        std::array<double, 3> g{0.0, 0.0, 0.0};
        for (int a = 0; a < dim; ++a) {
            double s = -amp_p * S(t) * std::numbers::pi;
            for (int k = 0; k < dim; ++k)
                s *= k == a ? std::sin(std::numbers::pi * x[k]) : std::cos(std::numbers::pi * x[k]);
            g[a] = s;
        }
        g[dim - 1] -= params.rho0 * params.g;
        return g;
    }

    /// Exact (salt, mass) fluxes along axis a.
    std::array<double, 2> flux(const std::array<double, 3>& x, double t, int a) const {
        const double cc = c(x, t);
        const double rho = density(cc, params);
        double q = -(permeability / params.mu) * (grad_p(x, t)[a] + (a == dim - 1 ? rho * params.g : 0.0));
        const double salt = rho * cc * q - rho * porosity * params.Dm * grad_c(x, t)[a];
        return {salt, rho * q};
    }

    /// Storage rates d(phi rho c)/dt and d(phi rho)/dt.
    std::array<double, 2> storage_rate(const std::array<double, 3>& x, double t) const {
        const double cc = c(x, t), ct = dc_dt(x, t);
        const double drho = params.rho1 - params.rho0;
        return {porosity * (params.rho0 + 2.0 * drho * cc) * ct, porosity * drho * ct};
    }
};

/// Cell-integrated (salt, mass) sources on every vertex of g at time t.
inline void mms_sources(const MmsSolution& m, const StructuredGrid& g, double t, Vector& salt, Vector& mass,
                        int gauss_points = 4) {
    const Rule1d gl = gauss_legendre_1d(gauss_points);
    const int dim = g.dim();
    salt.assign(g.num_vertices(), 0.0);
    mass.assign(g.num_vertices(), 0.0);
    for (std::size_t v = 0; v < g.num_vertices(); ++v) {
        if (g.on_boundary(v)) continue;
        const auto id = g.ijk(v);
        std::array<double, 3> lo{0, 0, 0}, hi{0, 0, 0};
        for (int k = 0; k < dim; ++k) {
            const double x = g.coord(k, id[k]);
            lo[k] = x - 0.5 * g.spacing()[k];
            hi[k] = x + 0.5 * g.spacing()[k];
        }
        // Tensor Gauss over a box of dimension `nd` spanned by the listed axes.
        auto integrate = [&](std::array<double, 3> base, const std::vector<int>& axes, auto&& f) {
            const std::size_t nq = gl.nodes.size();
            std::size_t total = 1;
            for (std::size_t a = 0; a < axes.size(); ++a) total *= nq;
            double sum = 0.0;
            for (std::size_t q = 0; q < total; ++q) {
                std::size_t rem = q;
                double w = 1.0;
                auto x = base;
                for (int ax : axes) {
                    const std::size_t k = rem % nq;
                    rem /= nq;
                    const double half = 0.5 * (hi[ax] - lo[ax]);
                    x[ax] = lo[ax] + half * (gl.nodes[k] + 1.0);
                    w *= half * gl.weights[k];
                }
                sum += w * f(x);
            }
            return sum;
        };
        std::array<double, 2> total{0.0, 0.0};
        for (int a = 0; a < dim; ++a) {
            std::vector<int> others;
            for (int k = 0; k < dim; ++k)
                if (k != a) others.push_back(k);
            for (int side = 0; side < 2; ++side) {
                std::array<double, 3> base{0, 0, 0};
                base[a] = side ? hi[a] : lo[a];
                const double sign = side ? 1.0 : -1.0;
                for (int e = 0; e < 2; ++e)
                    total[e] += sign * integrate(base, others, [&](const auto& x) { return m.flux(x, t, a)[e]; });
            }
        }
        std::vector<int> all;
        for (int k = 0; k < dim; ++k) all.push_back(k);
        for (int e = 0; e < 2; ++e)
            total[e] += integrate({0, 0, 0}, all, [&](const auto& x) { return m.storage_rate(x, t)[e]; });
        salt[v] = total[0];
        mass[v] = total[1];
    }
}

/// Exact c and p on every boundary vertex.
inline DirichletData mms_boundary(const MmsSolution& m, const StructuredGrid& g, double t) {
    const std::size_t nv = g.num_vertices();
    DirichletData bc;
    bc.c_fixed.assign(nv, 0);
    bc.c_value.assign(nv, 0.0);
    bc.p_fixed.assign(nv, 0);
    bc.p_value.assign(nv, 0.0);
    for (std::size_t v = 0; v < nv; ++v) {
        if (!g.on_boundary(v)) continue;
        const auto x = g.coords(v);
        bc.c_fixed[v] = bc.p_fixed[v] = 1;
        bc.c_value[v] = m.c(x, t);
        bc.p_value[v] = m.p(x, t);
    }
    return bc;
}

inline FieldState mms_exact_state(const MmsSolution& m, const StructuredGrid& g, double t) {
    FieldState s;
    s.t = t;
    s.c.resize(g.num_vertices());
    s.p.resize(g.num_vertices());
    for (std::size_t v = 0; v < g.num_vertices(); ++v) {
        const auto x = g.coords(v);
        s.c[v] = m.c(x, t);
        s.p[v] = m.p(x, t);
    }
    return s;
}

struct MmsError {
    int n = 0;        ///< vertices per axis
    double dt = 0.0;
    double l2_c = 0.0;  ///< volume-weighted discrete L2
    double l2_p = 0.0;
};

/// Solves on an n^dim grid from the exact initial state up to t_end and measures the final error.
inline MmsError mms_run(const MmsSolution& m, int coarse_n, int levels, double dt, int steps,
                        const NewtonConfig& newton = {}, const LinearSolverConfig& linear = {}) {
    const BoxDomain d = m.domain();
    std::array<int, 3> cn{1, 1, 1};
    for (int k = 0; k < d.dim; ++k) cn[k] = coarse_n;
    const GridHierarchy grids = build_grid(d, cn, levels, std::nullopt);
    const auto& fine = grids.front();

    SimulationSetup s;
    s.grids = &grids;
    s.coeff.phi.assign(fine.num_vertices(), m.porosity);
    s.coeff.K.assign(fine.num_vertices(), m.permeability);
    s.params = m.params;
    s.newton = newton;
    s.linear = linear;
    s.boundary = [m](const StructuredGrid& g, double t) { return mms_boundary(m, g, t); };
    s.source = [m](const StructuredGrid& g, double t, Vector& salt, Vector& mass) { mms_sources(m, g, t, salt, mass); };
    const TransientSolver solver(std::move(s));

    FieldState state = mms_exact_state(m, fine, 0.0);
    for (int k = 1; k <= steps; ++k) solver.advance(state, dt, k);

    const FieldState exact = mms_exact_state(m, fine, state.t);
    MmsError e;
    e.n = fine.n()[0];
    e.dt = dt;
    for (std::size_t v = 0; v < fine.num_vertices(); ++v) {
        const double vol = dual_volume(fine, v);
        e.l2_c += vol * (state.c[v] - exact.c[v]) * (state.c[v] - exact.c[v]);
        e.l2_p += vol * (state.p[v] - exact.p[v]) * (state.p[v] - exact.p[v]);
    }
    e.l2_c = std::sqrt(e.l2_c);
    e.l2_p = std::sqrt(e.l2_p);
    return e;
}

struct ConvergenceTable {
    std::vector<MmsError> rows;
    std::vector<double> order_c;  ///< between consecutive rows
    std::vector<double> order_p;
};

inline void fill_orders(ConvergenceTable& t) {
    for (std::size_t i = 1; i < t.rows.size(); ++i) {
        t.order_c.push_back(std::log2(t.rows[i - 1].l2_c / t.rows[i].l2_c));
        t.order_p.push_back(std::log2(t.rows[i - 1].l2_p / t.rows[i].l2_p));
    }
}

/// Steady solution, fixed large steps; grids with coarse_n = 3 and levels first_level.. .
inline ConvergenceTable mms_spatial_study(MmsSolution m, int first_levels = 3, int refinements = 2, double dt = 10.0,
                                          int steps = 5) {
    m.steady = true;
    ConvergenceTable t;
    for (int r = 0; r <= refinements; ++r) t.rows.push_back(mms_run(m, 3, first_levels + r, dt, steps));
    fill_orders(t);
    return t;
}

/// Unsteady solution on a fixed grid, halving dt at fixed end time.
inline ConvergenceTable mms_temporal_study(MmsSolution m, int levels = 6, double t_end = 1.0, int first_steps = 4,
                                           int refinements = 2) {
    m.steady = false;
    ConvergenceTable t;
    for (int r = 0; r <= refinements; ++r) {
        const int steps = first_steps << r;
        t.rows.push_back(mms_run(m, 3, levels, t_end / steps, steps));
    }
    fill_orders(t);
    return t;
}

}  // namespace dduq
