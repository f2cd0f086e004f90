#pragma once

/**
 * @file discretization.hpp
 * @brief Vertex-centered finite volumes for the coupled salt/liquid mass balances.
 *
 * Unknowns are interleaved per vertex as (c, p). Equation 0 of a vertex is the
 * salt balance, equation 1 the liquid mass balance, both integrated over the
 * dual control volume and discretized in time by implicit Euler:
 *
 *   salt:  V phi (rho c - rho_old c_old)/dt + sum_f (rho_f c_up q - rho_f phi_f Dm dc/h) A_f
 *   mass:  V phi (rho - rho_old)/dt        + sum_f rho_f q A_f
 *
 * with the Darcy face flux q = -(K_f/mu) ((p_B - p_A)/h + rho_f g n_z), n_z the
 * vertical component of the unit vector from A to B. K_f is the harmonic mean of
 * the vertex permeabilities, rho_f and phi_f arithmetic means, and c_up the
 * upwind value. Faces exist only between grid neighbours, so the domain boundary
 * is impermeable unless a Dirichlet row replaces the equation.
 */

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dduq/constitutive.hpp"
#include "dduq/errors.hpp"
#include "dduq/grid.hpp"
#include "dduq/parallel.hpp"
#include "dduq/sparse.hpp"

namespace dduq {

inline constexpr int kSaltEq = 0;
inline constexpr int kMassEq = 1;

struct FieldState {
    Vector c;
    Vector p;
    double t = 0.0;
};

struct CoefficientFields {
    Vector phi;
    Vector K;
};

/// Per-vertex strong conditions. Flags of zero length mean "none".
struct DirichletData {
    std::vector<std::uint8_t> c_fixed;
    Vector c_value;
    std::vector<std::uint8_t> p_fixed;
    Vector p_value;

    bool c_is_fixed(std::size_t v) const noexcept { return !c_fixed.empty() && c_fixed[v]; }
    bool p_is_fixed(std::size_t v) const noexcept { return !p_fixed.empty() && p_fixed[v]; }

    /// Flags per interleaved unknown, in the layout the multigrid masks expect.
    std::vector<std::uint8_t> unknown_mask(std::size_t nv) const {
        std::vector<std::uint8_t> m(2 * nv, 0);
        for (std::size_t v = 0; v < nv; ++v) {
            m[2 * v] = c_is_fixed(v);
            m[2 * v + 1] = p_is_fixed(v);
        }
        return m;
    }
};

/// Brine patch c = 1, rest of the top c = 0, pinned pressure p = 0.
inline DirichletData tagged_boundary(const StructuredGrid& g) {
    const std::size_t nv = g.num_vertices();
    DirichletData bc;
    bc.c_fixed.assign(nv, 0);
    bc.c_value.assign(nv, 0.0);
    bc.p_fixed.assign(nv, 0);
    bc.p_value.assign(nv, 0.0);
    for (std::size_t v = 0; v < nv; ++v) {
        const auto t = g.tag(v);
        if (t == BoundaryTag::DirichletBrine || t == BoundaryTag::DirichletFresh) {
            bc.c_fixed[v] = 1;
            bc.c_value[v] = t == BoundaryTag::DirichletBrine ? 1.0 : 0.0;
        }
        if (g.pressure_pinned(v)) bc.p_fixed[v] = 1;
    }
    return bc;
}

/// Everything the assembler needs besides the two time levels.
struct DiscreteProblem {
    const StructuredGrid* grid = nullptr;
    const CoefficientFields* coeff = nullptr;
    FlowParameters params{};
    DirichletData bc{};
    Vector salt_source{};  ///< control-volume integrated [kg/s], optional
    Vector mass_source{};  ///< control-volume integrated [kg/s], optional
    int threads = 1;

    int gravity_axis() const noexcept {
        return params.gravity_axis < 0 ? grid->vertical_axis() : params.gravity_axis;
    }
};

inline Vector pack_state(const FieldState& s) {
    Vector x(2 * s.c.size());
    for (std::size_t v = 0; v < s.c.size(); ++v) {
        x[2 * v] = s.c[v];
        x[2 * v + 1] = s.p[v];
    }
    return x;
}

inline FieldState unpack_state(std::span<const double> x, double t) {
    FieldState s;
    s.t = t;
    s.c.resize(x.size() / 2);
    s.p.resize(x.size() / 2);
    for (std::size_t v = 0; v < s.c.size(); ++v) {
        s.c[v] = x[2 * v];
        s.p[v] = x[2 * v + 1];
    }
    return s;
}

/// Fresh-water hydrostatic pressure, zero on the top face.
inline Vector hydrostatic_pressure(const StructuredGrid& g, const FlowParameters& prm) {
    const int a = prm.gravity_axis < 0 ? g.vertical_axis() : prm.gravity_axis;
    const double top = g.domain().hi[a];
    Vector p(g.num_vertices());
    for (std::size_t v = 0; v < p.size(); ++v) p[v] = prm.rho0 * prm.g * (top - g.coords(v)[a]);
    return p;
}

/// c = 0 except c = 1 on brine vertices; p hydrostatic for pure water.
inline FieldState initial_state(const StructuredGrid& g, const FlowParameters& prm) {
    FieldState s;
    s.c.assign(g.num_vertices(), 0.0);
    for (std::size_t v = 0; v < s.c.size(); ++v)
        if (g.tag(v) == BoundaryTag::DirichletBrine) s.c[v] = 1.0;
    s.p = hydrostatic_pressure(g, prm);
    return s;
}

namespace detail {

struct Face {
    std::size_t nb;
    double area;
    double h;
    double nz;  ///< vertical component of the unit vector towards nb
};

/// Faces of the dual cell of v, in a fixed order (axis, then -/+).
inline int faces_of(const StructuredGrid& g, std::size_t v, int gravity_axis, std::array<Face, 6>& out) {
    const auto id = g.ijk(v);
    int nf = 0;
    for (int a = 0; a < g.dim(); ++a) {
        double area = 1.0;
        for (int m = 0; m < g.dim(); ++m)
            if (m != a) area *= g.dual_extent(m, id[m]);
        for (int s = -1; s <= 1; s += 2) {
            auto nid = id;
            nid[a] += s;
            if (nid[a] < 0 || nid[a] >= g.n()[a]) continue;
            out[nf++] = Face{g.index(nid[0], nid[1], nid[2]), area, g.spacing()[a], a == gravity_axis ? double(s) : 0.0};
        }
    }
    return nf;
}

inline double harmonic_mean(double a, double b) noexcept { return 2.0 * a * b / (a + b); }

inline void check_dt(double dt) {
    if (!(dt > 0.0)) throw UsageError("assembly: time step must be positive");
}

inline void check_problem(const DiscreteProblem& pr, std::size_t x_len) {
    if (pr.grid == nullptr || pr.coeff == nullptr) throw UsageError("assembly: problem not initialised");
    const std::size_t nv = pr.grid->num_vertices();
    if (x_len != 2 * nv) throw UsageError("assembly: state length does not match the grid");
    if (pr.coeff->phi.size() != nv || pr.coeff->K.size() != nv)
        throw UsageError("assembly: coefficient fields do not match the grid");
}

}  // namespace detail

/// Normal Darcy flux from vertex a towards its grid neighbour b [m/s].
inline double darcy_face_velocity(const StructuredGrid& g, const FieldState& s, const CoefficientFields& coeff,
                                  const FlowParameters& prm, std::size_t a, std::size_t b) {
    const auto ia = g.ijk(a), ib = g.ijk(b);
    int axis = -1, dist = 0;
    for (int k = 0; k < 3; ++k)
        if (ia[k] != ib[k]) {
            if (axis >= 0) throw UsageError("darcy_face_velocity: vertices are not grid neighbours");
            axis = k;
            dist = ib[k] - ia[k];
        }
    if (axis < 0 || (dist != 1 && dist != -1))
        throw UsageError("darcy_face_velocity: vertices are not grid neighbours");
    const int ga = prm.gravity_axis < 0 ? g.vertical_axis() : prm.gravity_axis;
    const double nz = axis == ga ? double(dist) : 0.0;
    const double kf = detail::harmonic_mean(coeff.K[a], coeff.K[b]);
    const double rf = 0.5 * (density(s.c[a], prm) + density(s.c[b], prm));
    return -(kf / prm.mu) * ((s.p[b] - s.p[a]) / g.spacing()[axis] + rf * prm.g * nz);
}

/// Residual on interleaved unknowns (c, p) per vertex.
inline Vector assemble_residual(const DiscreteProblem& pr, std::span<const double> x_new,
                                std::span<const double> x_old, double dt) {
    detail::check_dt(dt);
    detail::check_problem(pr, x_new.size());
    if (x_old.size() != x_new.size()) throw UsageError("assembly: states on different grids");
    const auto& g = *pr.grid;
    const auto& prm = pr.params;
    const auto& phi = pr.coeff->phi;
    const auto& K = pr.coeff->K;
    const int ga = pr.gravity_axis();
    Vector r(x_new.size());

    parallel_for(g.num_vertices(), pr.threads, [&](std::size_t i) {
        const double ci = x_new[2 * i], pi = x_new[2 * i + 1];
        const double co = x_old[2 * i];
        const double vol = dual_volume(g, i);
        const double rho_i = density(ci, prm);
        const double rho_o = density(co, prm);
        double rs = vol * phi[i] * (rho_i * ci - rho_o * co) / dt;
        double rm = vol * phi[i] * (rho_i - rho_o) / dt;

        std::array<detail::Face, 6> faces;
        const int nf = detail::faces_of(g, i, ga, faces);
        for (int f = 0; f < nf; ++f) {
            const auto& fc = faces[f];
            const std::size_t b = fc.nb;
            const double cb = x_new[2 * b], pb = x_new[2 * b + 1];
            const double rf = 0.5 * (rho_i + density(cb, prm));
            const double tf = detail::harmonic_mean(K[i], K[b]) / prm.mu;
            const double q = -tf * ((pb - pi) / fc.h + rf * prm.g * fc.nz);
            const double cup = q >= 0.0 ? ci : cb;
            const double phif = 0.5 * (phi[i] + phi[b]);
            rm += rf * q * fc.area;
            rs += (rf * cup * q - rf * phif * prm.Dm * (cb - ci) / fc.h) * fc.area;
        }
        if (!pr.salt_source.empty()) rs -= pr.salt_source[i];
        if (!pr.mass_source.empty()) rm -= pr.mass_source[i];
        if (pr.bc.c_is_fixed(i)) rs = ci - pr.bc.c_value[i];
        if (pr.bc.p_is_fixed(i)) rm = pi - pr.bc.p_value[i];
        r[2 * i + kSaltEq] = rs;
        r[2 * i + kMassEq] = rm;
    });
    return r;
}

inline Vector assemble_residual(const DiscreteProblem& pr, const FieldState& s_new, const FieldState& s_old,
                                double dt) {
    return assemble_residual(pr, pack_state(s_new), pack_state(s_old), dt);
}

/// Vertex-plus-neighbours pattern shared by every operator on the grid.
inline std::vector<std::vector<std::size_t>> stencil_pattern(const StructuredGrid& g) {
    std::vector<std::vector<std::size_t>> pat(g.num_vertices());
    std::array<detail::Face, 6> faces;
    for (std::size_t v = 0; v < pat.size(); ++v) {
        const int nf = detail::faces_of(g, v, g.vertical_axis(), faces);
        pat[v].push_back(v);
        for (int f = 0; f < nf; ++f) pat[v].push_back(faces[f].nb);
    }
    return pat;
}

/// Analytic Jacobian of assemble_residual; upwind directions are frozen at x_new.
inline BlockCsrMatrix<2> assemble_jacobian(const DiscreteProblem& pr, std::span<const double> x_new,
                                           std::span<const double> x_old, double dt) {
    detail::check_dt(dt);
    detail::check_problem(pr, x_new.size());
    if (x_old.size() != x_new.size()) throw UsageError("assembly: states on different grids");
    const auto& g = *pr.grid;
    const auto& prm = pr.params;
    const auto& phi = pr.coeff->phi;
    const auto& K = pr.coeff->K;
    const int ga = pr.gravity_axis();
    const double dr = 0.5 * density_slope(prm);
    BlockCsrMatrix<2> jac(stencil_pattern(g));

    parallel_for(g.num_vertices(), pr.threads, [&](std::size_t i) {
        const double ci = x_new[2 * i], pi = x_new[2 * i + 1];
        const double vol = dual_volume(g, i);
        const double rho_i = density(ci, prm);
        double* dii = jac.block(jac.diag_pos(i));
        // rows: salt (0), mass (1); columns: c (0), p (1)
        dii[0] += vol * phi[i] * (density_slope(prm) * ci + rho_i) / dt;
        dii[2] += vol * phi[i] * density_slope(prm) / dt;

        std::array<detail::Face, 6> faces;
        const int nf = detail::faces_of(g, i, ga, faces);
        for (int f = 0; f < nf; ++f) {
            const auto& fc = faces[f];
            const std::size_t b = fc.nb;
            const double cb = x_new[2 * b], pb = x_new[2 * b + 1];
            const double rf = 0.5 * (rho_i + density(cb, prm));
            const double tf = detail::harmonic_mean(K[i], K[b]) / prm.mu;
            const double q = -tf * ((pb - pi) / fc.h + rf * prm.g * fc.nz);
            const double dq_dc = -tf * prm.g * fc.nz * dr;  // same for c_i and c_b
            const double dq_dpi = tf / fc.h;
            const double dq_dpb = -tf / fc.h;
            const bool up_self = q >= 0.0;
            const double cup = up_self ? ci : cb;
            const double phif = 0.5 * (phi[i] + phi[b]);
            const double A = fc.area;
            const double grad = (cb - ci) / fc.h;

            double* dib = jac.block(i, b);
            // mass flux rho_f q A
            dii[2] += A * (dr * q + rf * dq_dc);
            dib[2] += A * (dr * q + rf * dq_dc);
            dii[3] += A * rf * dq_dpi;
            dib[3] += A * rf * dq_dpb;
            // advective salt flux rho_f c_up q A
            dii[0] += A * (dr * cup * q + (up_self ? rf * q : 0.0) + rf * cup * dq_dc);
            dib[0] += A * (dr * cup * q + (up_self ? 0.0 : rf * q) + rf * cup * dq_dc);
            dii[1] += A * rf * cup * dq_dpi;
            dib[1] += A * rf * cup * dq_dpb;
            // diffusive salt flux -rho_f phi_f Dm grad A
            dii[0] += -A * phif * prm.Dm * (dr * grad - rf / fc.h);
            dib[0] += -A * phif * prm.Dm * (dr * grad + rf / fc.h);
        }
    });
    for (std::size_t v = 0; v < g.num_vertices(); ++v) {
        if (pr.bc.c_is_fixed(v)) jac.set_identity_row(2 * v + kSaltEq);
        if (pr.bc.p_is_fixed(v)) jac.set_identity_row(2 * v + kMassEq);
    }
    return jac;
}

inline BlockCsrMatrix<2> assemble_jacobian(const DiscreteProblem& pr, const FieldState& s_new,
                                           const FieldState& s_old, double dt) {
    return assemble_jacobian(pr, pack_state(s_new), pack_state(s_old), dt);
}

/// Scalar finite-volume operator  sum_f kappa A_f (u_i - u_b)/h  + mass * V u_i,
/// with unit rows on `dirichlet` vertices.
inline BlockCsrMatrix<1> assemble_diffusion_operator(const StructuredGrid& g, double kappa, double mass,
                                                     const std::vector<std::uint8_t>& dirichlet) {
    BlockCsrMatrix<1> a(stencil_pattern(g));
    std::array<detail::Face, 6> faces;
    for (std::size_t i = 0; i < g.num_vertices(); ++i) {
        if (!dirichlet.empty() && dirichlet[i]) {
            a.set_identity_row(i);
            continue;
        }
        const int nf = detail::faces_of(g, i, g.vertical_axis(), faces);
        double* d = a.block(a.diag_pos(i));
        d[0] += mass * dual_volume(g, i);
        for (int f = 0; f < nf; ++f) {
            const double w = kappa * faces[f].area / faces[f].h;
            d[0] += w;
            a.block(i, faces[f].nb)[0] -= w;
        }
    }
    return a;
}

inline std::vector<std::uint8_t> boundary_mask(const StructuredGrid& g) {
    std::vector<std::uint8_t> m(g.num_vertices(), 0);
    for (std::size_t v = 0; v < m.size(); ++v) m[v] = g.on_boundary(v);
    return m;
}

}  // namespace dduq
