#pragma once

/**
 * @file random_fields.hpp
 * @brief Parametric porosity fields phi(x, theta), theta in [-1,1]^M, and the derived permeability.
 *
 * Field kinds (coordinates x, y, z; in 2D the vertical coordinate plays z):
 *
 *  - Constant:   phi = phi_mean.
 *  - Paral3Rv:   3D parallelepiped [0,600]^2 x [0,150],
 *                phi = 0.1 + 0.01 (t1 sin(pi x/600) + t2 sin(pi y/600) + t3 sin(pi z/150)
 *                                  + t1 sin(pi x/600) sin(pi y/600) + t2 sin(pi x/600) sin(pi z/150)).
 *                On a 2D (x, z) grid only the pure x and pure z terms remain:
 *                phi = 0.1 + 0.01 (t1 sin(pi x/600) + t2 sin(pi z/150)), M = 2.
 *  - Cyl3Layer:  phi = 0.1 + 0.05 c0(z) (t1 x/600 cos(pi x/300) + t2 sin(pi y/150)
 *                                       + t3 cos(pi x/300) sin(pi y/150)),
 *                c0 = 0.01 for z <= -100, 0.10 for -100 < z <= -50, 1.0 above.
 *  - LayeredCz:  phi = 0.1 + cz(z) (t1 cos(pi x/600) + t2 cos(pi y/300)
 *                                   + t3 sin(pi x/600) cos(pi z/150)),
 *                cz = 0.01 for z < -100, 0.1 for -100 <= z < -50, 1.0 above.
 *
 * Formulas are evaluated as printed; the two layered kinds use the box
 * [-300,300] x [-150,150] x [-150,0] that bounds the elliptic cylinder.
 * Every field is affine in each theta_j.
 */

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "dduq/constitutive.hpp"
#include "dduq/discretization.hpp"
#include "dduq/errors.hpp"
#include "dduq/grid.hpp"
#include "dduq/quadrature.hpp"

namespace dduq {

enum class PorosityKind { Constant, Paral3Rv, Cyl3Layer, LayeredCz };

inline const char* to_string(PorosityKind k) {
    switch (k) {
        case PorosityKind::Constant: return "constant";
        case PorosityKind::Paral3Rv: return "paral_3rv";
        case PorosityKind::Cyl3Layer: return "cyl_3layer";
        case PorosityKind::LayeredCz: return "layered_cz";
    }
    return "?";
}

inline PorosityKind porosity_kind_from_string(const std::string& s) {
    for (auto k : {PorosityKind::Constant, PorosityKind::Paral3Rv, PorosityKind::Cyl3Layer, PorosityKind::LayeredCz})
        if (s == to_string(k)) return k;
    throw ConfigError("stochastic: unknown field kind '" + s + "'");
}

/// Geometry constants entering the closed forms; defaults reproduce the printed fields.
struct FieldConstants {
    double base = 0.1;
    double paral_amplitude = 0.01;
    double paral_lx = 600.0, paral_ly = 600.0, paral_lz = 150.0;
    double cyl_amplitude = 0.05;
    double cyl_x_scale = 600.0, cyl_x_period = 300.0, cyl_y_period = 150.0;
    double layered_x_period = 600.0, layered_y_period = 300.0, layered_z_period = 150.0;
    std::array<double, 2> layer_breaks{-100.0, -50.0};        ///< increasing in z
    std::array<double, 3> layer_factors{0.01, 0.10, 1.0};     ///< bottom, middle, top
};

struct PorosityFieldSpec {
    PorosityKind kind = PorosityKind::Constant;
    int dim_theta = 0;
    BoxDomain domain{};
    FieldConstants constants{};

    /// Natural number of random variables of a kind on a grid of dimension dim.
    static int natural_dim_theta(PorosityKind kind, int dim) {
        switch (kind) {
            case PorosityKind::Constant: return 0;
            case PorosityKind::Paral3Rv: return dim == 3 ? 3 : 2;
            default: return 3;
        }
    }

    static PorosityFieldSpec make(PorosityKind kind, const BoxDomain& domain, int dim_theta = -1) {
        PorosityFieldSpec s;
        s.kind = kind;
        s.domain = domain;
        s.dim_theta = dim_theta < 0 ? natural_dim_theta(kind, domain.dim) : dim_theta;
        s.validate();
        return s;
    }

    void validate() const {
        domain.validate();
        if (kind != PorosityKind::Constant && dim_theta != natural_dim_theta(kind, domain.dim))
            throw ConfigError(std::string("stochastic: field ") + to_string(kind) + " needs M = " +
                              std::to_string(natural_dim_theta(kind, domain.dim)));
        if ((kind == PorosityKind::Cyl3Layer || kind == PorosityKind::LayeredCz) && domain.dim != 3)
            throw ConfigError(std::string("stochastic: field ") + to_string(kind) + " is defined in 3D only");
        if (!(constants.layer_breaks[0] < constants.layer_breaks[1]))
            throw ConfigError("stochastic: layer breakpoints must be strictly ordered");
    }
};

using ThetaPoint = std::vector<double>;

inline double porosity_at(const PorosityFieldSpec& spec, std::span<const double> x, std::span<const double> theta) {
    using std::numbers::pi;
    check_theta(theta, spec.dim_theta);
    const auto& d = spec.domain;
    const double slack = 1e-9 * (d.hi[0] - d.lo[0]);
    for (int k = 0; k < d.dim; ++k)
        if (x[k] < d.lo[k] - slack || x[k] > d.hi[k] + slack) throw DomainError("porosity_at: point outside domain");

    const auto& c = spec.constants;
    const double X = x[0];
    const double Y = d.dim == 3 ? x[1] : 0.0;
    const double Z = x[d.dim - 1];
    switch (spec.kind) {
        case PorosityKind::Constant: return c.base;
        case PorosityKind::Paral3Rv: {
            const double sx = std::sin(X * pi / c.paral_lx);
            const double sz = std::sin(Z * pi / c.paral_lz);
            if (d.dim == 2) return c.base + c.paral_amplitude * (theta[0] * sx + theta[1] * sz);
            const double sy = std::sin(Y * pi / c.paral_ly);
            return c.base + c.paral_amplitude * (theta[0] * sx + theta[1] * sy + theta[2] * sz + theta[0] * sx * sy +
                                                 theta[1] * sx * sz);
        }
        case PorosityKind::Cyl3Layer: {
            const double c0 = Z <= c.layer_breaks[0] ? c.layer_factors[0]
                              : Z <= c.layer_breaks[1] ? c.layer_factors[1]
                                                       : c.layer_factors[2];
            const double cx = std::cos(pi * X / c.cyl_x_period);
            const double sy = std::sin(pi * Y / c.cyl_y_period);
            return c.base + c.cyl_amplitude * c0 * (theta[0] * X / c.cyl_x_scale * cx + theta[1] * sy + theta[2] * cx * sy);
        }
        case PorosityKind::LayeredCz: {
            const double cz = Z < c.layer_breaks[0] ? c.layer_factors[0]
                              : Z < c.layer_breaks[1] ? c.layer_factors[1]
                                                      : c.layer_factors[2];
            return c.base + cz * (theta[0] * std::cos(pi * X / c.layered_x_period) +
                                  theta[1] * std::cos(pi * Y / c.layered_y_period) +
                                  theta[2] * std::sin(pi * X / c.layered_x_period) * std::cos(pi * Z / c.layered_z_period));
        }
    }
    return c.base;
}

/// Per-vertex porosity and Kozeny-Carman permeability. Throws InvalidRealizationError
/// if any vertex porosity leaves (0,1).
inline CoefficientFields coefficient_fields(const PorosityFieldSpec& spec, const StructuredGrid& grid,
                                            std::span<const double> theta, const FlowParameters& params) {
    const double kappa = kc_scaling_factor(params);
    CoefficientFields out;
    out.phi.resize(grid.num_vertices());
    out.K.resize(grid.num_vertices());
    for (std::size_t v = 0; v < grid.num_vertices(); ++v) {
        const auto x = grid.coords(v);
        double phi = porosity_at(spec, x, theta);
        if (spec.kind == PorosityKind::Constant) phi = params.phi_mean;
        if (!(phi > 0.0 && phi < 1.0))
            throw InvalidRealizationError("porosity " + std::to_string(phi) + " outside (0,1) at vertex " +
                                              std::to_string(v),
                                          v, phi);
        out.phi[v] = phi;
        out.K[v] = kozeny_carman(phi, kappa);
    }
    return out;
}

}  // namespace dduq
