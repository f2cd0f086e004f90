#pragma once

/**
 * @file constitutive.hpp
 * @brief Physical constants and constitutive laws of the density-driven flow model.
 *
 * All quantities are SI. The liquid density is affine in the brine mass
 * fraction, the viscosity is constant, and the permeability follows a
 * Kozeny-Carman-like law scaled so that K(phi_mean) == K_mean.
 */

#include <string>

#include "dduq/errors.hpp"

namespace dduq {

/// Seconds per year used at the configuration boundary (365 days).
inline constexpr double kSecondsPerYear = 3.1536e7;

struct FlowParameters {
    double rho0 = 1000.0;       ///< pure water density [kg/m^3]
    double rho1 = 1200.0;       ///< brine density [kg/m^3]
    double mu = 1.0e-3;         ///< dynamic viscosity [kg/(m s)]
    double Dm = 0.565e-6;       ///< molecular diffusion [m^2/s]
    double g = 9.81;            ///< gravity magnitude [m/s^2]
    int gravity_axis = -1;      ///< vertical axis; -1 selects the last grid axis
    double phi_mean = 0.1;      ///< mean porosity [-]
    double K_mean = 4.845e-13;  ///< mean permeability [m^2]

    void validate() const {
        if (!(rho1 > rho0 && rho0 > 0.0)) throw ConfigError("physics: require rho1 > rho0 > 0");
        if (!(mu > 0.0)) throw ConfigError("physics: require mu > 0");
        if (!(Dm >= 0.0)) throw ConfigError("physics: require Dm >= 0");
        if (!(g >= 0.0)) throw ConfigError("physics: require g >= 0");
        if (!(phi_mean > 0.0 && phi_mean < 1.0)) throw ConfigError("physics: require 0 < phi_mean < 1");
        if (!(K_mean > 0.0)) throw ConfigError("physics: require K_mean > 0");
    }
};

/// Liquid density rho0 + (rho1 - rho0) c; evaluated as written for any c.
constexpr double density(double c, const FlowParameters& p) noexcept {
    return p.rho0 + (p.rho1 - p.rho0) * c;
}

/// d(density)/dc.
constexpr double density_slope(const FlowParameters& p) noexcept { return p.rho1 - p.rho0; }

inline double kozeny_carman(double phi, double kappa) {
    if (!(phi > 0.0 && phi < 1.0))
        throw DomainError("kozeny_carman: porosity " + std::to_string(phi) + " outside (0,1)");
    return kappa * phi * phi * phi / (1.0 - phi * phi);
}

/// Scaling factor kappa_KC such that kozeny_carman(phi_mean, kappa_KC) == K_mean.
inline double kc_scaling_factor(const FlowParameters& p) {
    const double phi = p.phi_mean;
    if (!(phi > 0.0 && phi < 1.0))
        throw DomainError("kc_scaling_factor: phi_mean " + std::to_string(phi) + " outside (0,1)");
    return p.K_mean * (1.0 - phi * phi) / (phi * phi * phi);
}

}  // namespace dduq
