#ifndef FLUXLOSS_MODEL_HPP
#define FLUXLOSS_MODEL_HPP

#include <complex>
#include <optional>

#include "fluxloss/params.hpp"

// Closed-form vortex-loss physics: penetration depths, Bardeen-Stephen
// flux-flow resistivity, thermally activated depinning, the complex
// sensitivity to trapped flux, surface impedance, and T1 bounds.
//
// All functions are pure; temperatures at or above 0.999*Tc are rejected
// with std::domain_error rather than returning divergent values.

namespace fluxloss::model {

/// Upper critical field B_c2(T) = B_c2(0) * (1 - (T/Tc)^2)  [T]
double bc2(double t_k, const MaterialParams& mp);

/// Two-fluid condensate penetration depth
/// lambda_s(T) = lambda_L / sqrt(1 - (T/Tc)^4)  [m]
double lambda_s(double t_k, const MaterialParams& mp);

/// Thermally activated depinning frequency omega_d(T) = omega0*exp(alpha*T)
double depinning_frequency(double t_k, const PinningParams& pp);

/// Bardeen-Stephen flux-flow resistivity rho_ff = rho_n * B_trap / B_c2(T)
double flux_flow_resistivity(double t_k, double b_trap_tesla,
                             const MaterialParams& mp);

/// Gittleman-Rosenblum complex resistivity rho_ff / (1 - i*omega_d/omega),
/// the zero-creep limit of the Coffey-Clem vortex response.
std::complex<double> gr_resistivity(double t_k, double b_trap_tesla,
                                    double omega, const MaterialParams& mp,
                                    const PinningParams& pp);

/// Complex sensitivity to trapped flux, per unit trapped field:
///   S + iS' = rho_n / (2 lambda_s(T) B_c2(T))
///             * (omega^2 + i F omega omega_d(T)) / (omega^2 + omega_d^2(T))
/// The real part carries no F; S-data alone constrain (omega0, alpha).
ComplexSensitivity sensitivity(double t_k, double omega,
                               const MaterialParams& mp,
                               const PinningParams& pp);

/// Full surface impedance Z = i omega mu0 sqrt(lambda_s^2 + lambda_v^2),
/// with the vortex penetration depth branch chosen so Re(Z) >= 0. Its
/// small-field expansion is i omega mu0 lambda_s + B_trap*(S + iS').
std::complex<double> surface_impedance(double t_k, double b_trap_tesla,
                                       double omega, const MaterialParams& mp,
                                       const PinningParams& pp);

/// Scale a sensitivity between resonant frequencies, R_fl ~ sqrt(f0).
double scale_sensitivity_frequency(double s, double f_from_hz, double f_to_hz);

/// Photon lifetime bound T1 = [omega * (1/Q_ox0 + S*B_trap/G)]^-1  [s].
/// q_ox0 == nullopt means oxide-free (1/Q_ox0 = 0); may return +inf.
double t1_bound(std::optional<double> q_ox0, double s_ohm_per_tesla,
                double b_trap_tesla, const MaterialParams& mp);

}  // namespace fluxloss::model

#endif
