#include "fluxloss/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fluxloss::model {

namespace {

void check_temperature(double t_k, const MaterialParams& mp) {
  if (!(t_k >= 0.0)) {
    throw std::domain_error("temperature must be >= 0 K, got " +
                            std::to_string(t_k));
  }
  // Guard well below Tc; the vortex model diverges approaching the
  // normal state.
  if (t_k >= 0.999 * mp.tc) {
    throw std::domain_error("temperature " + std::to_string(t_k) +
                            " K is at or above 0.999*Tc (Tc = " +
                            std::to_string(mp.tc) + " K)");
  }
}

void check_omega(double omega) {
  if (!(omega > 0.0)) {
    throw std::domain_error("angular frequency must be > 0");
  }
}

}  // namespace

double bc2(double t_k, const MaterialParams& mp) {
  check_temperature(t_k, mp);
  const double x = t_k / mp.tc;
  return mp.bc2_0 * (1.0 - x * x);
}

double lambda_s(double t_k, const MaterialParams& mp) {
  check_temperature(t_k, mp);
  const double x = t_k / mp.tc;
  return mp.lambda_l / std::sqrt(1.0 - x * x * x * x);
}

double depinning_frequency(double t_k, const PinningParams& pp) {
  if (!(t_k >= 0.0)) {
    throw std::domain_error("temperature must be >= 0 K");
  }
  return pp.omega0 * std::exp(pp.alpha * t_k);
}

double flux_flow_resistivity(double t_k, double b_trap_tesla,
                             const MaterialParams& mp) {
  const double b_c2 = bc2(t_k, mp);
  if (!(b_trap_tesla >= 0.0)) {
    throw std::domain_error("trapped field must be >= 0");
  }
  if (b_trap_tesla > b_c2) {
    throw std::domain_error("trapped field " + std::to_string(b_trap_tesla) +
                            " T exceeds Bc2(T) = " + std::to_string(b_c2) +
                            " T");
  }
  return mp.rho_n * b_trap_tesla / b_c2;
}

std::complex<double> gr_resistivity(double t_k, double b_trap_tesla,
                                    double omega, const MaterialParams& mp,
                                    const PinningParams& pp) {
  check_omega(omega);
  const double rho_ff = flux_flow_resistivity(t_k, b_trap_tesla, mp);
  const double omega_d = depinning_frequency(t_k, pp);
  return rho_ff / std::complex<double>(1.0, -omega_d / omega);
}

ComplexSensitivity sensitivity(double t_k, double omega,
                               const MaterialParams& mp,
                               const PinningParams& pp) {
  check_omega(omega);
  const double prefactor =
      mp.rho_n / (2.0 * lambda_s(t_k, mp) * bc2(t_k, mp));
  const double omega_d = depinning_frequency(t_k, pp);
  const double denom = omega * omega + omega_d * omega_d;
  return ComplexSensitivity{
      prefactor * omega * omega / denom,
      prefactor * pp.f * omega * omega_d / denom,
  };
}

std::complex<double> surface_impedance(double t_k, double b_trap_tesla,
                                       double omega, const MaterialParams& mp,
                                       const PinningParams& pp) {
  using namespace std::complex_literals;
  const std::complex<double> rho_gr =
      gr_resistivity(t_k, b_trap_tesla, omega, mp, pp);
  // lambda_v^2 branch fixed by requiring that the first-order expansion
  // reproduce S + iS' with a non-negative real part.
  const std::complex<double> lambda_v2 = -1i * rho_gr / (kMu0 * omega);
  const double ls = lambda_s(t_k, mp);
  std::complex<double> z =
      1i * omega * kMu0 * std::sqrt(ls * ls + lambda_v2);
  if (z.real() < 0.0) {
    z = -z;
  }
  return z;
}

double scale_sensitivity_frequency(double s, double f_from_hz,
                                   double f_to_hz) {
  if (!(f_from_hz > 0.0) || !(f_to_hz > 0.0)) {
    throw std::domain_error("frequencies must be > 0");
  }
  return s * std::sqrt(f_to_hz / f_from_hz);
}

double t1_bound(std::optional<double> q_ox0, double s_ohm_per_tesla,
                double b_trap_tesla, const MaterialParams& mp) {
  if (!(b_trap_tesla >= 0.0)) {
    throw std::domain_error("trapped field must be >= 0");
  }
  if (q_ox0 && !(*q_ox0 > 0.0)) {
    throw std::domain_error("Q_ox0 must be > 0 when present");
  }
  const double inv_loss = (q_ox0 ? 1.0 / *q_ox0 : 0.0) +
                          s_ohm_per_tesla * b_trap_tesla / mp.g;
  if (inv_loss <= 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return 1.0 / (mp.omega() * inv_loss);
}

}  // namespace fluxloss::model
