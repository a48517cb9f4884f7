#ifndef FLUXLOSS_PARAMS_HPP
#define FLUXLOSS_PARAMS_HPP

#include <stdexcept>

#include "fluxloss/units.hpp"

namespace fluxloss {

/// Fixed niobium/cavity constants. Defaults are for a 6 GHz TESLA-shaped
/// bulk-niobium cavity.
struct MaterialParams {
  double rho_n = 4e-10;      // normal-state resistivity [Ohm m]
  double bc2_0 = 0.2;        // upper critical field at 0 K [T]
  double tc = 9.2;           // critical temperature [K]
  double lambda_l = 39e-9;   // London penetration depth at 0 K [m]
  double g = 275.0;          // geometry factor [Ohm]
  double f0 = 6e9;           // resonant frequency [Hz]

  double omega() const { return 2.0 * kPi * f0; }

  void validate() const {
    if (!(rho_n > 0) || !(bc2_0 > 0) || !(tc > 0) || !(lambda_l > 0) ||
        !(g > 0) || !(f0 > 0)) {
      throw std::invalid_argument(
          "MaterialParams: all fields must be strictly positive");
    }
  }
};

/// Vortex pinning parameters, normally obtained from a fit. F is the
/// dimensionless reactive scale factor and varies per dataset.
struct PinningParams {
  double omega0 = 2.22e10;  // depinning frequency at 0 K [rad/s]
  double alpha = 0.701;     // thermal activation coefficient [1/K]
  double f = 1.0;           // reactive scale factor [-]

  void validate() const {
    if (!(omega0 > 0)) {
      throw std::invalid_argument("PinningParams: omega0 must be > 0");
    }
    if (!(alpha == alpha)) {
      throw std::invalid_argument("PinningParams: alpha must be finite");
    }
    if (!(f > 0)) {
      throw std::invalid_argument("PinningParams: f must be > 0");
    }
  }
};

struct ComplexSensitivity {
  double s = 0.0;        // resistive sensitivity [Ohm/T]
  double s_prime = 0.0;  // reactive sensitivity [Ohm/T]
};

/// Scalar measurement with 1-sigma uncertainty.
struct ValueErr {
  double value = 0.0;
  double err = 0.0;
};

}  // namespace fluxloss

#endif
