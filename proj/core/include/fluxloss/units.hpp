#ifndef FLUXLOSS_UNITS_HPP
#define FLUXLOSS_UNITS_HPP

// Physical constants and unit conversions. All internal quantities are SI;
// display units (nOhm/mG, mG) appear only at I/O boundaries.

namespace fluxloss {

inline constexpr double kMu0 = 1.25663706212e-6;      // vacuum permeability [H/m]
inline constexpr double kHbar = 1.054571817e-34;      // reduced Planck constant [J s]
inline constexpr double kPi = 3.14159265358979323846;

// 1 nOhm/mG = 1e-9 Ohm / 1e-7 T = 1e-2 Ohm/T
inline constexpr double kOhmPerTeslaPerNohmPerMg = 1e-2;

inline double to_nohm_per_mg(double s_ohm_per_tesla) {
  return s_ohm_per_tesla / kOhmPerTeslaPerNohmPerMg;
}

inline double to_ohm_per_tesla(double s_nohm_per_mg) {
  return s_nohm_per_mg * kOhmPerTeslaPerNohmPerMg;
}

inline double mg_to_tesla(double b_mg) { return b_mg * 1e-7; }
inline double tesla_to_mg(double b_tesla) { return b_tesla * 1e7; }

}  // namespace fluxloss

#endif
