#ifndef FLUXLOSS_DATA_HPP
#define FLUXLOSS_DATA_HPP

#include <string>
#include <vector>

namespace fluxloss {

/// Time-domain zero-span ringdown of transmitted power.
struct DecayTrace {
  std::vector<double> time_s;   // strictly increasing
  std::vector<double> power_w;  // >= 0
  double f0_hz = 0.0;
  double temperature_k = 0.0;
  std::string label;

  void validate() const;
};

/// One row of a reduced Q0 dataset.
struct QRow {
  double temperature_k = 0.0;
  double field_v_per_m = 0.0;
  double photon_n = 0.0;
  double q0 = 0.0;
  double q0_err = 0.0;
  double f0_hz = 0.0;
  double f0_err = 0.0;
};

/// Per-cooldown table of Q0(T, E) with the trapped-field level of that
/// cooldown. Rows are kept sorted by temperature, then field.
struct QDataset {
  std::string cooldown_id;
  double b_trap_tesla = 0.0;
  double b_trap_err_tesla = 0.0;
  std::vector<QRow> rows;

  void sort_rows();
  void validate() const;
};

struct SensPoint {
  double temperature_k = 0.0;
  double field_v_per_m = 0.0;
  double s = 0.0;            // [Ohm/T]
  double s_err = 0.0;
  double s_prime = 0.0;      // [Ohm/T]
  double s_prime_err = 0.0;
};

/// Per-cooldown sensitivity-to-trapped-flux curve with propagated errors.
struct SensitivityCurve {
  std::string cooldown_id;
  double b_trap_tesla = 0.0;
  std::vector<SensPoint> points;

  void validate() const;
};

}  // namespace fluxloss

#endif
