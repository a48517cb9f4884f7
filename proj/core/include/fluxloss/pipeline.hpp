#ifndef FLUXLOSS_PIPELINE_HPP
#define FLUXLOSS_PIPELINE_HPP

#include <vector>

#include "fluxloss/data.hpp"
#include "fluxloss/params.hpp"

// Measurement data reduction: ringdown traces -> field-resolved Q_L ->
// Q0(E, T), and pairwise cooldown subtraction into sensitivity curves
// with propagated uncertainties.

namespace fluxloss::pipeline {

struct QlPoint {
  double time_s = 0.0;
  double power_w = 0.0;
  double q_l = 0.0;
};

/// Field-resolved loaded quality factor from a power ringdown:
/// Q_L(t) = -omega / (d ln P_T / dt), slope from a sliding-window
/// least-squares fit of ln P_T on t. Windows with non-decaying slope or
/// non-positive power are dropped; throws if nothing survives.
std::vector<QlPoint> ql_from_decay(const DecayTrace& trace, int window = 21);

/// Q0 = (1/Q_L - 1/Q1)^-1. Throws std::domain_error if q_l >= q1
/// (nonphysical coupling).
double q0_from_ql(double q_l, double q1);

/// On-axis electric field E = cal * sqrt(P_T * Q1)  [V/m].
double onaxis_field(double p_t_w, double q1, double cal);

/// Intracavity photon number n = U / (hbar * 2*pi*f0).
double photon_number(double energy_j, double f0_hz);

struct MatchOptions {
  double temp_tol_k = 0.010;       // nearest-temperature match tolerance
  double field_rel_tol = 1e-6;     // same-field-bin match tolerance
  bool interpolate_inv_q0 = false; // linear interpolation in 1/Q0 vs T
};

/// Subtract a reference (zero-field) cooldown from a flux cooldown and
/// normalize by the trapped field:
///   S  =  (G/B_trap) (1/Q0_n - 1/Q0_1)
///   S' = -(2G/B_trap)(f0_n - f0_1)/f0_1(0)
/// Errors are propagated in quadrature from sigma_Q0, sigma_f0 and
/// sigma_B_trap. f0_1(0) is the reference's lowest-temperature frequency.
SensitivityCurve extract_sensitivity(const QDataset& ref, const QDataset& flux,
                                     const MaterialParams& mp,
                                     const MatchOptions& opts = {});

/// B_SC / B_NC with first-order propagated uncertainty. Throws if b_nc is
/// consistent with zero (|b_nc| <= sigma).
ValueErr flux_trapping_ratio(const ValueErr& b_nc, const ValueErr& b_sc);

struct ThermalizationCriterion {
  // Traces whose bath temperature deviates from the median by more than
  // this relative amount are discarded before averaging.
  double max_temp_drift_rel = 0.01;
};

/// Pointwise mean power over traces passing the stability criterion.
/// Traces on different time grids are resampled onto the first retained
/// grid. The label records how many traces were kept.
DecayTrace average_thermalized(const std::vector<DecayTrace>& traces,
                               const ThermalizationCriterion& crit = {});

struct ReduceOptions {
  int window = 21;
  double q1 = 1.4e9;   // antenna quality factor
  double cal = 1.0;    // E-field calibration [ (V/m) / sqrt(W) ]
};

struct ReduceLogEntry {
  std::string label;
  int windows_total = 0;
  int windows_kept = 0;
  int windows_overcoupled = 0;  // Q_L >= Q1, excluded
};

/// Reduce a set of decay traces to a QDataset: per-window Q_L -> Q0,
/// E from transmitted power, binned per decade in E, aggregated per
/// (trace temperature, bin).
QDataset reduce_traces(const std::vector<DecayTrace>& traces,
                       const ReduceOptions& opts = {},
                       std::vector<ReduceLogEntry>* log = nullptr);

}  // namespace fluxloss::pipeline

#endif
