#include "fluxloss/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <map>
#include <stdexcept>

#include "fluxloss/units.hpp"

namespace fluxloss {

void DecayTrace::validate() const {
  if (time_s.size() != power_w.size()) {
    throw std::invalid_argument("DecayTrace: time/power length mismatch");
  }
  if (time_s.size() < 8) {
    throw std::invalid_argument("DecayTrace: need at least 8 samples, got " +
                                std::to_string(time_s.size()));
  }
  for (std::size_t i = 1; i < time_s.size(); ++i) {
    if (!(time_s[i] > time_s[i - 1])) {
      throw std::invalid_argument(
          "DecayTrace: times must be strictly increasing (index " +
          std::to_string(i) + ")");
    }
  }
  for (double p : power_w) {
    if (!(p >= 0.0)) {
      throw std::invalid_argument("DecayTrace: powers must be >= 0");
    }
  }
  if (!(f0_hz > 0.0)) {
    throw std::invalid_argument("DecayTrace: f0 must be > 0");
  }
}

void QDataset::sort_rows() {
  std::sort(rows.begin(), rows.end(), [](const QRow& a, const QRow& b) {
    if (a.temperature_k != b.temperature_k) {
      return a.temperature_k < b.temperature_k;
    }
    return a.field_v_per_m < b.field_v_per_m;
  });
}

void QDataset::validate() const {
  if (!(b_trap_err_tesla >= 0.0)) {
    throw std::invalid_argument("QDataset: b_trap uncertainty must be >= 0");
  }
  for (const QRow& r : rows) {
    if (!(r.q0 > 0.0)) {
      throw std::invalid_argument("QDataset: Q0 must be > 0");
    }
  }
}

void SensitivityCurve::validate() const {
  for (const SensPoint& p : points) {
    if (!(p.s_err >= 0.0) || !(p.s_prime_err >= 0.0)) {
      throw std::invalid_argument(
          "SensitivityCurve: uncertainties must be >= 0");
    }
  }
}

namespace pipeline {

std::vector<QlPoint> ql_from_decay(const DecayTrace& trace, int window) {
  trace.validate();
  if (window < 3) {
    throw std::invalid_argument("ql_from_decay: window must be >= 3");
  }
  const int n = static_cast<int>(trace.time_s.size());
  if (window > n) {
    throw std::invalid_argument("ql_from_decay: window exceeds trace length");
  }
  const double omega = 2.0 * kPi * trace.f0_hz;

  std::vector<QlPoint> out;
  for (int i = 0; i + window <= n; ++i) {
    // Least-squares slope of ln P on t over [i, i+window).
    bool usable = true;
    double st = 0.0, sl = 0.0;
    for (int j = i; j < i + window; ++j) {
      if (!(trace.power_w[j] > 0.0)) {
        usable = false;
        break;
      }
      st += trace.time_s[j];
      sl += std::log(trace.power_w[j]);
    }
    if (!usable) {
      continue;
    }
    const double mt = st / window;
    const double ml = sl / window;
    double stt = 0.0, stl = 0.0;
    for (int j = i; j < i + window; ++j) {
      const double dt = trace.time_s[j] - mt;
      stt += dt * dt;
      stl += dt * (std::log(trace.power_w[j]) - ml);
    }
    const double slope = stl / stt;
    // Require a genuine decay: the fitted ln-power drop across the window
    // must exceed floating-point noise, or a flat trace would yield
    // astronomically large Q_L from rounding-level slopes.
    const double span = trace.time_s[i + window - 1] - trace.time_s[i];
    if (!(slope < 0.0) || -slope * span < 1e-9) {
      continue;  // non-decaying window
    }
    const int c = i + window / 2;
    out.push_back({trace.time_s[c], trace.power_w[c], -omega / slope});
  }
  if (out.empty()) {
    throw std::runtime_error(
        "ql_from_decay: no decaying windows found in trace '" + trace.label +
        "'");
  }
  return out;
}

double q0_from_ql(double q_l, double q1) {
  if (!(q_l > 0.0) || !(q1 > 0.0)) {
    throw std::domain_error("q0_from_ql: quality factors must be > 0");
  }
  if (q_l >= q1) {
    throw std::domain_error(
        "q0_from_ql: Q_L >= Q1 implies nonphysical coupling");
  }
  return 1.0 / (1.0 / q_l - 1.0 / q1);
}

double onaxis_field(double p_t_w, double q1, double cal) {
  if (!(p_t_w >= 0.0)) {
    throw std::domain_error("onaxis_field: power must be >= 0");
  }
  return cal * std::sqrt(p_t_w * q1);
}

double photon_number(double energy_j, double f0_hz) {
  if (!(energy_j >= 0.0)) {
    throw std::domain_error("photon_number: energy must be >= 0");
  }
  return energy_j / (kHbar * 2.0 * kPi * f0_hz);
}

SensitivityCurve extract_sensitivity(const QDataset& ref, const QDataset& flux,
                                     const MaterialParams& mp,
                                     const MatchOptions& opts) {
  ref.validate();
  flux.validate();
  if (!(flux.b_trap_tesla > 0.0) ||
      flux.b_trap_tesla <= flux.b_trap_err_tesla) {
    throw std::runtime_error(
        "extract_sensitivity: flux b_trap is consistent with zero; "
        "normalization is ill-conditioned");
  }
  if (ref.rows.empty() || flux.rows.empty()) {
    throw std::runtime_error("extract_sensitivity: empty dataset");
  }

  QDataset ref_sorted = ref;
  ref_sorted.sort_rows();
  // Reference frequency at near-zero temperature.
  const double f0_1_0 = ref_sorted.rows.front().f0_hz;

  const double b = flux.b_trap_tesla;
  const double sb = flux.b_trap_err_tesla;
  const double g = mp.g;

  SensitivityCurve curve;
  curve.cooldown_id = flux.cooldown_id;
  curve.b_trap_tesla = b;

  for (const QRow& fr : flux.rows) {
    // Same field bin, nearest temperature within tolerance.
    const QRow* best = nullptr;
    const QRow* lo = nullptr;
    const QRow* hi = nullptr;
    for (const QRow& rr : ref_sorted.rows) {
      const double fscale =
          std::max(std::abs(fr.field_v_per_m), std::abs(rr.field_v_per_m));
      if (std::abs(rr.field_v_per_m - fr.field_v_per_m) >
          opts.field_rel_tol * std::max(fscale, 1e-300)) {
        continue;
      }
      const double dt = std::abs(rr.temperature_k - fr.temperature_k);
      if (dt > opts.temp_tol_k) {
        if (opts.interpolate_inv_q0) {
          if (rr.temperature_k < fr.temperature_k &&
              (!lo || rr.temperature_k > lo->temperature_k)) {
            lo = &rr;
          }
          if (rr.temperature_k > fr.temperature_k &&
              (!hi || rr.temperature_k < hi->temperature_k)) {
            hi = &rr;
          }
        }
        continue;
      }
      if (!best || dt < std::abs(best->temperature_k - fr.temperature_k)) {
        best = &rr;
      }
    }

    double inv_q0_1, sigma_inv_q0_1, f0_1, sigma_f0_1;
    if (best) {
      inv_q0_1 = 1.0 / best->q0;
      sigma_inv_q0_1 = best->q0_err / (best->q0 * best->q0);
      f0_1 = best->f0_hz;
      sigma_f0_1 = best->f0_err;
    } else if (opts.interpolate_inv_q0 && lo && hi) {
      const double w = (fr.temperature_k - lo->temperature_k) /
                       (hi->temperature_k - lo->temperature_k);
      inv_q0_1 = (1.0 - w) / lo->q0 + w / hi->q0;
      sigma_inv_q0_1 = std::hypot((1.0 - w) * lo->q0_err / (lo->q0 * lo->q0),
                                  w * hi->q0_err / (hi->q0 * hi->q0));
      f0_1 = (1.0 - w) * lo->f0_hz + w * hi->f0_hz;
      sigma_f0_1 = std::hypot((1.0 - w) * lo->f0_err, w * hi->f0_err);
    } else {
      continue;  // no reference coverage at this (T, E)
    }

    const double s = (g / b) * (1.0 / fr.q0 - inv_q0_1);
    const double s_prime = -(2.0 * g / b) * (fr.f0_hz - f0_1) / f0_1_0;

    const double sigma_inv_q0_n = fr.q0_err / (fr.q0 * fr.q0);
    const double s_err =
        std::sqrt(std::pow((g / b) * sigma_inv_q0_n, 2) +
                  std::pow((g / b) * sigma_inv_q0_1, 2) +
                  std::pow(s * sb / b, 2));
    const double sp_err =
        std::sqrt(std::pow((2.0 * g / (b * f0_1_0)) * fr.f0_err, 2) +
                  std::pow((2.0 * g / (b * f0_1_0)) * sigma_f0_1, 2) +
                  std::pow(s_prime * sb / b, 2));

    curve.points.push_back({fr.temperature_k, fr.field_v_per_m, s, s_err,
                            s_prime, sp_err});
  }

  if (curve.points.empty()) {
    throw std::runtime_error(
        "extract_sensitivity: no (T, E) pairs matched between reference and "
        "flux datasets");
  }
  return curve;
}

ValueErr flux_trapping_ratio(const ValueErr& b_nc, const ValueErr& b_sc) {
  if (std::abs(b_nc.value) <= b_nc.err || b_nc.value == 0.0) {
    throw std::runtime_error(
        "flux_trapping_ratio: B_NC is consistent with zero, ratio undefined");
  }
  const double ratio = b_sc.value / b_nc.value;
  const double err = std::hypot(b_sc.err / b_nc.value,
                                b_sc.value * b_nc.err / (b_nc.value * b_nc.value));
  return {ratio, std::abs(err)};
}

DecayTrace average_thermalized(const std::vector<DecayTrace>& traces,
                               const ThermalizationCriterion& crit) {
  if (traces.empty()) {
    throw std::invalid_argument("average_thermalized: no traces");
  }
  std::vector<double> temps;
  temps.reserve(traces.size());
  for (const auto& t : traces) {
    temps.push_back(t.temperature_k);
  }
  std::nth_element(temps.begin(), temps.begin() + temps.size() / 2,
                   temps.end());
  const double median = temps[temps.size() / 2];

  std::vector<const DecayTrace*> kept;
  for (const auto& t : traces) {
    if (std::abs(t.temperature_k - median) <=
        crit.max_temp_drift_rel * std::abs(median)) {
      kept.push_back(&t);
    }
  }
  if (kept.empty()) {
    throw std::runtime_error(
        "average_thermalized: no trace passes the thermalization criterion");
  }

  const DecayTrace& base = *kept.front();
  DecayTrace avg;
  avg.time_s = base.time_s;
  avg.power_w.assign(base.time_s.size(), 0.0);
  avg.f0_hz = base.f0_hz;

  double tsum = 0.0;
  for (const DecayTrace* t : kept) {
    tsum += t->temperature_k;
    if (t->time_s == base.time_s) {
      for (std::size_t i = 0; i < avg.power_w.size(); ++i) {
        avg.power_w[i] += t->power_w[i];
      }
    } else {
      // Resample onto the base grid by linear interpolation.
      for (std::size_t i = 0; i < base.time_s.size(); ++i) {
        const double x = base.time_s[i];
        auto it = std::lower_bound(t->time_s.begin(), t->time_s.end(), x);
        double p;
        if (it == t->time_s.begin()) {
          p = t->power_w.front();
        } else if (it == t->time_s.end()) {
          p = t->power_w.back();
        } else {
          const std::size_t k = it - t->time_s.begin();
          const double w =
              (x - t->time_s[k - 1]) / (t->time_s[k] - t->time_s[k - 1]);
          p = (1.0 - w) * t->power_w[k - 1] + w * t->power_w[k];
        }
        avg.power_w[i] += p;
      }
    }
  }
  for (double& p : avg.power_w) {
    p /= kept.size();
  }
  avg.temperature_k = tsum / kept.size();
  avg.label = "avg_of_" + std::to_string(kept.size());
  return avg;
}

QDataset reduce_traces(const std::vector<DecayTrace>& traces,
                       const ReduceOptions& opts,
                       std::vector<ReduceLogEntry>* log) {
  if (traces.empty()) {
    throw std::invalid_argument("reduce_traces: no traces");
  }
  QDataset ds;

  for (const DecayTrace& trace : traces) {
    ReduceLogEntry entry;
    entry.label = trace.label;
    const auto points = ql_from_decay(trace, opts.window);
    entry.windows_total = static_cast<int>(points.size());

    // Decade-spaced bins in on-axis field.
    std::map<int, std::vector<std::pair<double, double>>> bins;  // (E, Q0)
    for (const QlPoint& p : points) {
      if (p.q_l >= opts.q1) {
        ++entry.windows_overcoupled;
        continue;
      }
      const double e = onaxis_field(p.power_w, opts.q1, opts.cal);
      if (!(e > 0.0)) {
        continue;
      }
      const int bin = static_cast<int>(std::floor(std::log10(e)));
      bins[bin].emplace_back(e, q0_from_ql(p.q_l, opts.q1));
      ++entry.windows_kept;
    }

    const double omega = 2.0 * kPi * trace.f0_hz;
    for (const auto& [bin, pts] : bins) {
      double log_e_sum = 0.0, q_sum = 0.0;
      for (const auto& [e, q0] : pts) {
        log_e_sum += std::log(e);
        q_sum += q0;
      }
      const double n = static_cast<double>(pts.size());
      const double e_geo = std::exp(log_e_sum / n);
      const double q_mean = q_sum / n;
      double q_var = 0.0;
      for (const auto& [e, q0] : pts) {
        q_var += (q0 - q_mean) * (q0 - q_mean);
      }
      const double q_sem =
          pts.size() > 1 ? std::sqrt(q_var / (n * (n - 1.0))) : 0.0;

      // Representative transmitted power in this bin -> stored energy.
      const double p_rep = e_geo * e_geo / (opts.cal * opts.cal * opts.q1);
      const double u = p_rep * opts.q1 / omega;

      ds.rows.push_back({trace.temperature_k, e_geo,
                         photon_number(u, trace.f0_hz), q_mean, q_sem,
                         trace.f0_hz, 0.0});
    }
    if (log) {
      log->push_back(entry);
    }
  }

  ds.sort_rows();
  ds.validate();
  return ds;
}

}  // namespace pipeline
}  // namespace fluxloss
