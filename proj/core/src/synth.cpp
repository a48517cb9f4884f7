#include "fluxloss/synth.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "fluxloss/model.hpp"
#include "fluxloss/units.hpp"

namespace fluxloss::synth {

void NoiseSpec::validate() const {
  if (!(s_rel >= 0.0) || !(s_prime_rel >= 0.0) || !(q0_rel >= 0.0) ||
      !(f0_rel >= 0.0)) {
    throw std::invalid_argument("NoiseSpec: noise sigmas must be >= 0");
  }
}

void SynthSpec::validate() const {
  material.validate();
  noise.validate();
  if (datasets.empty()) {
    throw std::invalid_argument("SynthSpec: at least one dataset required");
  }
  if (t_grid_k.empty()) {
    throw std::invalid_argument("SynthSpec: empty temperature grid");
  }
  for (const auto& d : datasets) {
    d.pinning.validate();
    if (!(d.b_trap_tesla >= 0.0)) {
      throw std::invalid_argument("SynthSpec: b_trap must be >= 0");
    }
  }
}

DecayTrace generate_decay(double q_l, double f0_hz, double p0_w,
                          double duration_s, double rate_hz, double noise_rel,
                          std::uint64_t seed) {
  if (!(q_l > 0.0) || !(f0_hz > 0.0) || !(p0_w > 0.0) || !(rate_hz > 0.0) ||
      !(duration_s > 0.0)) {
    throw std::invalid_argument("generate_decay: q_l, f0, p0, duration, rate "
                                "must be > 0");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double omega = 2.0 * kPi * f0_hz;
  const double dt = 1.0 / rate_hz;
  const auto n = static_cast<std::size_t>(duration_s * rate_hz) + 1;

  DecayTrace trace;
  trace.f0_hz = f0_hz;
  trace.label = std::string("synthetic_decay rng=") + kRngName;
  trace.time_s.reserve(n);
  trace.power_w.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    double p = p0_w * std::exp(-omega * t / q_l);
    if (noise_rel > 0.0) {
      p *= 1.0 + noise_rel * gauss(rng);
    }
    trace.time_s.push_back(t);
    trace.power_w.push_back(std::max(p, 0.0));
  }
  return trace;
}

std::vector<SensitivityCurve> generate_sensitivity_curves(
    const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double omega = spec.material.omega();

  std::vector<SensitivityCurve> out;
  for (const auto& d : spec.datasets) {
    SensitivityCurve curve;
    curve.cooldown_id = d.cooldown_id;
    curve.b_trap_tesla = d.b_trap_tesla;
    for (double t : spec.t_grid_k) {
      const auto m = model::sensitivity(t, omega, spec.material, d.pinning);
      const double sigma_s = spec.noise.s_rel * std::abs(m.s);
      const double sigma_sp = spec.noise.s_prime_rel * std::abs(m.s_prime);
      double s = m.s;
      double sp = m.s_prime;
      if (sigma_s > 0.0) {
        s += sigma_s * gauss(rng);
      }
      if (sigma_sp > 0.0) {
        sp += sigma_sp * gauss(rng);
      }
      curve.points.push_back({t, d.field_v_per_m, s, sigma_s, sp, sigma_sp});
    }
    out.push_back(std::move(curve));
  }
  return out;
}

std::pair<QDataset, QDataset> generate_qdatasets(
    const SynthSpec& spec, std::size_t dataset_index,
    const std::function<double(double)>& q0_ref) {
  spec.validate();
  if (dataset_index >= spec.datasets.size()) {
    throw std::invalid_argument("generate_qdatasets: dataset index out of "
                                "range");
  }
  if (!q0_ref) {
    throw std::invalid_argument("generate_qdatasets: reference Q0(T) model "
                                "required");
  }
  const SynthDataset& d = spec.datasets[dataset_index];
  const MaterialParams& mp = spec.material;
  const double omega = mp.omega();
  const double f0_1_0 = mp.f0;

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  QDataset ref;
  ref.cooldown_id = d.cooldown_id + "_ref";
  QDataset flux;
  flux.cooldown_id = d.cooldown_id;
  flux.b_trap_tesla = d.b_trap_tesla;

  for (double t : spec.t_grid_k) {
    const double q0_1 = q0_ref(t);
    if (!(q0_1 > 0.0)) {
      throw std::invalid_argument("generate_qdatasets: reference Q0 must be "
                                  "> 0");
    }
    const auto m = model::sensitivity(t, omega, mp, d.pinning);

    double q0_n = 1.0 / (1.0 / q0_1 + m.s * d.b_trap_tesla / mp.g);
    double f0_n =
        mp.f0 - m.s_prime * d.b_trap_tesla * f0_1_0 / (2.0 * mp.g);

    const double q0_sigma_ref = spec.noise.q0_rel * q0_1;
    const double q0_sigma_flux = spec.noise.q0_rel * q0_n;
    const double f0_sigma = spec.noise.f0_rel * mp.f0;
    double q0_1_obs = q0_1;
    if (spec.noise.q0_rel > 0.0) {
      q0_1_obs += q0_sigma_ref * gauss(rng);
      q0_n += q0_sigma_flux * gauss(rng);
    }
    double f0_1_obs = mp.f0;
    if (spec.noise.f0_rel > 0.0) {
      f0_1_obs += f0_sigma * gauss(rng);
      f0_n += f0_sigma * gauss(rng);
    }

    ref.rows.push_back({t, d.field_v_per_m, 0.0, q0_1_obs, q0_sigma_ref,
                        f0_1_obs, f0_sigma});
    flux.rows.push_back({t, d.field_v_per_m, 0.0, q0_n, q0_sigma_flux, f0_n,
                         f0_sigma});
  }
  ref.sort_rows();
  flux.sort_rows();
  return {std::move(ref), std::move(flux)};
}

}  // namespace fluxloss::synth
