#ifndef FLUXLOSS_IO_HPP
#define FLUXLOSS_IO_HPP

#include <string>
#include <vector>

#include "fluxloss/data.hpp"
#include "fluxloss/fitting.hpp"
#include "fluxloss/params.hpp"
#include "fluxloss/synth.hpp"

// File formats. Tables are CSV with unit-bearing headers; metadata lives
// in a sidecar JSON next to the CSV (same stem, .json extension). Values
// are written with enough digits to round-trip doubles losslessly.
//
//   decay trace:  time_s,power_w              + {f0_hz, temperature_k, label}
//   QDataset:     temperature_k,field_v_per_m,photon_n,q0,q0_err,f0_hz,f0_err
//                 + {cooldown_id, b_trap_tesla, b_trap_err_tesla}
//   sensitivity:  temperature_k,field_v_per_m,s_ohm_per_t,s_err,
//                 sprime_ohm_per_t,sprime_err
//                 + {cooldown_id, b_trap_tesla}

namespace fluxloss::io {

std::string sidecar_path(const std::string& csv_path);

void write_decay_trace(const std::string& csv_path, const DecayTrace& trace);
DecayTrace read_decay_trace(const std::string& csv_path);

void write_qdataset(const std::string& csv_path, const QDataset& ds);
QDataset read_qdataset(const std::string& csv_path);

void write_sensitivity_curve(const std::string& csv_path,
                             const SensitivityCurve& curve);
SensitivityCurve read_sensitivity_curve(const std::string& csv_path);

/// Fit report JSON: params, uncertainties, covariance, reduced chi^2,
/// dataset order (F index -> cooldown id, ordered by trapped field level
/// as given), counts and convergence flag.
void write_fit_report(const std::string& json_path, const fit::FitResult& res);

/// SynthSpec JSON; unknown keys are rejected with a location-bearing
/// message. `truth` echo is written next to generated files.
synth::SynthSpec read_synth_spec(const std::string& json_path);
void write_synth_truth(const std::string& json_path,
                       const synth::SynthSpec& spec);

struct PipelineOptions {
  int window = 21;
  double temp_tol_k = 0.010;
  double cal = 1.0;
  double q1 = 1.4e9;
};

/// Run configuration shared by the CLI commands. Every field has a
/// sensible default so commands run without a config file.
struct RunConfig {
  MaterialParams material;
  PinningParams pinning{2.22e10, 0.701, 743.0};
  PipelineOptions pipeline;
  fit::FitConfig fit;
  std::string output_dir;
};

/// Parse a RunConfig JSON; unknown keys are rejected with the offending
/// key path in the message.
RunConfig read_run_config(const std::string& json_path);

}  // namespace fluxloss::io

#endif
