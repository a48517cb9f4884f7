// fluxloss: trapped-vortex microwave loss analysis for superconducting
// niobium resonators. Subcommands cover model evaluation, ringdown
// reduction, sensitivity extraction, simultaneous fitting, T1 prediction
// and synthetic data generation.
//
// Exit codes: 0 success, 1 data error, 2 usage/config error.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fluxloss/io.hpp"
#include "fluxloss/model.hpp"
#include "fluxloss/pipeline.hpp"
#include "fluxloss/synth.hpp"
#include "fluxloss/units.hpp"

namespace fs = std::filesystem;
using namespace fluxloss;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

io::RunConfig load_config(const std::string& path) {
  if (path.empty()) {
    return io::RunConfig{};
  }
  try {
    return io::read_run_config(path);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

// Output directory: config value, overridden by FLUXLOSS_OUTPUT_DIR.
std::string resolve_out(const std::string& path, const io::RunConfig& cfg) {
  std::string dir = cfg.output_dir;
  if (const char* env = std::getenv("FLUXLOSS_OUTPUT_DIR")) {
    dir = env;
  }
  if (dir.empty() || fs::path(path).is_absolute()) {
    return path;
  }
  fs::create_directories(dir);
  return (fs::path(dir) / path).string();
}

std::string version_banner() {
  const MaterialParams mp;
  const io::RunConfig cfg;
  std::ostringstream os;
  os << "fluxloss 0.1.0\n"
     << "model constants in effect:\n"
     << "  rho_n    = " << mp.rho_n << " Ohm m\n"
     << "  Bc2(0)   = " << mp.bc2_0 << " T\n"
     << "  Tc       = " << mp.tc << " K\n"
     << "  lambda_L = " << mp.lambda_l << " m\n"
     << "  G        = " << mp.g << " Ohm\n"
     << "  f0       = " << mp.f0 << " Hz\n"
     << "  Q1       = " << cfg.pipeline.q1 << "\n"
     << "  pinning defaults: omega0 = " << cfg.pinning.omega0
     << " rad/s, alpha = " << cfg.pinning.alpha
     << " 1/K, F = " << cfg.pinning.f;
  return os.str();
}

int cmd_model(const std::string& config_path, double t_min, double t_max,
              int n, const std::string& out) {
  const io::RunConfig cfg = load_config(config_path);
  if (n < 1) {
    throw UsageError("--n must be >= 1");
  }
  const double omega = cfg.material.omega();
  std::ofstream f(resolve_out(out, cfg));
  if (!f) {
    throw std::runtime_error("cannot open '" + out + "'");
  }
  f << "temperature_k,s_ohm_per_t,sprime_ohm_per_t,s_nohm_per_mg,"
       "sprime_nohm_per_mg\n";
  for (int i = 0; i < n; ++i) {
    const double t =
        n == 1 ? t_min : t_min + (t_max - t_min) * static_cast<double>(i) /
                                     (n - 1);
    const auto m = model::sensitivity(t, omega, cfg.material, cfg.pinning);
    f << fmt(t) << ',' << fmt(m.s) << ',' << fmt(m.s_prime) << ','
      << fmt(to_nohm_per_mg(m.s)) << ',' << fmt(to_nohm_per_mg(m.s_prime))
      << '\n';
  }
  return kExitOk;
}

int cmd_extract(const std::string& config_path, const std::string& decay_dir,
                double q1, int window, double cal, double b_trap_mg,
                double b_trap_err_mg, const std::string& cooldown_id,
                const std::string& out) {
  const io::RunConfig cfg = load_config(config_path);
  std::vector<std::string> files;
  if (!fs::is_directory(decay_dir)) {
    throw std::runtime_error("'" + decay_dir + "' is not a directory");
  }
  for (const auto& entry : fs::directory_iterator(decay_dir)) {
    if (entry.path().extension() == ".csv") {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw std::runtime_error("no decay .csv files in '" + decay_dir + "'");
  }

  std::vector<DecayTrace> traces;
  for (const auto& path : files) {
    try {
      traces.push_back(io::read_decay_trace(path));
    } catch (const std::exception& e) {
      throw std::runtime_error("failed to read '" + path + "': " + e.what());
    }
  }

  pipeline::ReduceOptions opts;
  opts.window = window > 0 ? window : cfg.pipeline.window;
  opts.q1 = q1 > 0 ? q1 : cfg.pipeline.q1;
  opts.cal = cal > 0 ? cal : cfg.pipeline.cal;

  std::vector<pipeline::ReduceLogEntry> log;
  QDataset ds = pipeline::reduce_traces(traces, opts, &log);
  ds.cooldown_id = cooldown_id;
  ds.b_trap_tesla = mg_to_tesla(b_trap_mg);
  ds.b_trap_err_tesla = mg_to_tesla(b_trap_err_mg);

  for (const auto& e : log) {
    std::cerr << "trace '" << e.label << "': kept " << e.windows_kept << "/"
              << e.windows_total << " windows";
    if (e.windows_overcoupled > 0) {
      std::cerr << " (warning: " << e.windows_overcoupled
                << " excluded with Q_L >= Q1)";
    }
    std::cerr << '\n';
  }
  io::write_qdataset(resolve_out(out, cfg), ds);
  return kExitOk;
}

int cmd_sensitivity(const std::string& config_path, const std::string& ref_path,
                    const std::string& flux_path, const std::string& out) {
  const io::RunConfig cfg = load_config(config_path);
  const QDataset ref = io::read_qdataset(ref_path);
  const QDataset flux = io::read_qdataset(flux_path);
  pipeline::MatchOptions opts;
  opts.temp_tol_k = cfg.pipeline.temp_tol_k;
  const SensitivityCurve curve =
      pipeline::extract_sensitivity(ref, flux, cfg.material, opts);
  io::write_sensitivity_curve(resolve_out(out, cfg), curve);
  return kExitOk;
}

int cmd_fit(const std::string& config_path,
            const std::vector<std::string>& curve_paths,
            const std::string& out) {
  const io::RunConfig cfg = load_config(config_path);
  std::vector<SensitivityCurve> curves;
  for (const auto& p : curve_paths) {
    curves.push_back(io::read_sensitivity_curve(p));
  }
  const fit::FitResult res =
      fit::fit_simultaneous(curves, cfg.material, cfg.fit);
  const std::string report_path = resolve_out(out, cfg);
  io::write_fit_report(report_path, res);

  // Dense model curves alongside the report, for plotting.
  double t_lo = 1e300, t_hi = -1e300;
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      t_lo = std::min(t_lo, p.temperature_k);
      t_hi = std::max(t_hi, p.temperature_k);
    }
  }
  std::vector<double> grid;
  const int n_grid = 200;
  for (int i = 0; i < n_grid; ++i) {
    grid.push_back(t_lo + (t_hi - t_lo) * i / (n_grid - 1.0));
  }
  fit::SharedParams params = res.params;
  if (params.f.empty()) {  // fixed-F fit
    params.f.assign(curves.size(), cfg.fit.fixed_f.value_or(0.0));
  }
  const auto model_curves =
      fit::predict_curves(params, cfg.material, grid, cfg.material.omega(),
                          res.dataset_order);
  const std::string stem =
      (fs::path(report_path).parent_path() /
       fs::path(report_path).stem()).string();
  std::ofstream f(stem + "_curves.csv");
  f << "cooldown_id,temperature_k,s_ohm_per_t,sprime_ohm_per_t\n";
  for (const auto& mc : model_curves) {
    for (std::size_t i = 0; i < mc.temperature_k.size(); ++i) {
      f << mc.cooldown_id << ',' << fmt(mc.temperature_k[i]) << ','
        << fmt(mc.s[i]) << ',' << fmt(mc.s_prime[i]) << '\n';
    }
  }
  std::cerr << "fit " << (res.converged ? "converged" : "DID NOT CONVERGE")
            << " after " << res.n_iterations
            << " iterations, chi2_red = " << res.chi2_reduced << '\n';
  return kExitOk;
}

int cmd_predict_t1(const std::string& config_path, const std::string& q_ox0_arg,
                   const std::vector<double>& b_trap_mg, double s_nohm_mg,
                   bool s_from_model, double t_k, const std::string& out) {
  const io::RunConfig cfg = load_config(config_path);
  std::optional<double> q_ox0;
  if (q_ox0_arg != "absent") {
    try {
      std::size_t pos = 0;
      q_ox0 = std::stod(q_ox0_arg, &pos);
      if (pos != q_ox0_arg.size()) {
        throw std::invalid_argument("trailing characters");
      }
    } catch (const std::exception&) {
      throw UsageError("--q-ox0 expects a number or 'absent'");
    }
  }
  for (double b : b_trap_mg) {
    if (b < 0.0) {
      throw std::runtime_error("negative trapped field in --b-trap-mg");
    }
  }
  double s = to_ohm_per_tesla(s_nohm_mg);
  if (s_from_model) {
    s = model::sensitivity(t_k, cfg.material.omega(), cfg.material,
                           cfg.pinning)
            .s;
  }
  std::ofstream f(resolve_out(out, cfg));
  if (!f) {
    throw std::runtime_error("cannot open '" + out + "'");
  }
  f << "b_trap_mg,b_trap_tesla,t1_oxide_s,t1_no_oxide_s\n";
  for (double b_mg : b_trap_mg) {
    const double b = mg_to_tesla(b_mg);
    const double t1_ox = model::t1_bound(q_ox0, s, b, cfg.material);
    const double t1_free = model::t1_bound(std::nullopt, s, b, cfg.material);
    f << fmt(b_mg) << ',' << fmt(b) << ',' << fmt(t1_ox) << ','
      << fmt(t1_free) << '\n';
  }
  return kExitOk;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir,
              double q_ref, double decay_ql, double decay_noise_rel) {
  synth::SynthSpec spec;
  try {
    spec = io::read_synth_spec(spec_path);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);

  io::write_synth_truth((dir / "truth.json").string(), spec);

  const auto curves = synth::generate_sensitivity_curves(spec);
  for (const auto& c : curves) {
    io::write_sensitivity_curve(
        (dir / ("curve_" + c.cooldown_id + ".csv")).string(), c);
  }
  for (std::size_t i = 0; i < spec.datasets.size(); ++i) {
    auto [ref, flux] = synth::generate_qdatasets(
        spec, i, [q_ref](double) { return q_ref; });
    const std::string id = spec.datasets[i].cooldown_id;
    io::write_qdataset((dir / ("qdataset_" + id + "_ref.csv")).string(), ref);
    io::write_qdataset((dir / ("qdataset_" + id + ".csv")).string(), flux);
  }
  if (decay_ql > 0.0) {
    const auto trace =
        synth::generate_decay(decay_ql, spec.material.f0, 1e-15, 0.1, 1e4,
                              decay_noise_rel, spec.seed);
    io::write_decay_trace((dir / "decay.csv").string(), trace);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trapped-vortex microwave loss analysis for superconducting "
               "niobium resonators"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_banner);

  std::string config_path, out, decay_dir, ref_path, flux_path, spec_path;
  std::string q_ox0_arg = "9.42e8";
  std::vector<std::string> curve_paths;
  std::vector<double> b_trap_list;
  double t_min = 0.01, t_max = 1.3;
  int n = 100;
  double q1 = 0, cal = 0, b_trap_mg = 0, b_trap_err_mg = 0;
  int window = 0;
  std::string cooldown_id = "CD";
  double s_nohm_mg = 2.0, t_k = 0.01;
  bool s_from_model = false;
  double q_ref = 5e9, decay_ql = 0, decay_noise_rel = 0;

  auto* model_cmd =
      app.add_subcommand("model", "Evaluate S(T), S'(T) on a grid");
  model_cmd->add_option("--params,--config", config_path, "Config JSON");
  model_cmd->add_option("--t-min", t_min, "Grid start [K]");
  model_cmd->add_option("--t-max", t_max, "Grid end [K]");
  model_cmd->add_option("--n", n, "Grid size");
  model_cmd->add_option("--out", out, "Output CSV")->required();

  auto* extract_cmd =
      app.add_subcommand("extract", "Reduce decay traces to a QDataset");
  extract_cmd->add_option("--config", config_path, "Config JSON");
  extract_cmd->add_option("--decays", decay_dir, "Directory of decay CSVs")
      ->required();
  extract_cmd->add_option("--q1", q1, "Antenna quality factor");
  extract_cmd->add_option("--window", window, "Regression window [samples]");
  extract_cmd->add_option("--cal", cal, "E-field calibration");
  extract_cmd->add_option("--b-trap-mg", b_trap_mg, "Trapped field [mG]");
  extract_cmd->add_option("--b-trap-err-mg", b_trap_err_mg,
                          "Trapped field uncertainty [mG]");
  extract_cmd->add_option("--cooldown-id", cooldown_id, "Cooldown label");
  extract_cmd->add_option("--out", out, "Output QDataset CSV")->required();

  auto* sens_cmd = app.add_subcommand(
      "sensitivity", "Subtract cooldowns into a sensitivity curve");
  sens_cmd->add_option("--config", config_path, "Config JSON");
  sens_cmd->add_option("--ref", ref_path, "Reference QDataset CSV")
      ->required();
  sens_cmd->add_option("--flux", flux_path, "Flux-cooldown QDataset CSV")
      ->required();
  sens_cmd->add_option("--out", out, "Output curve CSV")->required();

  auto* fit_cmd =
      app.add_subcommand("fit", "Simultaneous shared-parameter fit");
  fit_cmd->add_option("--config", config_path, "Config JSON");
  fit_cmd->add_option("--curves", curve_paths, "Sensitivity curve CSVs")
      ->required()
      ->expected(-1);
  fit_cmd->add_option("--out", out, "Fit report JSON")->required();

  auto* t1_cmd = app.add_subcommand("predict-t1", "Photon lifetime bounds");
  t1_cmd->add_option("--config,--params", config_path, "Config JSON");
  t1_cmd->add_option("--q-ox0", q_ox0_arg,
                     "Oxide-limited Q0 (number or 'absent')");
  t1_cmd->add_option("--b-trap-mg", b_trap_list, "Trapped field list [mG]")
      ->required()
      ->expected(-1);
  t1_cmd->add_option("--s-nohm-mg", s_nohm_mg, "Sensitivity [nOhm/mG]");
  t1_cmd->add_flag("--s-from-model", s_from_model,
                   "Compute S from the model instead");
  t1_cmd->add_option("--t-k", t_k, "Temperature for --s-from-model [K]");
  t1_cmd->add_option("--out", out, "Output CSV")->required();

  auto* synth_cmd =
      app.add_subcommand("synth", "Generate synthetic datasets");
  synth_cmd->add_option("--spec", spec_path, "SynthSpec JSON")->required();
  synth_cmd->add_option("--out", out, "Output directory")->required();
  synth_cmd->add_option("--q-ref", q_ref, "Reference Q0 for QDataset pairs");
  synth_cmd->add_option("--decay-ql", decay_ql,
                        "Also generate a decay trace with this Q_L");
  synth_cmd->add_option("--decay-noise-rel", decay_noise_rel,
                        "Relative noise on the decay trace");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help / --version
    }
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (model_cmd->parsed()) {
      return cmd_model(config_path, t_min, t_max, n, out);
    }
    if (extract_cmd->parsed()) {
      return cmd_extract(config_path, decay_dir, q1, window, cal, b_trap_mg,
                         b_trap_err_mg, cooldown_id, out);
    }
    if (sens_cmd->parsed()) {
      return cmd_sensitivity(config_path, ref_path, flux_path, out);
    }
    if (fit_cmd->parsed()) {
      return cmd_fit(config_path, curve_paths, out);
    }
    if (t1_cmd->parsed()) {
      return cmd_predict_t1(config_path, q_ox0_arg, b_trap_list, s_nohm_mg,
                            s_from_model, t_k, out);
    }
    if (synth_cmd->parsed()) {
      return cmd_synth(spec_path, out, q_ref, decay_ql, decay_noise_rel);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
