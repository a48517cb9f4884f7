#include "fluxloss/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "fluxloss/units.hpp"

namespace fluxloss::io {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) {
    throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) {
    throw std::runtime_error("cannot open '" + path + "' for reading");
  }
  return f;
}

json load_json(const std::string& path) {
  auto f = open_in(path);
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("malformed JSON in '" + path + "': " + e.what());
  }
}

void reject_unknown_keys(const json& obj, const std::string& where,
                         std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) {
      if (key == a) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw std::runtime_error("unknown key '" + where + "." + key + "'");
    }
  }
}

std::vector<std::vector<double>> read_csv(const std::string& path,
                                          const std::string& expected_header) {
  auto f = open_in(path);
  std::string line;
  if (!std::getline(f, line)) {
    throw std::runtime_error("'" + path + "': empty file");
  }
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  if (line != expected_header) {
    throw std::runtime_error("'" + path + "': expected header '" +
                             expected_header + "', got '" + line + "'");
  }
  const std::size_t ncols =
      static_cast<std::size_t>(
          std::count(expected_header.begin(), expected_header.end(), ',')) +
      1;

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t pos = 0;
        row.push_back(std::stod(cell, &pos));
        if (pos != cell.size()) {
          throw std::invalid_argument("trailing characters");
        }
      } catch (const std::exception&) {
        throw std::runtime_error("'" + path + "' line " +
                                 std::to_string(lineno) +
                                 ": bad numeric value '" + cell + "'");
      }
    }
    if (row.size() != ncols) {
      throw std::runtime_error("'" + path + "' line " +
                               std::to_string(lineno) + ": expected " +
                               std::to_string(ncols) + " columns");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

MaterialParams material_from_json(const json& j, const std::string& where) {
  reject_unknown_keys(j, where,
                      {"rho_n_ohm_m", "bc2_0_tesla", "tc_k", "lambda_l_m",
                       "g_ohm", "f0_hz"});
  MaterialParams mp;
  mp.rho_n = j.value("rho_n_ohm_m", mp.rho_n);
  mp.bc2_0 = j.value("bc2_0_tesla", mp.bc2_0);
  mp.tc = j.value("tc_k", mp.tc);
  mp.lambda_l = j.value("lambda_l_m", mp.lambda_l);
  mp.g = j.value("g_ohm", mp.g);
  mp.f0 = j.value("f0_hz", mp.f0);
  mp.validate();
  return mp;
}

json material_to_json(const MaterialParams& mp) {
  return json{{"rho_n_ohm_m", mp.rho_n}, {"bc2_0_tesla", mp.bc2_0},
              {"tc_k", mp.tc},           {"lambda_l_m", mp.lambda_l},
              {"g_ohm", mp.g},           {"f0_hz", mp.f0}};
}

PinningParams pinning_from_json(const json& j, const std::string& where,
                                const PinningParams& defaults,
                                bool allow_auto_omega0 = false) {
  reject_unknown_keys(j, where, {"omega0_rad_s", "alpha_per_k", "f"});
  PinningParams pp = defaults;
  pp.omega0 = j.value("omega0_rad_s", pp.omega0);
  pp.alpha = j.value("alpha_per_k", pp.alpha);
  pp.f = j.value("f", pp.f);
  // omega0 == 0 in a fit initial guess means "use the cavity frequency".
  if (!(allow_auto_omega0 && pp.omega0 == 0.0)) {
    pp.validate();
  }
  return pp;
}

}  // namespace

std::string sidecar_path(const std::string& csv_path) {
  const auto dot = csv_path.rfind('.');
  const auto slash = csv_path.rfind('/');
  if (dot == std::string::npos ||
      (slash != std::string::npos && dot < slash)) {
    return csv_path + ".json";
  }
  return csv_path.substr(0, dot) + ".json";
}

void write_decay_trace(const std::string& csv_path, const DecayTrace& trace) {
  auto f = open_out(csv_path);
  f << "time_s,power_w\n";
  for (std::size_t i = 0; i < trace.time_s.size(); ++i) {
    f << fmt(trace.time_s[i]) << ',' << fmt(trace.power_w[i]) << '\n';
  }
  json meta{{"f0_hz", trace.f0_hz},
            {"temperature_k", trace.temperature_k},
            {"label", trace.label}};
  open_out(sidecar_path(csv_path)) << meta.dump(2) << '\n';
}

DecayTrace read_decay_trace(const std::string& csv_path) {
  DecayTrace trace;
  for (const auto& row : read_csv(csv_path, "time_s,power_w")) {
    trace.time_s.push_back(row[0]);
    trace.power_w.push_back(row[1]);
  }
  const json meta = load_json(sidecar_path(csv_path));
  reject_unknown_keys(meta, "decay", {"f0_hz", "temperature_k", "label"});
  trace.f0_hz = meta.at("f0_hz").get<double>();
  trace.temperature_k = meta.at("temperature_k").get<double>();
  trace.label = meta.value("label", "");
  trace.validate();
  return trace;
}

void write_qdataset(const std::string& csv_path, const QDataset& ds) {
  auto f = open_out(csv_path);
  f << "temperature_k,field_v_per_m,photon_n,q0,q0_err,f0_hz,f0_err\n";
  for (const QRow& r : ds.rows) {
    f << fmt(r.temperature_k) << ',' << fmt(r.field_v_per_m) << ','
      << fmt(r.photon_n) << ',' << fmt(r.q0) << ',' << fmt(r.q0_err) << ','
      << fmt(r.f0_hz) << ',' << fmt(r.f0_err) << '\n';
  }
  json meta{{"cooldown_id", ds.cooldown_id},
            {"b_trap_tesla", ds.b_trap_tesla},
            {"b_trap_err_tesla", ds.b_trap_err_tesla}};
  open_out(sidecar_path(csv_path)) << meta.dump(2) << '\n';
}

QDataset read_qdataset(const std::string& csv_path) {
  QDataset ds;
  for (const auto& row : read_csv(
           csv_path,
           "temperature_k,field_v_per_m,photon_n,q0,q0_err,f0_hz,f0_err")) {
    ds.rows.push_back({row[0], row[1], row[2], row[3], row[4], row[5], row[6]});
  }
  const json meta = load_json(sidecar_path(csv_path));
  reject_unknown_keys(meta, "qdataset",
                      {"cooldown_id", "b_trap_tesla", "b_trap_err_tesla",
                       "truth", "rng"});
  ds.cooldown_id = meta.value("cooldown_id", "");
  ds.b_trap_tesla = meta.value("b_trap_tesla", 0.0);
  ds.b_trap_err_tesla = meta.value("b_trap_err_tesla", 0.0);
  ds.sort_rows();
  ds.validate();
  return ds;
}

void write_sensitivity_curve(const std::string& csv_path,
                             const SensitivityCurve& curve) {
  auto f = open_out(csv_path);
  f << "temperature_k,field_v_per_m,s_ohm_per_t,s_err,sprime_ohm_per_t,"
       "sprime_err\n";
  for (const SensPoint& p : curve.points) {
    f << fmt(p.temperature_k) << ',' << fmt(p.field_v_per_m) << ','
      << fmt(p.s) << ',' << fmt(p.s_err) << ',' << fmt(p.s_prime) << ','
      << fmt(p.s_prime_err) << '\n';
  }
  json meta{{"cooldown_id", curve.cooldown_id},
            {"b_trap_tesla", curve.b_trap_tesla}};
  open_out(sidecar_path(csv_path)) << meta.dump(2) << '\n';
}

SensitivityCurve read_sensitivity_curve(const std::string& csv_path) {
  SensitivityCurve curve;
  for (const auto& row :
       read_csv(csv_path,
                "temperature_k,field_v_per_m,s_ohm_per_t,s_err,"
                "sprime_ohm_per_t,sprime_err")) {
    curve.points.push_back({row[0], row[1], row[2], row[3], row[4], row[5]});
  }
  const json meta = load_json(sidecar_path(csv_path));
  reject_unknown_keys(meta, "sensitivity",
                      {"cooldown_id", "b_trap_tesla", "truth", "rng"});
  curve.cooldown_id = meta.value("cooldown_id", "");
  curve.b_trap_tesla = meta.value("b_trap_tesla", 0.0);
  curve.validate();
  return curve;
}

void write_fit_report(const std::string& json_path,
                      const fit::FitResult& res) {
  json report{
      {"params",
       {{"omega0_rad_s", res.params.omega0},
        {"alpha_per_k", res.params.alpha},
        {"f", res.params.f}}},
      {"uncertainties",
       {{"omega0_rad_s", res.omega0_err},
        {"alpha_per_k", res.alpha_err},
        {"f", res.f_err}}},
      {"covariance", res.covariance},
      {"chi2_reduced", res.chi2_reduced},
      {"n_points", res.n_points},
      {"n_iterations", res.n_iterations},
      {"converged", res.converged},
      // F index -> cooldown id, in the order the curves were supplied
      // (ordered by trapped-field level by convention).
      {"dataset_order", res.dataset_order},
      {"structure",
       "omega0 and alpha are shared across datasets; the resistive channel "
       "carries no F, so S data alone constrain (omega0, alpha); one F per "
       "dataset scales the reactive channel"},
  };
  open_out(json_path) << report.dump(2) << '\n';
}

synth::SynthSpec read_synth_spec(const std::string& json_path) {
  const json j = load_json(json_path);
  reject_unknown_keys(j, "synth_spec",
                      {"seed", "material", "t_grid", "t_grid_k", "noise",
                       "datasets"});
  synth::SynthSpec spec;
  spec.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("material")) {
    spec.material = material_from_json(j.at("material"), "synth_spec.material");
  }
  if (j.contains("t_grid_k")) {
    spec.t_grid_k = j.at("t_grid_k").get<std::vector<double>>();
  } else if (j.contains("t_grid")) {
    const json& g = j.at("t_grid");
    reject_unknown_keys(g, "synth_spec.t_grid", {"min_k", "max_k", "n"});
    const double lo = g.at("min_k").get<double>();
    const double hi = g.at("max_k").get<double>();
    const int n = g.at("n").get<int>();
    if (n < 1 || !(hi >= lo)) {
      throw std::runtime_error("synth_spec.t_grid: need n >= 1 and "
                               "max_k >= min_k");
    }
    for (int i = 0; i < n; ++i) {
      spec.t_grid_k.push_back(
          n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (n - 1));
    }
  }
  if (j.contains("noise")) {
    const json& nz = j.at("noise");
    reject_unknown_keys(nz, "synth_spec.noise",
                        {"s_rel", "sprime_rel", "q0_rel", "f0_rel"});
    spec.noise.s_rel = nz.value("s_rel", 0.0);
    spec.noise.s_prime_rel = nz.value("sprime_rel", 0.0);
    spec.noise.q0_rel = nz.value("q0_rel", 0.0);
    spec.noise.f0_rel = nz.value("f0_rel", 0.0);
  }
  if (!j.contains("datasets")) {
    throw std::runtime_error("synth_spec: missing 'datasets'");
  }
  for (std::size_t i = 0; i < j.at("datasets").size(); ++i) {
    const json& d = j.at("datasets")[i];
    const std::string where = "synth_spec.datasets[" + std::to_string(i) + "]";
    reject_unknown_keys(d, where,
                        {"cooldown_id", "b_trap_tesla", "b_trap_mg",
                         "pinning", "field_v_per_m"});
    synth::SynthDataset sd;
    sd.cooldown_id = d.value("cooldown_id", "dataset_" + std::to_string(i));
    if (d.contains("b_trap_mg")) {
      sd.b_trap_tesla = mg_to_tesla(d.at("b_trap_mg").get<double>());
    } else {
      sd.b_trap_tesla = d.value("b_trap_tesla", 0.0);
    }
    if (d.contains("pinning")) {
      sd.pinning = pinning_from_json(d.at("pinning"), where + ".pinning",
                                     PinningParams{});
    }
    sd.field_v_per_m = d.value("field_v_per_m", 50.0);
    spec.datasets.push_back(std::move(sd));
  }
  spec.validate();
  return spec;
}

void write_synth_truth(const std::string& json_path,
                       const synth::SynthSpec& spec) {
  json datasets = json::array();
  for (const auto& d : spec.datasets) {
    datasets.push_back({{"cooldown_id", d.cooldown_id},
                        {"b_trap_tesla", d.b_trap_tesla},
                        {"pinning",
                         {{"omega0_rad_s", d.pinning.omega0},
                          {"alpha_per_k", d.pinning.alpha},
                          {"f", d.pinning.f}}},
                        {"field_v_per_m", d.field_v_per_m}});
  }
  json truth{{"truth",
              {{"material", material_to_json(spec.material)},
               {"datasets", datasets},
               {"t_grid_k", spec.t_grid_k},
               {"noise",
                {{"s_rel", spec.noise.s_rel},
                 {"sprime_rel", spec.noise.s_prime_rel},
                 {"q0_rel", spec.noise.q0_rel},
                 {"f0_rel", spec.noise.f0_rel}}},
               {"seed", spec.seed}}},
             {"rng", synth::kRngName}};
  open_out(json_path) << truth.dump(2) << '\n';
}

RunConfig read_run_config(const std::string& json_path) {
  const json j = load_json(json_path);
  reject_unknown_keys(j, "config",
                      {"material", "pinning", "pipeline", "fit",
                       "output_dir"});
  RunConfig cfg;
  if (j.contains("material")) {
    cfg.material = material_from_json(j.at("material"), "config.material");
  }
  if (j.contains("pinning")) {
    cfg.pinning =
        pinning_from_json(j.at("pinning"), "config.pinning", cfg.pinning);
  }
  if (j.contains("pipeline")) {
    const json& p = j.at("pipeline");
    reject_unknown_keys(p, "config.pipeline",
                        {"window", "temp_tol_k", "cal", "q1"});
    cfg.pipeline.window = p.value("window", cfg.pipeline.window);
    cfg.pipeline.temp_tol_k = p.value("temp_tol_k", cfg.pipeline.temp_tol_k);
    cfg.pipeline.cal = p.value("cal", cfg.pipeline.cal);
    cfg.pipeline.q1 = p.value("q1", cfg.pipeline.q1);
  }
  if (j.contains("fit")) {
    const json& f = j.at("fit");
    reject_unknown_keys(f, "config.fit",
                        {"initial", "weight_mode", "step_tol", "grad_tol",
                         "max_iterations", "fd_rel_step", "fixed_f"});
    if (f.contains("initial")) {
      cfg.fit.initial = pinning_from_json(f.at("initial"),
                                          "config.fit.initial",
                                          cfg.fit.initial,
                                          /*allow_auto_omega0=*/true);
    }
    if (f.contains("weight_mode")) {
      const std::string mode = f.at("weight_mode").get<std::string>();
      if (mode == "inverse_variance") {
        cfg.fit.weight_mode = fit::WeightMode::kInverseVariance;
      } else if (mode == "unit") {
        cfg.fit.weight_mode = fit::WeightMode::kUnit;
      } else {
        throw std::runtime_error(
            "config.fit.weight_mode: expected 'inverse_variance' or 'unit'");
      }
    }
    cfg.fit.step_tol = f.value("step_tol", cfg.fit.step_tol);
    cfg.fit.grad_tol = f.value("grad_tol", cfg.fit.grad_tol);
    cfg.fit.max_iterations = f.value("max_iterations", cfg.fit.max_iterations);
    cfg.fit.fd_rel_step = f.value("fd_rel_step", cfg.fit.fd_rel_step);
    if (f.contains("fixed_f")) {
      cfg.fit.fixed_f = f.at("fixed_f").get<double>();
    }
    cfg.fit.validate();
  }
  cfg.output_dir = j.value("output_dir", "");
  return cfg;
}

}  // namespace fluxloss::io
