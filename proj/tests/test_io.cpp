#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "fluxloss/io.hpp"
#include "fluxloss/synth.hpp"

using namespace fluxloss;
namespace fs = std::filesystem;

namespace {

fs::path tmpdir() {
  const auto dir = fs::temp_directory_path() / "fluxloss_io_test";
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream f(p);
  f << content;
}

}  // namespace

TEST_CASE("decay trace round trip is lossless") {
  const auto trace = synth::generate_decay(1e9, 6e9, 1e-15, 0.01, 1e4, 0.02, 9);
  const auto path = (tmpdir() / "trace.csv").string();
  io::write_decay_trace(path, trace);
  const auto back = io::read_decay_trace(path);
  CHECK(back.time_s == trace.time_s);
  CHECK(back.power_w == trace.power_w);
  CHECK(back.f0_hz == trace.f0_hz);
  CHECK(back.label == trace.label);
}

TEST_CASE("qdataset round trip is lossless") {
  QDataset ds;
  ds.cooldown_id = "CD3";
  ds.b_trap_tesla = 1.00009e-5;
  ds.b_trap_err_tesla = 9e-7;
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 40; ++i) {
    ds.rows.push_back({u(rng) + 0.01, 50.0 * u(rng), 1e3 * u(rng),
                       5e9 * (0.5 + u(rng)), 1e7 * u(rng),
                       6e9 + u(rng), u(rng)});
  }
  ds.sort_rows();
  const auto path = (tmpdir() / "qds.csv").string();
  io::write_qdataset(path, ds);
  const auto back = io::read_qdataset(path);
  REQUIRE(back.rows.size() == ds.rows.size());
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    CHECK(back.rows[i].temperature_k == ds.rows[i].temperature_k);
    CHECK(back.rows[i].q0 == ds.rows[i].q0);
    CHECK(back.rows[i].f0_hz == ds.rows[i].f0_hz);
    CHECK(back.rows[i].f0_err == ds.rows[i].f0_err);
  }
  CHECK(back.cooldown_id == "CD3");
  CHECK(back.b_trap_tesla == ds.b_trap_tesla);
}

TEST_CASE("sensitivity curve round trip is lossless") {
  synth::SynthSpec spec;
  spec.t_grid_k = {0.01, 0.4, 0.8, 1.2};
  spec.datasets.push_back(
      {"CD2", 5e-6, PinningParams{2.22e10, 0.701, 1910.0}, 50.0});
  spec.noise.s_rel = 0.05;
  spec.noise.s_prime_rel = 0.05;
  spec.seed = 3;
  const auto curve = synth::generate_sensitivity_curves(spec)[0];
  const auto path = (tmpdir() / "curve.csv").string();
  io::write_sensitivity_curve(path, curve);
  const auto back = io::read_sensitivity_curve(path);
  REQUIRE(back.points.size() == curve.points.size());
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    CHECK(back.points[i].s == curve.points[i].s);
    CHECK(back.points[i].s_err == curve.points[i].s_err);
    CHECK(back.points[i].s_prime == curve.points[i].s_prime);
  }
  CHECK(back.b_trap_tesla == 5e-6);
}

TEST_CASE("malformed files are rejected by name") {
  const auto dir = tmpdir();
  SUBCASE("wrong header") {
    write_file(dir / "bad.csv", "a,b\n1,2\n");
    write_file(dir / "bad.json", "{\"f0_hz\":6e9,\"temperature_k\":0.1}");
    CHECK_THROWS_WITH_AS(io::read_decay_trace((dir / "bad.csv").string()),
                         doctest::Contains("expected header"),
                         std::runtime_error);
  }
  SUBCASE("bad numeric cell") {
    write_file(dir / "bad2.csv", "time_s,power_w\n0.0,oops\n");
    CHECK_THROWS_WITH_AS(io::read_decay_trace((dir / "bad2.csv").string()),
                         doctest::Contains("bad numeric value"),
                         std::runtime_error);
  }
  SUBCASE("missing sidecar") {
    write_file(dir / "lonely.csv", "time_s,power_w\n0.0,1.0\n");
    CHECK_THROWS_AS(io::read_decay_trace((dir / "lonely.csv").string()),
                    std::runtime_error);
  }
}

TEST_CASE("synth spec parsing") {
  const auto dir = tmpdir();
  SUBCASE("valid spec with grid shorthand") {
    write_file(dir / "spec.json", R"({
      "seed": 42,
      "t_grid": {"min_k": 0.01, "max_k": 1.3, "n": 25},
      "noise": {"s_rel": 0.05, "sprime_rel": 0.05},
      "datasets": [
        {"cooldown_id": "CD2", "b_trap_mg": 50,
         "pinning": {"omega0_rad_s": 2.22e10, "alpha_per_k": 0.701, "f": 1910}}
      ]
    })");
    const auto spec = io::read_synth_spec((dir / "spec.json").string());
    CHECK(spec.seed == 42);
    CHECK(spec.t_grid_k.size() == 25);
    CHECK(spec.t_grid_k.front() == doctest::Approx(0.01));
    CHECK(spec.t_grid_k.back() == doctest::Approx(1.3));
    CHECK(spec.datasets[0].b_trap_tesla == doctest::Approx(5e-6));
    CHECK(spec.datasets[0].pinning.f == 1910.0);
  }
  SUBCASE("unknown key is rejected with its path") {
    write_file(dir / "bad_spec.json", R"({
      "seed": 1,
      "t_grid_k": [0.1],
      "datasets": [{"cooldown_id": "x", "b_trap_mg": 50, "bogus": 1}]
    })");
    CHECK_THROWS_WITH_AS(
        io::read_synth_spec((dir / "bad_spec.json").string()),
        doctest::Contains("synth_spec.datasets[0].bogus"),
        std::runtime_error);
  }
}

TEST_CASE("run config parsing") {
  const auto dir = tmpdir();
  SUBCASE("defaults apply with an empty object") {
    write_file(dir / "cfg.json", "{}");
    const auto cfg = io::read_run_config((dir / "cfg.json").string());
    CHECK(cfg.material.g == 275.0);
    CHECK(cfg.material.f0 == 6e9);
    CHECK(cfg.pipeline.q1 == 1.4e9);
    CHECK(cfg.pinning.omega0 == 2.22e10);
  }
  SUBCASE("nested overrides") {
    write_file(dir / "cfg2.json", R"({
      "material": {"f0_hz": 1.3e9},
      "fit": {"weight_mode": "unit", "max_iterations": 100},
      "output_dir": "/tmp/out"
    })");
    const auto cfg = io::read_run_config((dir / "cfg2.json").string());
    CHECK(cfg.material.f0 == 1.3e9);
    CHECK(cfg.fit.weight_mode == fit::WeightMode::kUnit);
    CHECK(cfg.fit.max_iterations == 100);
    CHECK(cfg.output_dir == "/tmp/out");
  }
  SUBCASE("unknown key carries its location") {
    write_file(dir / "cfg3.json", R"({"pipeline": {"windw": 21}})");
    CHECK_THROWS_WITH_AS(io::read_run_config((dir / "cfg3.json").string()),
                         doctest::Contains("config.pipeline.windw"),
                         std::runtime_error);
  }
}

TEST_CASE("fit report serialization") {
  fit::FitResult res;
  res.params = {2.22e10, 0.701, {1910.0, 743.0}};
  res.omega0_err = 1.1e9;
  res.alpha_err = 0.058;
  res.f_err = {350.0, 13.0};
  res.covariance = {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}};
  res.chi2_reduced = 1.05;
  res.dataset_order = {"CD2", "CD3"};
  res.n_points = 100;
  res.n_iterations = 17;
  res.converged = true;
  const auto path = (tmpdir() / "report.json").string();
  io::write_fit_report(path, res);

  std::ifstream f(path);
  std::string content((std::istreambuf_iterator<char>(f)),
                      std::istreambuf_iterator<char>());
  CHECK(content.find("\"omega0_rad_s\": 22200000000.0") != std::string::npos);
  CHECK(content.find("\"dataset_order\"") != std::string::npos);
  CHECK(content.find("\"converged\": true") != std::string::npos);
}
