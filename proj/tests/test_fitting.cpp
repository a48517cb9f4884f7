#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fluxloss/fitting.hpp"
#include "fluxloss/model.hpp"
#include "fluxloss/synth.hpp"

using namespace fluxloss;

namespace {

const MaterialParams kMp;

std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) {
    g.push_back(lo + (hi - lo) * i / (n - 1.0));
  }
  return g;
}

synth::SynthSpec table_spec(double noise_rel, std::uint64_t seed) {
  synth::SynthSpec spec;
  spec.material = kMp;
  spec.t_grid_k = grid(0.01, 1.3, 25);
  spec.noise.s_rel = noise_rel;
  spec.noise.s_prime_rel = noise_rel;
  spec.seed = seed;
  const double fs[] = {1910.0, 743.0, 497.0};
  const double bs[] = {50e-7, 100e-7, 250e-7};
  for (int i = 0; i < 3; ++i) {
    spec.datasets.push_back({"CD" + std::to_string(i + 2), bs[i],
                             PinningParams{2.22e10, 0.701, fs[i]}, 50.0});
  }
  return spec;
}

fit::FitConfig unit_cfg() {
  fit::FitConfig cfg;
  cfg.weight_mode = fit::WeightMode::kUnit;
  return cfg;
}

}  // namespace

TEST_CASE("residual_vector structure") {
  const auto curves = synth::generate_sensitivity_curves(table_spec(0.0, 1));
  fit::SharedParams truth{2.22e10, 0.701, {1910.0, 743.0, 497.0}};

  SUBCASE("exact data gives the zero vector") {
    const auto r = fit::residual_vector(truth, curves, kMp, unit_cfg());
    CHECK(r.size() == 2 * 3 * 25);
    for (double v : r) {
      CHECK(std::abs(v) < 1e-12);
    }
  }
  SUBCASE("one dataset, one point, sigma = 1 has length 2") {
    SensitivityCurve c;
    c.points.push_back({0.1, 50.0, 1.0, 1.0, 1.0, 1.0});
    const auto r = fit::residual_vector({2.22e10, 0.701, {743.0}}, {c}, kMp,
                                        fit::FitConfig{});
    CHECK(r.size() == 2);
  }
  SUBCASE("perturbing F of dataset k touches only that dataset's S' block") {
    auto bumped = truth;
    bumped.f[1] *= 1.5;
    const auto r0 = fit::residual_vector(truth, curves, kMp, unit_cfg());
    const auto r1 = fit::residual_vector(bumped, curves, kMp, unit_cfg());
    for (std::size_t i = 0; i < r0.size(); ++i) {
      const bool in_ds1 = i >= 50 && i < 100;
      const bool is_sprime = i % 2 == 1;
      if (in_ds1 && is_sprime) {
        CHECK(std::abs(r1[i] - r0[i]) > 0.0);
      } else {
        CHECK(r1[i] == doctest::Approx(r0[i]));
      }
    }
  }
  SUBCASE("zero sigma with 1/sigma^2 weighting is rejected") {
    CHECK_THROWS_AS(
        fit::residual_vector(truth, curves, kMp, fit::FitConfig{}),
        std::invalid_argument);
  }
}

TEST_CASE("noiseless simultaneous fit recovers the truth") {
  const auto curves = synth::generate_sensitivity_curves(table_spec(0.0, 1));
  const auto res = fit::fit_simultaneous(curves, kMp, unit_cfg());
  CHECK(res.converged);
  CHECK(res.params.omega0 == doctest::Approx(2.22e10).epsilon(1e-4));
  CHECK(res.params.alpha == doctest::Approx(0.701).epsilon(1e-4));
  REQUIRE(res.params.f.size() == 3);
  CHECK(res.params.f[0] == doctest::Approx(1910.0).epsilon(1e-4));
  CHECK(res.params.f[1] == doctest::Approx(743.0).epsilon(1e-4));
  CHECK(res.params.f[2] == doctest::Approx(497.0).epsilon(1e-4));
  CHECK(res.dataset_order ==
        std::vector<std::string>{"CD2", "CD3", "CD4"});
  CHECK(res.n_points == 150);
}

TEST_CASE("covariance is symmetric with positive diagonal") {
  const auto curves = synth::generate_sensitivity_curves(table_spec(0.05, 2));
  const auto res = fit::fit_simultaneous(curves, kMp, {});
  const auto& c = res.covariance;
  REQUIRE(c.size() == 5);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(c[i][i] >= 0.0);
    for (std::size_t j = 0; j < c.size(); ++j) {
      CHECK(c[i][j] == doctest::Approx(c[j][i]).epsilon(1e-9));
    }
  }
  CHECK(res.omega0_err == doctest::Approx(std::sqrt(c[0][0])));
  CHECK(res.chi2_reduced > 0.0);
}

TEST_CASE("fixed F = 0 fits the resistive channel alone") {
  synth::SynthSpec spec = table_spec(0.0, 1);
  spec.datasets.resize(1);
  spec.datasets[0].pinning.f = 1.0;
  auto curves = synth::generate_sensitivity_curves(spec);
  for (auto& p : curves[0].points) {
    p.s_prime = 0.0;  // reactive channel drops out
  }
  auto cfg = unit_cfg();
  cfg.fixed_f = 0.0;
  const auto res = fit::fit_simultaneous(curves, kMp, cfg);
  CHECK(res.converged);
  CHECK(res.params.omega0 == doctest::Approx(2.22e10).epsilon(1e-3));
  CHECK(res.params.alpha == doctest::Approx(0.701).epsilon(1e-3));
  CHECK(res.params.f.empty());
}

TEST_CASE("degenerate temperature coverage triggers the rank guard") {
  // All points at one temperature far below 1/alpha: only the product
  // omega0*exp(alpha*T) is observable.
  synth::SynthSpec spec = table_spec(0.0, 1);
  spec.datasets.resize(1);
  spec.t_grid_k.assign(10, 0.001);
  const auto curves = synth::generate_sensitivity_curves(spec);
  CHECK_THROWS_AS(fit::fit_simultaneous(curves, kMp, unit_cfg()),
                  fit::RankDeficiencyError);
}

TEST_CASE("underdetermined input is rejected") {
  SensitivityCurve c;
  c.cooldown_id = "CD2";
  c.points.push_back({0.1, 50.0, 1e-2, 1.0, 1.0, 1.0});
  CHECK_THROWS_AS(fit::fit_simultaneous({c}, kMp, {}),
                  fit::RankDeficiencyError);
}

TEST_CASE("finite-difference Jacobian agrees with central differences") {
  const auto curves = synth::generate_sensitivity_curves(table_spec(0.0, 1));
  const auto cfg = unit_cfg();
  const auto res = fit::fit_simultaneous(curves, kMp, cfg);

  // Central-difference recomputation around the optimum, in the same
  // log(omega0), alpha, log(F) coordinates the fitter uses.
  auto eval = [&](const std::vector<double>& p) {
    fit::SharedParams sp{std::exp(p[0]), p[1],
                         {std::exp(p[2]), std::exp(p[3]), std::exp(p[4])}};
    return fit::residual_vector(sp, curves, kMp, cfg);
  };
  const std::vector<double> p0{std::log(res.params.omega0), res.params.alpha,
                               std::log(res.params.f[0]),
                               std::log(res.params.f[1]),
                               std::log(res.params.f[2])};
  for (std::size_t k = 0; k < p0.size(); ++k) {
    const double h_f = 1e-7 * std::max(std::abs(p0[k]), 1.0);
    const double h_c = 1e-5 * std::max(std::abs(p0[k]), 1.0);
    auto pf = p0, pb = p0, pc = p0;
    pf[k] += h_f;
    pb[k] -= h_c;
    pc[k] += h_c;
    const auto r0 = eval(p0);
    const auto rf = eval(pf);
    const auto rc = eval(pc);
    const auto rb = eval(pb);
    for (std::size_t i = 0; i < r0.size(); ++i) {
      const double fwd = (rf[i] - r0[i]) / h_f;
      const double ctr = (rc[i] - rb[i]) / (2.0 * h_c);
      if (std::abs(ctr) > 1e-8) {
        CHECK(fwd == doctest::Approx(ctr).epsilon(1e-4));
      }
    }
  }
}

TEST_CASE("sigma scaling leaves the argmin unchanged") {
  auto curves = synth::generate_sensitivity_curves(table_spec(0.05, 3));
  const auto base = fit::fit_simultaneous(curves, kMp, {});
  auto scaled = curves;
  const double c = 7.5;
  for (auto& curve : scaled) {
    for (auto& p : curve.points) {
      p.s_err *= c;
      p.s_prime_err *= c;
    }
  }
  const auto res = fit::fit_simultaneous(scaled, kMp, {});
  CHECK(res.params.omega0 ==
        doctest::Approx(base.params.omega0).epsilon(1e-6));
  CHECK(res.params.alpha == doctest::Approx(base.params.alpha).epsilon(1e-6));
  for (int i = 0; i < 3; ++i) {
    CHECK(res.params.f[i] == doctest::Approx(base.params.f[i]).epsilon(1e-6));
  }
  CHECK(res.chi2_reduced ==
        doctest::Approx(base.chi2_reduced / (c * c)).epsilon(1e-6));
}

TEST_CASE("dataset permutation permutes F and fixes the shared pair") {
  auto curves = synth::generate_sensitivity_curves(table_spec(0.05, 4));
  const auto base = fit::fit_simultaneous(curves, kMp, {});
  std::vector<SensitivityCurve> permuted{curves[2], curves[0], curves[1]};
  const auto res = fit::fit_simultaneous(permuted, kMp, {});
  CHECK(res.params.omega0 ==
        doctest::Approx(base.params.omega0).epsilon(1e-6));
  CHECK(res.params.alpha == doctest::Approx(base.params.alpha).epsilon(1e-6));
  CHECK(res.params.f[0] == doctest::Approx(base.params.f[2]).epsilon(1e-6));
  CHECK(res.params.f[1] == doctest::Approx(base.params.f[0]).epsilon(1e-6));
  CHECK(res.params.f[2] == doctest::Approx(base.params.f[1]).epsilon(1e-6));
  CHECK(res.dataset_order ==
        std::vector<std::string>{"CD4", "CD2", "CD3"});
}

TEST_CASE("fit is deterministic") {
  const auto curves = synth::generate_sensitivity_curves(table_spec(0.05, 5));
  const auto a = fit::fit_simultaneous(curves, kMp, {});
  const auto b = fit::fit_simultaneous(curves, kMp, {});
  CHECK(a.params.omega0 == b.params.omega0);
  CHECK(a.params.alpha == b.params.alpha);
  CHECK(a.params.f == b.params.f);
  CHECK(a.chi2_reduced == b.chi2_reduced);
  CHECK(a.n_iterations == b.n_iterations);
}

TEST_CASE("predict_curves") {
  fit::SharedParams params{2.22e10, 0.701, {743.0}};
  const double omega = kMp.omega();

  SUBCASE("single point equals the model") {
    const auto curves = fit::predict_curves(params, kMp, {0.4}, omega);
    REQUIRE(curves.size() == 1);
    const auto m =
        model::sensitivity(0.4, omega, kMp, PinningParams{2.22e10, 0.701, 743.0});
    CHECK(curves[0].s[0] == doctest::Approx(m.s));
    CHECK(curves[0].s_prime[0] == doctest::Approx(m.s_prime));
  }
  SUBCASE("low-temperature S matches the nominal level") {
    const auto curves = fit::predict_curves(params, kMp, {0.01}, omega);
    CHECK(curves[0].s[0] == doctest::Approx(1.90e-2).epsilon(5e-3));
  }
  SUBCASE("F = 0 kills S' on the whole grid") {
    fit::SharedParams noF{2.22e10, 0.701, {0.0}};
    const auto curves =
        fit::predict_curves(noF, kMp, {0.1, 0.5, 0.9}, omega);
    for (double sp : curves[0].s_prime) {
      CHECK(sp == 0.0);
    }
  }
}
