#include "fluxloss/fitting.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "fluxloss/model.hpp"

namespace fluxloss::fit {

void FitConfig::validate() const {
  if (!(step_tol > 0.0) || !(grad_tol > 0.0) || !(fd_rel_step > 0.0) ||
      !(rank_tol > 0.0)) {
    throw std::invalid_argument("FitConfig: tolerances must be > 0");
  }
  if (max_iterations < 1) {
    throw std::invalid_argument("FitConfig: max_iterations must be >= 1");
  }
  if (!(omega0_bounds.lo < omega0_bounds.hi) ||
      !(alpha_bounds.lo < alpha_bounds.hi) || !(f_bounds.lo < f_bounds.hi)) {
    throw std::invalid_argument("FitConfig: empty bound interval");
  }
}

namespace {

double weight_sigma(double sigma, WeightMode mode) {
  if (mode == WeightMode::kUnit) {
    return 1.0;
  }
  if (!(sigma > 0.0)) {
    throw std::invalid_argument(
        "residual_vector: zero/negative sigma with 1/sigma^2 weighting");
  }
  return sigma;
}

struct Problem {
  const std::vector<SensitivityCurve>& curves;
  const MaterialParams& mp;
  const FitConfig& cfg;
  double omega;
  bool fit_f;

  int n_free() const {
    return 2 + (fit_f ? static_cast<int>(curves.size()) : 0);
  }

  SharedParams unpack(const Eigen::VectorXd& p) const {
    SharedParams sp;
    sp.omega0 = std::exp(p[0]);
    sp.alpha = p[1];
    if (fit_f) {
      sp.f.resize(curves.size());
      for (std::size_t k = 0; k < curves.size(); ++k) {
        sp.f[k] = std::exp(p[2 + k]);
      }
    }
    return sp;
  }

  Eigen::VectorXd clamp(Eigen::VectorXd p) const {
    p[0] = std::clamp(p[0], std::log(cfg.omega0_bounds.lo),
                      std::log(cfg.omega0_bounds.hi));
    p[1] = std::clamp(p[1], cfg.alpha_bounds.lo, cfg.alpha_bounds.hi);
    if (fit_f) {
      for (int k = 2; k < p.size(); ++k) {
        p[k] = std::clamp(p[k], std::log(cfg.f_bounds.lo),
                          std::log(cfg.f_bounds.hi));
      }
    }
    return p;
  }

  Eigen::VectorXd residuals(const Eigen::VectorXd& p) const {
    const auto r = residual_vector(unpack(p), curves, mp, cfg);
    return Eigen::Map<const Eigen::VectorXd>(r.data(), r.size());
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& p,
                           const Eigen::VectorXd& r0) const {
    Eigen::MatrixXd j(r0.size(), p.size());
    for (int k = 0; k < p.size(); ++k) {
      const double h = cfg.fd_rel_step * std::max(std::abs(p[k]), 1.0);
      Eigen::VectorXd ph = p;
      ph[k] += h;
      j.col(k) = (residuals(ph) - r0) / h;
    }
    return j;
  }

  std::string param_name(int i) const {
    if (i == 0) {
      return "omega0";
    }
    if (i == 1) {
      return "alpha";
    }
    const auto& id = curves[static_cast<std::size_t>(i - 2)].cooldown_id;
    return "F[" + (id.empty() ? std::to_string(i - 2) : id) + "]";
  }

  void check_rank(const Eigen::MatrixXd& j) const {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(j, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv[sv.size() - 1] < cfg.rank_tol * sv[0]) {
      const Eigen::VectorXd null_dir = svd.matrixV().col(sv.size() - 1);
      int worst = 0;
      null_dir.cwiseAbs().maxCoeff(&worst);
      throw RankDeficiencyError(
          "fit_simultaneous: singular normal matrix, parameter '" +
          param_name(worst) + "' is unidentifiable with this data");
    }
  }
};

}  // namespace

std::vector<double> residual_vector(const SharedParams& params,
                                    const std::vector<SensitivityCurve>& curves,
                                    const MaterialParams& mp,
                                    const FitConfig& cfg) {
  if (curves.empty()) {
    throw std::invalid_argument("residual_vector: no curves");
  }
  if (!cfg.fixed_f && params.f.size() != curves.size()) {
    throw std::invalid_argument(
        "residual_vector: one F per dataset is required");
  }
  const double omega = mp.omega();

  std::vector<double> out;
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const SensitivityCurve& curve = curves[k];
    if (curve.points.empty()) {
      throw std::invalid_argument("residual_vector: empty curve '" +
                                  curve.cooldown_id + "'");
    }
    PinningParams pp{params.omega0, params.alpha,
                     cfg.fixed_f ? *cfg.fixed_f : params.f[k]};
    for (const SensPoint& pt : curve.points) {
      const auto m = model::sensitivity(pt.temperature_k, omega, mp, pp);
      out.push_back((pt.s - m.s) / weight_sigma(pt.s_err, cfg.weight_mode));
      out.push_back((pt.s_prime - m.s_prime) /
                    weight_sigma(pt.s_prime_err, cfg.weight_mode));
    }
  }
  return out;
}

FitResult fit_simultaneous(const std::vector<SensitivityCurve>& curves,
                           const MaterialParams& mp, const FitConfig& cfg) {
  cfg.validate();
  mp.validate();
  Problem prob{curves, mp, cfg, mp.omega(), !cfg.fixed_f.has_value()};

  int n_res = 0;
  for (const auto& c : curves) {
    n_res += 2 * static_cast<int>(c.points.size());
  }
  const int n_free = prob.n_free();
  if (n_res < n_free + 1) {
    throw RankDeficiencyError(
        "fit_simultaneous: " + std::to_string(n_res) + " residuals cannot "
        "constrain " + std::to_string(n_free) + " free parameters");
  }

  // Initial point; omega0 defaults to the cavity angular frequency.
  Eigen::VectorXd p(n_free);
  p[0] = std::log(cfg.initial.omega0 > 0.0 ? cfg.initial.omega0 : prob.omega);
  p[1] = cfg.initial.alpha;
  for (int k = 2; k < n_free; ++k) {
    p[k] = std::log(cfg.initial.f);
  }
  p = prob.clamp(p);

  Eigen::VectorXd r = prob.residuals(p);
  double cost = r.squaredNorm();
  double damping = 1e-3;
  bool converged = false;
  int iter = 0;
  Eigen::MatrixXd j;

  for (; iter < cfg.max_iterations && !converged; ++iter) {
    j = prob.jacobian(p, r);
    prob.check_rank(j);
    const Eigen::VectorXd grad = j.transpose() * r;
    if (grad.lpNorm<Eigen::Infinity>() <= cfg.grad_tol) {
      converged = true;
      break;
    }
    const Eigen::MatrixXd jtj = j.transpose() * j;

    bool accepted = false;
    for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
      Eigen::MatrixXd a = jtj;
      for (int d = 0; d < n_free; ++d) {
        a(d, d) += damping * std::max(jtj(d, d), 1e-12);
      }
      const Eigen::VectorXd step = a.ldlt().solve(-grad);
      const Eigen::VectorXd p_try = prob.clamp(p + step);
      const Eigen::VectorXd r_try = prob.residuals(p_try);
      const double cost_try = r_try.squaredNorm();
      if (cost_try <= cost) {
        const bool small_step =
            (p_try - p).lpNorm<Eigen::Infinity>() <=
            cfg.step_tol * (1.0 + p.lpNorm<Eigen::Infinity>());
        const bool small_decrease = cost - cost_try <= 1e-14 * cost;
        p = p_try;
        r = r_try;
        cost = cost_try;
        damping = std::max(damping * 0.3, 1e-14);
        accepted = true;
        if (small_step || small_decrease) {
          converged = true;
        }
      } else {
        damping = std::min(damping * 4.0, 1e14);
      }
    }
    if (!accepted) {
      // No downhill step exists at any damping; we are at a minimum.
      converged = true;
    }
  }

  // Covariance at the optimum: (J^T W J)^-1 scaled by reduced chi^2,
  // in log parameters, then mapped to the linear scale (delta method).
  j = prob.jacobian(p, r);
  prob.check_rank(j);
  const double chi2_red = cost / static_cast<double>(n_res - n_free);
  const Eigen::MatrixXd cov_log =
      (j.transpose() * j).ldlt().solve(
          Eigen::MatrixXd::Identity(n_free, n_free)) *
      chi2_red;

  const SharedParams sp = prob.unpack(p);
  Eigen::VectorXd scale(n_free);
  scale[0] = sp.omega0;  // d(omega0)/d(ln omega0)
  scale[1] = 1.0;
  for (int k = 2; k < n_free; ++k) {
    scale[k] = sp.f[static_cast<std::size_t>(k - 2)];
  }
  const Eigen::MatrixXd cov_lin =
      scale.asDiagonal() * cov_log * scale.asDiagonal();

  FitResult res;
  res.params = sp;
  res.omega0_err = std::sqrt(std::max(cov_lin(0, 0), 0.0));
  res.alpha_err = std::sqrt(std::max(cov_lin(1, 1), 0.0));
  for (int k = 2; k < n_free; ++k) {
    res.f_err.push_back(std::sqrt(std::max(cov_lin(k, k), 0.0)));
  }
  res.covariance.assign(n_free, std::vector<double>(n_free));
  for (int a = 0; a < n_free; ++a) {
    for (int b = 0; b < n_free; ++b) {
      res.covariance[a][b] = cov_lin(a, b);
    }
  }
  res.chi2_reduced = chi2_red;
  res.n_points = n_res;
  res.n_iterations = iter;
  res.converged = converged;
  int offset = 0;
  for (const auto& c : curves) {
    res.dataset_order.push_back(c.cooldown_id);
    const int len = 2 * static_cast<int>(c.points.size());
    res.residuals_per_dataset.emplace_back(r.data() + offset,
                                           r.data() + offset + len);
    offset += len;
  }
  return res;
}

std::vector<ModelCurve> predict_curves(const SharedParams& params,
                                       const MaterialParams& mp,
                                       const std::vector<double>& t_grid_k,
                                       double omega,
                                       const std::vector<std::string>&
                                           dataset_ids) {
  std::vector<ModelCurve> out;
  for (std::size_t k = 0; k < params.f.size(); ++k) {
    ModelCurve mc;
    mc.cooldown_id = k < dataset_ids.size() ? dataset_ids[k]
                                            : "dataset_" + std::to_string(k);
    PinningParams pp{params.omega0, params.alpha, params.f[k]};
    for (double t : t_grid_k) {
      const auto m = model::sensitivity(t, omega, mp, pp);
      mc.temperature_k.push_back(t);
      mc.s.push_back(m.s);
      mc.s_prime.push_back(m.s_prime);
    }
    out.push_back(std::move(mc));
  }
  return out;
}

}  // namespace fluxloss::fit
