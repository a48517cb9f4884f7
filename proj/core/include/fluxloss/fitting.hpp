#ifndef FLUXLOSS_FITTING_HPP
#define FLUXLOSS_FITTING_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fluxloss/data.hpp"
#include "fluxloss/params.hpp"

// Simultaneous weighted nonlinear least-squares fit of the sensitivity
// model to multiple curves: (omega0, alpha) shared globally, one F per
// dataset. Levenberg-Marquardt with forward finite-difference Jacobian;
// omega0 and F are fitted in log space to enforce positivity, results are
// reported on the linear scale via the delta method.

namespace fluxloss::fit {

/// Shared-parameter set across N datasets.
struct SharedParams {
  double omega0 = 0.0;     // [rad/s]
  double alpha = 0.0;      // [1/K]
  std::vector<double> f;   // one per dataset, dataset order
};

enum class WeightMode { kInverseVariance, kUnit };

struct Bounds {
  double lo;
  double hi;
};

struct FitConfig {
  // initial.omega0 == 0 means "use the cavity angular frequency".
  PinningParams initial{0.0, 1.0, 100.0};
  Bounds omega0_bounds{1e6, 1e14};
  Bounds alpha_bounds{-100.0, 100.0};
  Bounds f_bounds{1e-9, 1e9};
  WeightMode weight_mode = WeightMode::kInverseVariance;
  double step_tol = 1e-10;
  double grad_tol = 1e-10;
  int max_iterations = 500;
  double fd_rel_step = 1e-7;
  double rank_tol = 1e-10;  // sigma_min/sigma_max below this is degenerate
  // When set, F is held at this value for every dataset and not fitted.
  std::optional<double> fixed_f;

  void validate() const;
};

struct RankDeficiencyError : std::runtime_error {
  explicit RankDeficiencyError(const std::string& what)
      : std::runtime_error(what) {}
};

struct FitResult {
  SharedParams params;
  double omega0_err = 0.0;
  double alpha_err = 0.0;
  std::vector<double> f_err;
  // Linear-scale covariance, parameter order omega0, alpha, f[0..N-1]
  // (f block absent when F is fixed). Scaled by reduced chi^2.
  std::vector<std::vector<double>> covariance;
  double chi2_reduced = 0.0;
  std::vector<std::vector<double>> residuals_per_dataset;  // weighted
  std::vector<std::string> dataset_order;  // cooldown ids, F index order
  int n_points = 0;
  int n_iterations = 0;
  bool converged = false;
};

/// Stacked weighted residuals [(S-model)/sigma_S, (S'-model)/sigma_S']
/// over all points of all curves, dataset by dataset.
std::vector<double> residual_vector(const SharedParams& params,
                                    const std::vector<SensitivityCurve>& curves,
                                    const MaterialParams& mp,
                                    const FitConfig& cfg);

/// Simultaneous fit. Throws RankDeficiencyError when the problem is
/// underdetermined or a parameter is unidentifiable; a fit that runs out
/// of iterations is returned with converged == false.
FitResult fit_simultaneous(const std::vector<SensitivityCurve>& curves,
                           const MaterialParams& mp, const FitConfig& cfg = {});

struct ModelCurve {
  std::string cooldown_id;
  std::vector<double> temperature_k;
  std::vector<double> s;        // [Ohm/T]
  std::vector<double> s_prime;  // [Ohm/T]
};

/// Dense model curves S(T), S'(T) per dataset for plotting/export.
std::vector<ModelCurve> predict_curves(const SharedParams& params,
                                       const MaterialParams& mp,
                                       const std::vector<double>& t_grid_k,
                                       double omega,
                                       const std::vector<std::string>&
                                           dataset_ids = {});

}  // namespace fluxloss::fit

#endif
