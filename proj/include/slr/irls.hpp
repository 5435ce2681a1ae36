#pragma once

// Restricted maximum likelihood over a fixed support set, by Newton/IRLS
// with step halving. Separation (data perfectly split by the restricted
// design) is detected and reported rather than iterated to overflow; an
// optional box |x_i' beta| <= C0 mirrors the bounded-predictor assumption.

#include <optional>
#include <vector>

#include "slr/fit.hpp"
#include "slr/model.hpp"

namespace slr {

struct IrlsConfig {
  int max_iter = 100;
  double grad_tol = 1e-8;
  int step_halving_max = 30;
  std::optional<double> box_c0;
  bool keep_trace = false;
};

// Maximizes the log-likelihood over { beta : beta_j = 0 for j not in model }.
// Exit states (see FitResult::irls): converged (restricted score <= grad_tol
// componentwise), separation_detected, or boundary_active under the box.
// Throws DegenerateModelError when the restricted design is rank-deficient
// and ConvergenceError when the budget runs out without any of the above.
FitResult fit_restricted_mle(const GlmFamily& family, const DesignMatrix& x,
                             const Eigen::VectorXd& y,
                             const std::vector<int>& model,
                             const IrlsConfig& cfg = {});

// Penalized selection criterion: negative log-likelihood of the fit plus pen.
double criterion_value(const GlmFamily& family, const DesignMatrix& x,
                       const Eigen::VectorXd& y, const FitResult& fit,
                       double pen);

}  // namespace slr
