#include "slr/irls.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>

#include "slr/kernels.hpp"

namespace slr {
namespace {

constexpr double kSeparationBetaNorm = 1e3;
// |theta| beyond this leaves the fitted probabilities within 1e-13 of {0,1}:
// the restricted MLE is running away even though the score has gone numerically
// flat, which is how separation actually manifests at double precision.
constexpr double kSeparationThetaMax = 30.0;

// theta = sum_{j in model} beta_j * X_j, restricted columns only
void restricted_predictor(const Eigen::MatrixXd& x, const std::vector<int>& model,
                          const Eigen::VectorXd& beta_m, Eigen::VectorXd& theta) {
  theta.setZero();
  const std::size_t n = static_cast<std::size_t>(x.rows());
  for (std::size_t k = 0; k < model.size(); ++k) {
    if (beta_m(static_cast<Eigen::Index>(k)) != 0.0)
      kernels::axpy(beta_m(static_cast<Eigen::Index>(k)), x.col(model[k]).data(),
                    theta.data(), n);
  }
}

void mean_from_theta(const GlmFamily& family, const Eigen::VectorXd& theta,
                     Eigen::VectorXd& mu) {
  if (family.name == Family::logistic) {
    kernels::sigmoid(theta.data(), mu.data(), static_cast<std::size_t>(theta.size()));
  } else {
    mu = theta;
  }
}

}  // namespace

FitResult fit_restricted_mle(const GlmFamily& family, const DesignMatrix& x,
                             const Eigen::VectorXd& y,
                             const std::vector<int>& model,
                             const IrlsConfig& cfg) {
  if (cfg.max_iter < 1 || cfg.grad_tol <= 0.0)
    throw ContractViolation("IrlsConfig: max_iter >= 1 and grad_tol > 0 required");
  if (y.size() != x.n()) throw ContractViolation("fit_restricted_mle: y length != n");
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (!family.response_valid(y(i)))
      throw ContractViolation("fit_restricted_mle: invalid response for family");

  std::vector<int> m = model;
  std::sort(m.begin(), m.end());
  if (std::adjacent_find(m.begin(), m.end()) != m.end())
    throw ContractViolation("fit_restricted_mle: duplicate index in model");
  if (!m.empty() && (m.front() < 0 || m.back() >= x.d()))
    throw ContractViolation("fit_restricted_mle: model index out of range");

  const Eigen::Index n = x.n();
  const int k = static_cast<int>(m.size());
  const double a = family.scale_a;

  FitResult res;
  res.coef = CoefVector::zeros(x.d());

  if (k == 0) {
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
    res.log_lik = log_likelihood_theta(family, theta, y);
    res.irls.converged = true;
    res.irls.final_grad_norm = 0.0;
    if (cfg.keep_trace) res.irls.loglik_trace.push_back(res.log_lik);
    return res;
  }

  const Eigen::MatrixXd& xm = x.entries();
  {
    Eigen::MatrixXd sub(n, k);
    for (int j = 0; j < k; ++j) sub.col(j) = xm.col(m[j]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
    qr.setThreshold(1e-10);
    if (qr.rank() < k)
      throw DegenerateModelError("fit_restricted_mle: restricted design is rank-deficient");
  }

  Eigen::VectorXd beta_m = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd mu(n), w(n), grad(k), dbeta(k), dtheta(n), theta_try(n);
  Eigen::MatrixXd hess(k, k);

  double loglik = log_likelihood_theta(family, theta, y);
  if (cfg.keep_trace) res.irls.loglik_trace.push_back(loglik);

  auto grad_inf_norm = [&](const Eigen::VectorXd& g) {
    return g.size() == 0 ? 0.0 : g.cwiseAbs().maxCoeff();
  };
  auto diverging = [&]() {
    if (family.name != Family::logistic) return false;
    if (cfg.box_c0 && *cfg.box_c0 <= kSeparationThetaMax) return false;
    return beta_m.norm() > kSeparationBetaNorm ||
           theta.cwiseAbs().maxCoeff() > kSeparationThetaMax;
  };

  IrlsDiagnostics& diag = res.irls;
  bool stalled = false;

  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    mean_from_theta(family, theta, mu);
    Eigen::VectorXd resid = y - mu;
    for (int j = 0; j < k; ++j)
      grad(j) = kernels::dot(xm.col(m[j]).data(), resid.data(),
                             static_cast<std::size_t>(n)) /
                a;
    diag.final_grad_norm = grad_inf_norm(grad);
    if (diverging()) {
      diag.separation_detected = true;
      break;
    }
    if (diag.final_grad_norm <= cfg.grad_tol) {
      diag.converged = true;
      break;
    }

    for (Eigen::Index i = 0; i < n; ++i) w(i) = family.b_double_prime(theta(i)) / a;
    for (int j = 0; j < k; ++j)
      for (int l = j; l < k; ++l) {
        double v = kernels::wdot(xm.col(m[j]).data(), w.data(), xm.col(m[l]).data(),
                                 static_cast<std::size_t>(n));
        hess(j, l) = v;
        hess(l, j) = v;
      }

    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    dbeta = ldlt.solve(grad);
    if (!dbeta.allFinite() || ldlt.info() != Eigen::Success) {
      // Weights collapsed; under a diverging fit this is separation.
      if (beta_m.norm() > 1.0) {
        diag.separation_detected = true;
        break;
      }
      throw ConvergenceError("fit_restricted_mle: singular working Hessian",
                             iter, diag.final_grad_norm);
    }

    restricted_predictor(xm, m, dbeta, dtheta);

    double t = 1.0;
    if (cfg.box_c0) {
      // largest feasible step keeping |theta_i| <= C0
      const double c0 = *cfg.box_c0;
      double tmax = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < n; ++i) {
        if (dtheta(i) > 0.0) tmax = std::min(tmax, (c0 - theta(i)) / dtheta(i));
        else if (dtheta(i) < 0.0) tmax = std::min(tmax, (-c0 - theta(i)) / dtheta(i));
      }
      t = std::min(1.0, std::max(0.0, tmax));
    }

    double new_loglik = loglik;
    bool improved = false;
    for (int half = 0; half <= cfg.step_halving_max && t > 0.0; ++half) {
      theta_try = theta + t * dtheta;
      double cand = log_likelihood_theta(family, theta_try, y);
      if (cand >= loglik - 1e-12 * (1.0 + std::fabs(loglik))) {
        new_loglik = cand;
        improved = true;
        break;
      }
      t *= 0.5;
    }
    if (!improved) {
      stalled = true;
      break;
    }

    beta_m += t * dbeta;
    theta = theta + t * dtheta;
    loglik = new_loglik;
    diag.iterations = iter + 1;
    if (cfg.keep_trace) diag.loglik_trace.push_back(loglik);
  }

  // Final restricted score for the diagnostics.
  mean_from_theta(family, theta, mu);
  Eigen::VectorXd resid = y - mu;
  for (int j = 0; j < k; ++j)
    grad(j) = kernels::dot(xm.col(m[j]).data(), resid.data(),
                           static_cast<std::size_t>(n)) /
              a;
  diag.final_grad_norm = grad_inf_norm(grad);
  if (diverging()) {
    diag.separation_detected = true;
    diag.converged = false;
  } else if (diag.final_grad_norm <= cfg.grad_tol) {
    diag.converged = true;
  }

  if (cfg.box_c0 && !diag.converged) {
    double tmax_abs = theta.cwiseAbs().maxCoeff();
    if (tmax_abs >= *cfg.box_c0 * (1.0 - 1e-8)) diag.boundary_active = true;
  }

  if (!diag.converged && !diag.separation_detected && !diag.boundary_active) {
    throw ConvergenceError(
        stalled ? "fit_restricted_mle: step halving stalled before tolerance"
                : "fit_restricted_mle: iteration budget exhausted",
        diag.iterations, diag.final_grad_norm);
  }

  Eigen::VectorXd full = Eigen::VectorXd::Zero(x.d());
  for (int j = 0; j < k; ++j) full(m[j]) = beta_m(j);
  res.coef = CoefVector(std::move(full));
  res.log_lik = loglik;
  return res;
}

double criterion_value(const GlmFamily& family, const DesignMatrix& x,
                       const Eigen::VectorXd& y, const FitResult& fit,
                       double pen) {
  return -log_likelihood(family, x, fit.coef, y) + pen;
}

}  // namespace slr
