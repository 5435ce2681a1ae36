#include "slr/model.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "slr/kernels.hpp"

namespace slr {

double GlmFamily::b(double theta) const {
  switch (name) {
    case Family::logistic:
      // softplus, stable beyond |theta| ~ 40
      return (theta > 0.0 ? theta : 0.0) + std::log1p(std::exp(-std::fabs(theta)));
    case Family::gaussian:
      return 0.5 * theta * theta;
  }
  return 0.0;
}

double GlmFamily::b_prime(double theta) const {
  switch (name) {
    case Family::logistic:
      return inv_logit(theta);
    case Family::gaussian:
      return theta;
  }
  return 0.0;
}

double GlmFamily::b_double_prime(double theta) const {
  switch (name) {
    case Family::logistic: {
      double p = inv_logit(theta);
      return p * (1.0 - p);
    }
    case Family::gaussian:
      return 1.0;
  }
  return 0.0;
}

double GlmFamily::variance_upper_U() const {
  return name == Family::logistic ? 0.25 : 1.0;
}

double GlmFamily::variance_lower_L(double c0) const {
  if (name == Family::gaussian) return 1.0;
  double delta = 1.0 / (1.0 + std::exp(c0));
  return delta * (1.0 - delta);
}

bool GlmFamily::response_valid(double y) const {
  if (name == Family::logistic) return y == 0.0 || y == 1.0;
  return std::isfinite(y);
}

GlmFamily GlmFamily::logistic() { return GlmFamily{Family::logistic, 1.0}; }

GlmFamily GlmFamily::gaussian(double sigma2) {
  if (sigma2 <= 0.0) throw ContractViolation("gaussian scale must be positive");
  return GlmFamily{Family::gaussian, sigma2};
}

DesignMatrix::DesignMatrix(Eigen::MatrixXd entries) : x_(std::move(entries)) {
  if (x_.rows() == 0 || x_.cols() == 0)
    throw ContractViolation("design matrix must be nonempty");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x_);
  const auto& sv = svd.singularValues();
  sigma_max_ = sv(0);
  sigma_min_ = sv(sv.size() - 1);
  double tol = 1e-10 * sv(0);
  rank_ = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank_;

  unit_cols_ = true;
  for (Eigen::Index j = 0; j < x_.cols(); ++j) {
    if (std::fabs(x_.col(j).norm() - 1.0) > 1e-12) {
      unit_cols_ = false;
      break;
    }
  }
}

CoefVector::CoefVector(Eigen::VectorXd b) : beta(std::move(b)) {
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    if (beta(j) != 0.0) support.push_back(static_cast<int>(j));
}

CoefVector CoefVector::zeros(Eigen::Index d) {
  return CoefVector(Eigen::VectorXd::Zero(d));
}

ProbVector::ProbVector(Eigen::VectorXd p) : p_(std::move(p)) {
  for (Eigen::Index i = 0; i < p_.size(); ++i) {
    if (!(p_(i) >= 0.0 && p_(i) <= 1.0))
      throw ContractViolation("probability outside [0,1]");
  }
}

ProbVector ProbVector::clamped(double eps) const {
  Eigen::VectorXd q = p_;
  for (Eigen::Index i = 0; i < q.size(); ++i)
    q(i) = std::min(1.0 - eps, std::max(eps, q(i)));
  return ProbVector(std::move(q));
}

bool ProbVector::within_box(double delta) const {
  for (Eigen::Index i = 0; i < p_.size(); ++i)
    if (!(p_(i) > delta && p_(i) < 1.0 - delta)) return false;
  return true;
}

Eigen::VectorXd linear_predictor(const DesignMatrix& x, const CoefVector& beta) {
  if (beta.beta.size() != x.d())
    throw ContractViolation("linear_predictor: dimension mismatch");
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(x.n());
  const auto& m = x.entries();
  for (int j : beta.support) {
    kernels::axpy(beta.beta(j), m.col(j).data(), theta.data(),
                  static_cast<std::size_t>(m.rows()));
  }
  return theta;
}

double inv_logit(double theta) {
  double e = std::exp(-std::fabs(theta));
  double s = e / (1.0 + e);
  return theta >= 0.0 ? 1.0 - s : s;
}

ProbVector inv_logit(const Eigen::VectorXd& theta) {
  Eigen::VectorXd p(theta.size());
  kernels::sigmoid(theta.data(), p.data(), static_cast<std::size_t>(theta.size()));
  return ProbVector(std::move(p));
}

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ContractViolation("logit argument not in (0,1)");
  return std::log(p / (1.0 - p));
}

double log_likelihood_theta(const GlmFamily& family, const Eigen::VectorXd& theta,
                            const Eigen::VectorXd& y) {
  if (theta.size() != y.size())
    throw ContractViolation("log_likelihood: dimension mismatch");
  const std::size_t n = static_cast<std::size_t>(theta.size());
  double ll;
  if (family.name == Family::logistic) {
    ll = kernels::dot(theta.data(), y.data(), n) -
         kernels::softplus_sum(theta.data(), n);
  } else {
    ll = kernels::dot(theta.data(), y.data(), n) -
         0.5 * kernels::nrm2sq(theta.data(), n);
  }
  return ll / family.scale_a;
}

double log_likelihood(const GlmFamily& family, const DesignMatrix& x,
                      const CoefVector& beta, const Eigen::VectorXd& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (!family.response_valid(y(i)))
      throw ContractViolation("invalid response value for family");
  return log_likelihood_theta(family, linear_predictor(x, beta), y);
}

double kl_divergence(const ProbVector& p, const ProbVector& p_hat) {
  if (p.n() != p_hat.n()) throw ContractViolation("kl_divergence: length mismatch");
  const Eigen::Index n = p.n();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double pi = p[i], qi = p_hat[i];
    if (pi > 0.0) {
      if (qi == 0.0) throw DivergentKlError("kl_divergence: p_hat has a zero entry");
      acc += pi * std::log(pi / qi);
    }
    if (pi < 1.0) {
      if (qi == 1.0) throw DivergentKlError("kl_divergence: p_hat has a unit entry");
      acc += (1.0 - pi) * std::log((1.0 - pi) / (1.0 - qi));
    }
  }
  return acc / static_cast<double>(n);
}

double glm_kl(const GlmFamily& family, const Eigen::VectorXd& theta,
              const Eigen::VectorXd& theta_hat) {
  if (theta.size() != theta_hat.size())
    throw ContractViolation("glm_kl: length mismatch");
  const Eigen::Index n = theta.size();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double t = theta(i), s = theta_hat(i);
    acc += family.b_prime(t) * (t - s) - (family.b(t) - family.b(s));
  }
  return acc / (static_cast<double>(n) * family.scale_a);
}

double bernoulli_hellinger_sq(double p1, double p2) {
  if (!(p1 > 0.0 && p1 < 1.0 && p2 > 0.0 && p2 < 1.0))
    throw ContractViolation("bernoulli_hellinger_sq: arguments must be in (0,1)");
  return 1.0 - (std::sqrt(p1 * p2) + std::sqrt((1.0 - p1) * (1.0 - p2)));
}

}  // namespace slr
