#pragma once

// Domain types and exact evaluators for the logistic / natural-exponential-
// family regression model: linear predictors, link functions, likelihoods
// and divergences. Everything here is immutable after construction and pure.

#include <Eigen/Dense>
#include <vector>

#include "slr/errors.hpp"

namespace slr {

enum class Family { logistic, gaussian };

// One-parameter natural exponential family with canonical link:
// density exp{(y*theta - b(theta))/a + c(y,a)}, mean b'(theta),
// variance a*b''(theta).
struct GlmFamily {
  Family name = Family::logistic;
  double scale_a = 1.0;

  double b(double theta) const;
  double b_prime(double theta) const;
  double b_double_prime(double theta) const;

  // Uniform upper bound on b'': 1/4 for logistic, 1 for gaussian.
  double variance_upper_U() const;
  // Lower bound on b'' over |theta| <= c0: delta*(1-delta) with
  // delta = 1/(1+e^{c0}) for logistic, 1 for gaussian.
  double variance_lower_L(double c0) const;

  bool response_valid(double y) const;

  static GlmFamily logistic();
  static GlmFamily gaussian(double sigma2 = 1.0);
};

// n-by-d design with cached column metadata. The numerical rank is computed
// at tolerance 1e-10 * sigma_max; the unit-norm flag at 1e-12.
class DesignMatrix {
 public:
  explicit DesignMatrix(Eigen::MatrixXd entries);

  const Eigen::MatrixXd& entries() const { return x_; }
  Eigen::Index n() const { return x_.rows(); }
  Eigen::Index d() const { return x_.cols(); }
  int rank() const { return rank_; }
  bool columns_unit_normalized() const { return unit_cols_; }
  double sigma_max() const { return sigma_max_; }
  double sigma_min() const { return sigma_min_; }

 private:
  Eigen::MatrixXd x_;
  int rank_ = 0;
  bool unit_cols_ = false;
  double sigma_max_ = 0.0;
  double sigma_min_ = 0.0;
};

// Coefficient vector with its support: support = { j : beta[j] != 0 }.
struct CoefVector {
  Eigen::VectorXd beta;
  std::vector<int> support;

  CoefVector() = default;
  explicit CoefVector(Eigen::VectorXd b);

  int l0() const { return static_cast<int>(support.size()); }
  static CoefVector zeros(Eigen::Index d);
};

// Vector of Bernoulli success probabilities in [0,1]. Clamping into
// [eps, 1-eps] happens only on request; estimators rely on box constraints
// instead of silent clamping.
class ProbVector {
 public:
  explicit ProbVector(Eigen::VectorXd p);

  const Eigen::VectorXd& values() const { return p_; }
  Eigen::Index n() const { return p_.size(); }
  double operator[](Eigen::Index i) const { return p_(i); }

  ProbVector clamped(double eps = 1e-12) const;
  // true iff delta < p_i < 1-delta for all i (Assumption-A box)
  bool within_box(double delta) const;

 private:
  Eigen::VectorXd p_;
};

// theta = X * beta
Eigen::VectorXd linear_predictor(const DesignMatrix& x, const CoefVector& beta);

// p_i = e^{theta_i} / (1 + e^{theta_i}), numerically stable for either sign.
ProbVector inv_logit(const Eigen::VectorXd& theta);
double inv_logit(double theta);
double logit(double p);

// sum_i { theta_i y_i - b(theta_i) } / a
double log_likelihood(const GlmFamily& family, const DesignMatrix& x,
                      const CoefVector& beta, const Eigen::VectorXd& y);
double log_likelihood_theta(const GlmFamily& family,
                            const Eigen::VectorXd& theta,
                            const Eigen::VectorXd& y);

// (1/n) sum_i { p ln(p/q) + (1-p) ln((1-p)/(1-q)) }; throws DivergentKlError
// when some q_i in {0,1} makes a term infinite.
double kl_divergence(const ProbVector& p, const ProbVector& p_hat);

// (1/(n a)) sum_i { b'(t_i)(t_i - s_i) - (b(t_i) - b(s_i)) }
double glm_kl(const GlmFamily& family, const Eigen::VectorXd& theta,
              const Eigen::VectorXd& theta_hat);

// 1 - (sqrt(p1 p2) + sqrt((1-p1)(1-p2)))
double bernoulli_hellinger_sq(double p1, double p2);

}  // namespace slr
