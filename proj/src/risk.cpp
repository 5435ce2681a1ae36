#include "slr/risk.hpp"

#include <cmath>

#include "slr/rng.hpp"

namespace slr {

Eigen::VectorXi classify(const LinearClassifier& clf, const DesignMatrix& x) {
  Eigen::VectorXd theta = linear_predictor(x, clf.beta);
  Eigen::VectorXi labels(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    labels(i) = theta(i) >= 0.0 ? 1 : 0;
  return labels;
}

double bayes_risk_fixed(const DesignMatrix& x, const ProbVector& p) {
  if (p.n() != x.n()) throw ContractViolation("bayes_risk_fixed: length mismatch");
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.n(); ++i) s += std::min(p[i], 1.0 - p[i]);
  return s / static_cast<double>(p.n());
}

double excess_risk_fixed(const LinearClassifier& clf, const DesignMatrix& x,
                         const ProbVector& p, const LinearClassifier& bayes) {
  if (p.n() != x.n()) throw ContractViolation("excess_risk_fixed: length mismatch");
  Eigen::VectorXi a = classify(clf, x);
  Eigen::VectorXi b = classify(bayes, x);
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.n(); ++i)
    if (a(i) != b(i)) s += std::fabs(2.0 * p[i] - 1.0);
  return s / static_cast<double>(x.n());
}

McEstimate excess_risk_random_mc(const LinearClassifier& clf,
                                 const LinearClassifier& bayes,
                                 const RandomDesignSpec& spec,
                                 const CoefVector& beta_true, int mc_n,
                                 std::uint64_t seed) {
  if (mc_n < 1000)
    throw ContractViolation("excess_risk_random_mc: mc_n >= 1000 required");
  DesignMatrix x = sample_random_design(spec, mc_n, seed);
  Eigen::VectorXd theta = linear_predictor(x, beta_true);
  Eigen::VectorXi a = classify(clf, x);
  Eigen::VectorXi b = classify(bayes, x);

  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < mc_n; ++i) {
    double v = 0.0;
    if (a(i) != b(i)) v = std::fabs(2.0 * inv_logit(theta(i)) - 1.0);
    sum += v;
    sumsq += v * v;
  }
  double mean = sum / mc_n;
  double var = std::max(0.0, sumsq / mc_n - mean * mean);
  return McEstimate{mean, std::sqrt(var / mc_n)};
}

RiskReport evaluate_risk(const LinearClassifier& clf, const DesignMatrix& x,
                         const ProbVector& p, const ProbVector& p_hat,
                         const LinearClassifier& bayes) {
  if (p.n() != x.n() || p_hat.n() != x.n())
    throw ContractViolation("evaluate_risk: length mismatch");
  RiskReport report;
  Eigen::VectorXi labels = classify(clf, x);
  double err = 0.0, margin = 0.5;
  for (Eigen::Index i = 0; i < x.n(); ++i) {
    err += labels(i) == 1 ? 1.0 - p[i] : p[i];
    margin = std::min(margin, std::fabs(p[i] - 0.5));
  }
  report.empirical_error = err / static_cast<double>(x.n());
  report.oracle_error_r_star = bayes_risk_fixed(x, p);
  report.excess = excess_risk_fixed(clf, x, p, bayes);
  report.kl = kl_divergence(p, p_hat);
  report.margin_min = margin;
  return report;
}

std::pair<double, double> vc_bounds(int d0, int d) {
  if (d0 < 1 || d0 > d) throw ContractViolation("vc_bounds: need 1 <= d0 <= d");
  double lower = d0 * std::log2(2.0 * d / d0);
  double upper = 2.0 * d0 * std::log2(d * std::exp(1.0) / d0);
  return {lower, upper};
}

bool bartlett_bound_check(double kl, double excess, double eps_mc) {
  if (kl < 0.0) throw ContractViolation("bartlett_bound_check: kl must be >= 0");
  return excess <= std::sqrt(2.0 * kl) + eps_mc;
}

}  // namespace slr
