#pragma once

// Plug-in classifiers and their risks: exact conditional excess risk under
// fixed design, Monte Carlo excess under random design, VC-dimension bounds
// for sparse linear rules, and the KL-to-excess inequality check.

#include <cstdint>
#include <utility>

#include "slr/design.hpp"
#include "slr/model.hpp"

namespace slr {

// Predicts I{beta' x >= 0}; ties go to class 1.
struct LinearClassifier {
  CoefVector beta;
};

Eigen::VectorXi classify(const LinearClassifier& clf, const DesignMatrix& x);

// (1/n) sum_i min(p_i, 1-p_i): the Bayes classifier's risk on the rows.
double bayes_risk_fixed(const DesignMatrix& x, const ProbVector& p);

// (1/n) sum_i I{clf_i != bayes_i} |2 p_i - 1|: exact conditional excess when
// `bayes` is the Bayes rule of p. Nonnegative by construction.
double excess_risk_fixed(const LinearClassifier& clf, const DesignMatrix& x,
                         const ProbVector& p, const LinearClassifier& bayes);

struct McEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
};

// E_x[ I{clf != bayes} |2 p(x) - 1| ] by Monte Carlo over the design law.
McEstimate excess_risk_random_mc(const LinearClassifier& clf,
                                 const LinearClassifier& bayes,
                                 const RandomDesignSpec& spec,
                                 const CoefVector& beta_true, int mc_n,
                                 std::uint64_t seed);

// (d0 log2(2d/d0), 2 d0 log2(de/d0))
std::pair<double, double> vc_bounds(int d0, int d);

// excess <= sqrt(2 kl) + eps_mc
bool bartlett_bound_check(double kl, double excess, double eps_mc = 0.0);

struct RiskReport {
  double empirical_error = 0.0;      // R_X(clf) = (1/n) sum P(Y_i != clf_i)
  double oracle_error_r_star = 0.0;  // Bayes risk
  double excess = 0.0;               // equals empirical - oracle exactly
  double kl = 0.0;
  double margin_min = 0.0;
};

// Full risk accounting of a fitted classifier against the truth (p, bayes)
// and its probability estimate p_hat.
RiskReport evaluate_risk(const LinearClassifier& clf, const DesignMatrix& x,
                         const ProbVector& p, const ProbVector& p_hat,
                         const LinearClassifier& bayes);

}  // namespace slr
