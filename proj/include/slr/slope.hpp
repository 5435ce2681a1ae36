#pragma once

// Slope estimation for GLMs: the exact sorted-l1 proximal operator, the
// lambda schedules, and an accelerated proximal-gradient solver (monotone
// FISTA with backtracking and adaptive restart). Lasso is the constant-
// schedule special case.

#include "slr/fit.hpp"
#include "slr/model.hpp"

namespace slr {

enum class ScheduleKind { slope_logistic, slope_glm, lasso };

// Nonincreasing tuning sequence lambda_1 >= ... >= lambda_d.
//   slope_logistic: lambda_j = A (c0+1)/(c0-1) sqrt(ln(2d/j)), floor A >= 20 sqrt(6)
//   slope_glm:      the same times sqrt(U/a),                  floor A >= 40 sqrt(6)
//   lasso:          lambda_j = A
// A below the floor is permitted for experimentation and flagged.
struct LambdaSchedule {
  Eigen::VectorXd lambdas;
  double A = 0.0;
  double c0 = 0.0;
  double family_factor = 1.0;
  bool below_theory_floor = false;
};

LambdaSchedule build_schedule(ScheduleKind kind, int d, double A, double c0,
                              const GlmFamily& family);

// argmin_b 1/2 ||b - y||^2 + t * sum_j lambda_j |b|_(j), exact in O(d log d).
Eigen::VectorXd prox_sorted_l1(const Eigen::VectorXd& y,
                               const Eigen::VectorXd& lambdas, double t);

enum class StepRule { fixed_lipschitz, backtracking };

struct SolverConfig {
  int max_iter = 50000;
  double obj_tol = 1e-10;  // relative objective change, 5 consecutive hits
  StepRule step_rule = StepRule::backtracking;
  bool restart = true;
  bool keep_trace = false;
};

// negative log-likelihood + sorted-l1 penalty at beta
double slope_objective(const GlmFamily& family, const DesignMatrix& x,
                       const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                       const Eigen::VectorXd& lambdas);

// Requires unit-normalized columns. A run that exhausts max_iter comes back
// flagged (solver.converged == false), not thrown.
FitResult fit_slope(const GlmFamily& family, const DesignMatrix& x,
                    const Eigen::VectorXd& y, const LambdaSchedule& schedule,
                    const SolverConfig& cfg = {});

FitResult fit_lasso(const GlmFamily& family, const DesignMatrix& x,
                    const Eigen::VectorXd& y, double lambda,
                    const SolverConfig& cfg = {});

}  // namespace slr
