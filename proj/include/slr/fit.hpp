#pragma once

// Result type shared by every estimator (restricted MLE, selection, Slope,
// Lasso): coefficients with support plus optimizer diagnostics.

#include <limits>
#include <vector>

#include "slr/model.hpp"

namespace slr {

struct IrlsDiagnostics {
  int iterations = 0;
  double final_grad_norm = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  bool separation_detected = false;
  bool boundary_active = false;
  std::vector<double> loglik_trace;  // filled when IrlsConfig::keep_trace
};

struct SolverDiagnostics {
  int iterations = 0;
  bool converged = false;
  bool below_lambda_floor = false;
  double final_rel_change = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> objective_trace;  // filled when SolverConfig::keep_trace
};

struct FitResult {
  CoefVector coef;
  double log_lik = std::numeric_limits<double>::quiet_NaN();
  // penalized objective for Slope/Lasso fits, NaN otherwise
  double objective = std::numeric_limits<double>::quiet_NaN();
  IrlsDiagnostics irls;
  SolverDiagnostics solver;
};

}  // namespace slr
