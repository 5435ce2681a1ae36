#pragma once

// Configuration-driven Monte Carlo harness: rate-scaling studies on the
// worst-case fixed-design ensembles, low-noise margin studies, Slope rate
// studies on margin-warped random designs, lower-bound hardness comparisons,
// 5-fold cross-validation, and deterministic report emission.
//
// Determinism contract: a report depends only on (config, seed). Replicate
// streams are derived from (seed, cell, replicate); workers write into
// preallocated slots and aggregation runs in index order, so the worker
// count never changes a byte of output.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slr/design.hpp"
#include "slr/fit.hpp"
#include "slr/irls.hpp"
#include "slr/selection.hpp"
#include "slr/slope.hpp"

namespace slr {

enum class Scenario {
  rate_fixed,
  rate_margin,
  rate_slope,
  lower_bound_X0,
  random_design_rate,
  csv_benchmark
};

enum class EstimatorKind { exhaustive, forward, slope, lasso };

enum class Tuning { theory_constants, cv5 };

std::string to_string(Scenario s);
std::string to_string(EstimatorKind e);
std::string to_string(Tuning t);

struct ExperimentConfig {
  Scenario scenario = Scenario::rate_fixed;

  std::vector<int> n_grid = {100, 200, 400, 800};
  std::vector<int> d_grid = {8, 32};
  std::vector<int> d0_grid = {1, 2, 4};
  std::vector<double> h_grid = {0.0};
  std::vector<double> alpha_grid = {};
  std::vector<EstimatorKind> estimators = {EstimatorKind::exhaustive};

  int replicates = 200;
  std::uint64_t seed = 20250809;
  Tuning tuning = Tuning::theory_constants;
  int workers = 1;
  bool emit_replicates = false;  // per-replicate risks in the report

  // ensemble and estimator knobs
  double delta = 0.05;               // Assumption-A box parameter
  std::optional<double> penalty_c;   // explicit c (otherwise default_c(delta_eff))
  double margin_gamma = 1.0;         // critical-margin scale multiplier
  double slope_A = 0.4;              // schedule constant for slope studies
  double lasso_lambda = 0.5;         // constant lambda for lasso studies
  double c0 = 3.0;
  DesignDistribution design = DesignDistribution::rademacher_rescaled;
  double h_star = 0.3;               // margin cap for alpha-design studies
  double signal_theta = 2.0;         // benign-design signal magnitude
  int mc_test = 4000;                // fresh test rows for random-design excess

  // csv_benchmark inputs
  std::string csv_x;
  std::string csv_y;
};

// Parses the flat `key = value` config format; unknown keys are errors.
ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

struct CellKey {
  std::string arm;  // "" | "x0" | "benign"
  EstimatorKind estimator = EstimatorKind::exhaustive;
  int n = 0, d = 0, d0 = 0;
  double h = 0.0;
  double alpha = 0.0;
};

struct CellStats {
  CellKey key;
  int replicates = 0;
  int failures = 0;
  bool flagged = false;  // more than 10% replicate failures
  double mean_excess = 0.0, stderr_excess = 0.0;
  double mean_kl = 0.0, stderr_kl = 0.0;
  double mean_support = 0.0;
  double mean_bayes_risk = 0.0;
  bool bartlett_ok = true;
  // lower-bound pairing: fraction of replicates with excess(X0) >= excess(benign)
  double paired_frac = std::numeric_limits<double>::quiet_NaN();
  // per-replicate risks, kept when ExperimentConfig::emit_replicates is set
  std::vector<double> rep_excess;
  std::vector<double> rep_kl;
};

struct RateFit {
  double slope_loglog = std::numeric_limits<double>::quiet_NaN();
  double stderr_ = std::numeric_limits<double>::quiet_NaN();
  double r_squared = std::numeric_limits<double>::quiet_NaN();
  int points = 0;
};

// Least-squares fit of ln(y) on ln(x); needs >= 3 usable points.
RateFit fit_rate(const std::vector<double>& n_values,
                 const std::vector<double>& y_values);

struct CurveFit {
  std::string curve;
  RateFit fit;
};

struct ExperimentReport {
  std::string scenario;
  std::uint64_t seed = 0;
  std::vector<CellStats> cells;
  std::vector<CurveFit> rate_fits;
  std::map<std::string, double> metrics;
  std::vector<std::string> notes;
};

ExperimentReport run_rate_study(const ExperimentConfig& cfg);
ExperimentReport run_margin_study(const ExperimentConfig& cfg);
ExperimentReport run_lower_bound_study(const ExperimentConfig& cfg);
ExperimentReport run_csv_benchmark(const ExperimentConfig& cfg);

// Dispatches on cfg.scenario.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

struct CvResult {
  int folds = 5;
  std::vector<double> candidate_grid;
  double chosen = 0.0;
  std::vector<double> cv_error_curve;
  int skipped_folds = 0;
};

// Stratified, seeded 5-fold CV of the estimator's tuning constant over the
// grid (penalty c / Slope A / Lasso lambda); ties go to the smallest
// candidate. Folds whose training part is single-class are skipped.
CvResult cross_validate(const DesignMatrix& x, const Eigen::VectorXd& y,
                        EstimatorKind estimator, const std::vector<double>& grid,
                        const ExperimentConfig& cfg, std::uint64_t seed);

enum class ReportFormat { csv, json, plotdata };

// Writes report files into out_dir. Deterministic: identical reports yield
// byte-identical files.
void emit_report(const ExperimentReport& report, const std::string& out_dir,
                 const std::vector<ReportFormat>& formats = {
                     ReportFormat::csv, ReportFormat::json, ReportFormat::plotdata});

// Estimator application shared by the studies and the CLI `fit` command.
// Selection estimators use the fixed-design penalty by default; the
// random-design studies pass PenaltyKind::random_design.
struct EstimatorRun {
  FitResult fit;            // coefficients on the original column scaling
  std::string note;         // e.g. exhaustive->forward downgrade
};
EstimatorRun apply_estimator(EstimatorKind kind, const DesignMatrix& x,
                             const Eigen::VectorXd& y,
                             const ExperimentConfig& cfg, double tuning_value,
                             PenaltyKind penalty_kind = PenaltyKind::fixed_design);

}  // namespace slr
