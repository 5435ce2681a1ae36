// Command-line front end: fit a single dataset, run a configured experiment,
// emit the constructive designs, or estimate the WRE constant of a design.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "slr/csv_io.hpp"
#include "slr/experiment.hpp"
#include "slr/kernels.hpp"
#include "slr/risk.hpp"
#include "slr/rng.hpp"
#include "slr/selection.hpp"

namespace {

using nlohmann::json;

slr::EstimatorKind parse_estimator(const std::string& s) {
  if (s == "exhaustive") return slr::EstimatorKind::exhaustive;
  if (s == "forward") return slr::EstimatorKind::forward;
  if (s == "slope") return slr::EstimatorKind::slope;
  if (s == "lasso") return slr::EstimatorKind::lasso;
  throw CLI::ValidationError("--estimator", "unknown estimator '" + s + "'");
}

slr::DesignDistribution parse_dist(const std::string& s) {
  if (s == "uniform_ball") return slr::DesignDistribution::uniform_ball;
  if (s == "gaussian_rescaled") return slr::DesignDistribution::gaussian_rescaled;
  if (s == "rademacher_rescaled")
    return slr::DesignDistribution::rademacher_rescaled;
  throw CLI::ValidationError("--dist", "unknown distribution '" + s + "'");
}

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("SLR_SEED");
  if (s == nullptr) return std::nullopt;
  return std::stoull(s);
}

int cmd_fit(const std::string& x_path, const std::string& y_path,
            const std::string& estimator_name, double penalty_c, double slope_a,
            double lasso_lambda, double c0, bool normalize, bool use_cv,
            std::uint64_t seed) {
  slr::EstimatorKind kind = parse_estimator(estimator_name);
  auto [x, y] = slr::load_csv_dataset(x_path, y_path, normalize);

  slr::ExperimentConfig cfg;
  cfg.c0 = c0;
  cfg.seed = seed;

  double tuning = 0.0;
  json cv_info;
  switch (kind) {
    case slr::EstimatorKind::exhaustive:
    case slr::EstimatorKind::forward:
      tuning = penalty_c > 0.0 ? penalty_c : slr::default_c(cfg.delta);
      break;
    case slr::EstimatorKind::slope:
      tuning = slope_a;
      break;
    case slr::EstimatorKind::lasso:
      tuning = lasso_lambda;
      break;
  }
  if (use_cv) {
    std::vector<double> grid;
    if (kind == slr::EstimatorKind::slope || kind == slr::EstimatorKind::lasso)
      grid = {0.05, 0.1, 0.2, 0.4, 0.8, 1.6};
    else
      grid = {0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
    slr::CvResult cv = slr::cross_validate(x, y, kind, grid, cfg, seed);
    tuning = cv.chosen;
    cv_info["chosen"] = cv.chosen;
    cv_info["error_curve"] = cv.cv_error_curve;
    cv_info["candidate_grid"] = cv.candidate_grid;
    cv_info["skipped_folds"] = cv.skipped_folds;
  }

  slr::EstimatorRun run = slr::apply_estimator(kind, x, y, cfg, tuning);

  json out;
  out["estimator"] = estimator_name;
  out["tuning_value"] = tuning;
  out["n"] = x.n();
  out["d"] = x.d();
  out["support"] = run.fit.coef.support;
  json beta = json::object();
  for (int j : run.fit.coef.support)
    beta["x" + std::to_string(j + 1)] = run.fit.coef.beta(j);
  out["beta"] = beta;
  out["log_lik"] = run.fit.log_lik;
  if (kind == slr::EstimatorKind::slope || kind == slr::EstimatorKind::lasso) {
    out["objective"] = run.fit.objective;
    out["iterations"] = run.fit.solver.iterations;
    out["converged"] = run.fit.solver.converged;
    out["below_lambda_floor"] = run.fit.solver.below_lambda_floor;
  } else {
    out["iterations"] = run.fit.irls.iterations;
    out["converged"] = run.fit.irls.converged;
    out["separation_detected"] = run.fit.irls.separation_detected;
  }
  if (!run.note.empty()) out["note"] = run.note;
  if (!cv_info.is_null()) out["cv"] = cv_info;

  // training misclassification of the plug-in classifier
  Eigen::VectorXi pred = slr::classify(slr::LinearClassifier{run.fit.coef}, x);
  int wrong = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (pred(i) != static_cast<int>(y(i))) ++wrong;
  out["train_error"] = static_cast<double>(wrong) / static_cast<double>(y.size());

  std::cout << out.dump(2) << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slr: sparse logistic regression classification lab"};
  app.require_subcommand(1);

  // ---- fit
  auto* fit = app.add_subcommand("fit", "fit one CSV dataset");
  std::string fit_x, fit_y, fit_estimator = "forward";
  double fit_penalty_c = 0.0, fit_slope_a = 0.4, fit_lasso_lambda = 0.5,
         fit_c0 = 3.0;
  bool fit_normalize = false, fit_cv = false;
  std::uint64_t fit_seed = 1;
  fit->add_option("--x", fit_x, "features CSV (header row)")->required();
  fit->add_option("--y", fit_y, "response CSV ({0,1} column)")->required();
  fit->add_option("--estimator", fit_estimator,
                  "exhaustive | forward | slope | lasso");
  fit->add_option("--penalty-c", fit_penalty_c,
                  "complexity penalty constant (0 = default_c(delta))");
  fit->add_option("--slope-A", fit_slope_a, "Slope schedule constant A");
  fit->add_option("--lasso-lambda", fit_lasso_lambda, "Lasso lambda");
  fit->add_option("--c0", fit_c0, "Slope schedule c0 (> 1)");
  fit->add_flag("--normalize", fit_normalize, "unit-normalize feature columns");
  fit->add_flag("--cv", fit_cv, "choose the tuning constant by 5-fold CV");
  fit->add_option("--seed", fit_seed, "seed for CV fold assignment");

  // ---- experiment
  auto* exp = app.add_subcommand("experiment", "run a configured Monte Carlo study");
  std::string exp_config, exp_out = "out";
  std::uint64_t exp_seed = 0;
  bool exp_seed_set = false;
  int exp_workers = 0;
  exp->add_option("--config", exp_config, "config file (key = value lines)")
      ->required();
  exp->add_option("--out", exp_out, "output directory");
  exp->add_option("--seed", exp_seed, "master seed (overrides env and config)")
      ->each([&](const std::string&) { exp_seed_set = true; });
  exp->add_option("--workers", exp_workers, "worker threads (0 = config value)");

  // ---- design
  auto* des = app.add_subcommand("design", "emit W / X0 / random designs to CSV");
  std::string des_kind = "shatter", des_out = "design.csv", des_dist =
      "rademacher_rescaled", des_response;
  int des_d0 = 1, des_d = 4, des_n = 0, des_kappa = 0;
  double des_h = 0.0;
  std::uint64_t des_seed = 1;
  des->add_option("--kind", des_kind, "shatter | worst_case | random")->required();
  des->add_option("--d0", des_d0, "sparsity (shatter, worst_case)");
  des->add_option("--d", des_d, "feature count")->required();
  des->add_option("--n", des_n, "row count (worst_case, random)");
  des->add_option("--margin", des_h, "margin h in [0, 1/2) (worst_case)");
  des->add_option("--kappa", des_kappa, "rows per vertex override (worst_case)");
  des->add_option("--dist", des_dist, "random design distribution");
  des->add_option("--seed", des_seed, "seed (random design / response draw)");
  des->add_option("--out", des_out, "output CSV path");
  des->add_option("--response", des_response,
                  "also draw a response for a random worst-case labeling and "
                  "write it here (worst_case only)");

  // ---- kappa
  auto* kap = app.add_subcommand("kappa", "estimate the WRE constant of a design");
  std::string kap_x;
  int kap_d0 = 1, kap_budget = 10000;
  double kap_c0 = 3.0;
  std::uint64_t kap_seed = 1;
  bool kap_normalize = false;
  kap->add_option("--x", kap_x, "design CSV")->required();
  kap->add_option("--d0", kap_d0, "cone sparsity d0");
  kap->add_option("--c0", kap_c0, "cone constant c0 (> 1)");
  kap->add_option("--budget", kap_budget, "search budget");
  kap->add_option("--seed", kap_seed, "search seed");
  kap->add_flag("--normalize", kap_normalize, "unit-normalize columns first");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(fit)) {
      return cmd_fit(fit_x, fit_y, fit_estimator, fit_penalty_c, fit_slope_a,
                     fit_lasso_lambda, fit_c0, fit_normalize, fit_cv, fit_seed);
    }

    if (app.got_subcommand(exp)) {
      slr::ExperimentConfig cfg = slr::parse_config_file(exp_config);
      if (exp_seed_set) {
        cfg.seed = exp_seed;
      } else if (auto es = env_seed()) {
        cfg.seed = *es;
      }
      if (exp_workers > 0) cfg.workers = exp_workers;
      slr::ExperimentReport report = slr::run_experiment(cfg);
      slr::emit_report(report, exp_out);
      std::cout << "report written to " << exp_out << " (kernels: "
                << slr::kernels::active_name() << ")\n";
      for (const auto& cf : report.rate_fits)
        std::cout << cf.curve << " slope=" << cf.fit.slope_loglog
                  << " r2=" << cf.fit.r_squared << "\n";
      return 0;
    }

    if (app.got_subcommand(des)) {
      if (des_kind == "shatter") {
        Eigen::MatrixXd w = slr::build_shatter_matrix_W(des_d0, des_d);
        slr::save_matrix_csv(des_out, w);
        std::cout << "W (" << w.rows() << "x" << w.cols() << ") -> " << des_out
                  << "\n";
      } else if (des_kind == "worst_case") {
        if (des_n <= 0) throw slr::ContractViolation("worst_case needs --n");
        std::optional<int> kap_override;
        if (des_kappa > 0) kap_override = des_kappa;
        slr::WorstCaseDesign x0 =
            slr::build_worst_case_X0(des_d0, des_d, des_n, des_h, kap_override);
        slr::save_matrix_csv(des_out, x0.x.entries());
        std::cout << "X0 (" << des_n << "x" << des_d << ", V=" << x0.v_rows
                  << ", kappa=" << x0.kappa << ") -> " << des_out << "\n";
        if (!des_response.empty()) {
          slr::Rng rng(des_seed);
          std::vector<int> b(static_cast<std::size_t>(x0.v_rows));
          for (auto& bit : b) bit = static_cast<int>(rng.next_u64() & 1ULL);
          slr::ProbVector p = x0.probs_for_labeling(b);
          Eigen::VectorXd y(p.n());
          for (Eigen::Index i = 0; i < p.n(); ++i) y(i) = rng.bernoulli(p[i]);
          slr::save_response_csv(des_response, y);
          std::cout << "response -> " << des_response << "\n";
        }
      } else if (des_kind == "random") {
        if (des_n <= 0) throw slr::ContractViolation("random needs --n");
        slr::RandomDesignSpec spec{parse_dist(des_dist), des_d, true};
        slr::DesignMatrix x = slr::sample_random_design(spec, des_n, des_seed);
        slr::save_matrix_csv(des_out, x.entries());
        std::cout << "random design (" << des_n << "x" << des_d << ") -> "
                  << des_out << "\n";
      } else {
        throw slr::ContractViolation("unknown design kind '" + des_kind + "'");
      }
      return 0;
    }

    if (app.got_subcommand(kap)) {
      Eigen::MatrixXd m = slr::load_matrix_csv(kap_x);
      slr::DesignMatrix x(std::move(m));
      if (kap_normalize) {
        slr::NormalizedDesign norm = slr::unit_normalize_columns(x);
        x = std::move(norm.x);
      }
      slr::WreParams params{kap_d0, kap_c0};
      slr::KappaEstimate est =
          slr::estimate_kappa_wre(x, params, kap_budget, kap_seed);
      json out;
      out["kappa_estimate"] = est.kappa;
      out["is_estimate"] = est.is_estimate;
      out["sigma_min"] = x.sigma_min();
      std::vector<double> u(est.minimizer.data(),
                            est.minimizer.data() + est.minimizer.size());
      out["minimizer"] = u;
      std::cout << out.dump(2) << std::endl;
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
