// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Each criterion pins its tolerances and budgets in code; pass a list of
// criterion numbers to run a subset (default: all).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "slr/csv_io.hpp"
#include "slr/experiment.hpp"
#include "slr/risk.hpp"
#include "slr/rng.hpp"
#include "slr/selection.hpp"
#include "slr/slope.hpp"
#include "support/oracles.hpp"

using namespace slr;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

const GlmFamily kLogistic = GlmFamily::logistic();

// ------------------------------------------------------------ studies
// shared across criteria 6..9 so each study runs once

ExperimentReport& rate_fixed_study() {
  static ExperimentReport report = [] {
    ExperimentConfig cfg;
    cfg.scenario = Scenario::rate_fixed;
    cfg.n_grid = {100, 200, 400, 800};
    cfg.d_grid = {8};
    cfg.d0_grid = {2};
    cfg.estimators = {EstimatorKind::exhaustive};
    cfg.replicates = 200;
    cfg.seed = 101;
    cfg.penalty_c = 1.0;
    cfg.margin_gamma = 1.0;
    return run_rate_study(cfg);
  }();
  return report;
}

ExperimentReport& margin_study() {
  static ExperimentReport report = [] {
    ExperimentConfig cfg;
    cfg.scenario = Scenario::rate_margin;
    cfg.n_grid = {100, 200, 400, 800};
    cfg.d_grid = {8};
    cfg.d0_grid = {1};
    cfg.h_grid = {0.0, 0.3};
    cfg.estimators = {EstimatorKind::exhaustive};
    cfg.replicates = 200;
    cfg.seed = 102;
    cfg.penalty_c = 1.0;
    cfg.margin_gamma = 1.0;
    return run_margin_study(cfg);
  }();
  return report;
}

ExperimentReport& slope_study() {
  static ExperimentReport report = [] {
    ExperimentConfig cfg;
    cfg.scenario = Scenario::rate_slope;
    cfg.n_grid = {200, 400, 800};
    cfg.d_grid = {32};
    cfg.d0_grid = {2};
    cfg.estimators = {EstimatorKind::slope};
    cfg.replicates = 200;
    cfg.seed = 103;
    cfg.slope_A = 0.4;
    cfg.margin_gamma = 1.0;
    cfg.mc_test = 4000;
    return run_rate_study(cfg);
  }();
  return report;
}

double curve_slope(const ExperimentReport& report, const std::string& needle) {
  for (const auto& cf : report.rate_fits)
    if (cf.curve.find(needle) != std::string::npos) return cf.fit.slope_loglog;
  return std::numeric_limits<double>::quiet_NaN();
}

// -------------------------------------------------------- criterion 1

Outcome criterion1() {
  Rng rng(4001);
  double worst_gap = 0.0;
  for (int rep = 0; rep < 500; ++rep) {
    int d = 1 + static_cast<int>(rng.uniform_int(5));
    Eigen::VectorXd y(d), lam(d);
    for (int j = 0; j < d; ++j) {
      y(j) = rng.uniform(-2.0, 2.0);
      lam(j) = rng.uniform(0.0, 1.5);
    }
    std::sort(lam.data(), lam.data() + d, std::greater<double>());
    double t = rng.uniform(0.0, 2.0);
    Eigen::VectorXd b = prox_sorted_l1(y, lam, t);
    double mine = test::sorted_l1_objective(y, lam, t, b);
    double oracle = test::prox_oracle_best_objective(y, lam, t);
    worst_gap = std::max(worst_gap, std::fabs(mine - oracle));
  }
  if (worst_gap > 1e-6)
    return {false, "prox objective gap " + format_double(worst_gap)};

  int property_violations = 0;
  for (int rep = 0; rep < 10000; ++rep) {
    int d = 2 + static_cast<int>(rng.uniform_int(49));
    Eigen::VectorXd y1(d), y2(d), lam(d);
    for (int j = 0; j < d; ++j) {
      y1(j) = rng.uniform(-3.0, 3.0);
      y2(j) = rng.uniform(-3.0, 3.0);
      lam(j) = rng.uniform(0.0, 1.0);
    }
    std::sort(lam.data(), lam.data() + d, std::greater<double>());
    Eigen::VectorXd p1 = prox_sorted_l1(y1, lam, 1.0);
    Eigen::VectorXd p2 = prox_sorted_l1(y2, lam, 1.0);
    if ((p1 - p2).norm() > (y1 - y2).norm() + 1e-12) ++property_violations;
    for (int a = 1; a < d; ++a) {
      int i = a - 1, j = a;
      if (std::fabs(y1(i)) < std::fabs(y1(j))) std::swap(i, j);
      if (std::fabs(p1(i)) < std::fabs(p1(j)) - 1e-12) ++property_violations;
    }
  }
  if (property_violations > 0)
    return {false, std::to_string(property_violations) + " property violations"};
  return {true, "500 oracle instances, max gap " + format_double(worst_gap) +
                    "; 10000 property draws clean"};
}

// -------------------------------------------------------- criterion 2

Outcome criterion2() {
  Rng rng(4002);
  int done = 0, skipped = 0;
  double worst = -1e300;
  while (done < 200) {
    if (skipped > 2000) return {false, "too many separated draws"};
    int n = 4 + static_cast<int>(rng.uniform_int(9));  // 4..12
    int d = 2 + static_cast<int>(rng.uniform_int(2));  // 2..3
    Eigen::MatrixXd m(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = rng.uniform(-2.0, 2.0);
    Eigen::VectorXd beta(d);
    for (int j = 0; j < d; ++j) beta(j) = rng.uniform(-1.0, 1.0);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = rng.bernoulli(inv_logit(m.row(i).dot(beta)));

    int msize = 1 + static_cast<int>(rng.uniform_int(2));
    std::vector<int> model;
    for (int j = 0; j < d && static_cast<int>(model.size()) < msize; ++j)
      if (rng.bernoulli(0.6)) model.push_back(j);
    if (model.empty()) model.push_back(0);

    DesignMatrix x{m};
    FitResult fit;
    try {
      fit = fit_restricted_mle(kLogistic, x, y, model);
    } catch (const std::exception&) {
      ++skipped;
      continue;
    }
    if (fit.irls.separation_detected) {
      ++skipped;
      continue;
    }
    test::GridOpt grid = test::grid_mle(m, y, model, -8.0, 8.0);
    worst = std::max(worst, grid.loglik - fit.log_lik);
    if (fit.log_lik < grid.loglik - 1e-6)
      return {false, "grid beat IRLS by " + format_double(grid.loglik - fit.log_lik)};
    ++done;
  }

  Eigen::MatrixXd m(4, 1);
  m << -1, -2, 1, 2;
  Eigen::VectorXd y(4);
  y << 0, 0, 1, 1;
  FitResult sep = fit_restricted_mle(kLogistic, DesignMatrix{m}, y, {0});
  if (!sep.irls.separation_detected)
    return {false, "separation detector silent on the canonical instance"};
  return {true, "200 instances, worst oracle margin " + format_double(worst) +
                    "; separation detector fired"};
}

// -------------------------------------------------------- criterion 3

struct BruteBest {
  std::vector<int> model;
  double criterion = std::numeric_limits<double>::infinity();
};

void brute_recurse(const DesignMatrix& x, const Eigen::VectorXd& y,
                   const ComplexityPenalty& pen, int max_size, int next,
                   std::vector<int>& cur, BruteBest& best) {
  FitResult fit;
  bool ok = true;
  try {
    fit = fit_restricted_mle(kLogistic, x, y, cur);
  } catch (const std::exception&) {
    ok = false;
  }
  if (ok) {
    double crit = -fit.log_lik + pen.value(static_cast<int>(cur.size()));
    bool better = crit < best.criterion;
    if (crit == best.criterion) {
      if (cur.size() < best.model.size()) better = true;
      else if (cur.size() == best.model.size() && cur < best.model) better = true;
    }
    if (better) {
      best.criterion = crit;
      best.model = cur;
    }
  }
  if (static_cast<int>(cur.size()) == max_size) return;
  for (int j = next; j < x.d(); ++j) {
    cur.push_back(j);
    brute_recurse(x, y, pen, max_size, j + 1, cur, best);
    cur.pop_back();
  }
}

Outcome criterion3() {
  Rng rng(4003);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 30, d = 6;
    Eigen::MatrixXd m(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
    Eigen::VectorXd theta(n);
    int j1 = static_cast<int>(rng.uniform_int(d));
    int j2 = (j1 + 1 + static_cast<int>(rng.uniform_int(d - 1))) % d;
    for (int i = 0; i < n; ++i) theta(i) = 1.3 * m(i, j1) - 1.1 * m(i, j2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = rng.bernoulli(inv_logit(theta(i)));

    DesignMatrix x{m};
    ComplexityPenalty pen = ComplexityPenalty::fixed_design(2.0, d, x.rank());
    int max_size = std::min(x.rank(), 6);
    SelectionResult sel = select_exhaustive(kLogistic, x, y, pen, max_size);
    BruteBest brute;
    std::vector<int> cur;
    brute_recurse(x, y, pen, max_size, 0, cur, brute);
    if (sel.model != brute.model)
      return {false, "disagreement at instance " + std::to_string(rep)};
  }
  return {true, "100 instances identical to independent enumeration"};
}

// -------------------------------------------------------- criterion 4

Outcome criterion4() {
  for (auto [d0, d] :
       std::vector<std::pair<int, int>>{{1, 4}, {1, 8}, {2, 8}, {2, 16}}) {
    Eigen::MatrixXd w = build_shatter_matrix_W(d0, d);
    if (!verify_shattering(w, d0))
      return {false, "not shattered at d0=" + std::to_string(d0) +
                         ", d=" + std::to_string(d)};
  }
  return {true, "all 2^rows labelings realized for (1,4),(1,8),(2,8),(2,16)"};
}

// -------------------------------------------------------- criterion 5

Outcome criterion5() {
  Rng rng(4005);
  const double c0 = 3.0;
  const double lower = kLogistic.variance_lower_L(c0);
  const double upper = kLogistic.variance_upper_U();
  int violations = 0;
  for (int rep = 0; rep < 10000; ++rep) {
    const int n = 16;
    Eigen::VectorXd t(n), s(n);
    for (int i = 0; i < n; ++i) {
      t(i) = rng.uniform(-c0, c0);
      s(i) = rng.uniform(-c0, c0);
    }
    double kl = glm_kl(kLogistic, t, s);
    double q = (t - s).squaredNorm() / n;
    if (lower / 2.0 * q > kl * (1 + 1e-12) + 1e-15) ++violations;
    if (kl > upper / 2.0 * q * (1 + 1e-12) + 1e-15) ++violations;
  }
  if (violations > 0) return {false, std::to_string(violations) + " violations"};
  return {true, "10000 pairs, zero violations of the L/2, U/2 sandwich"};
}

// -------------------------------------------------------- criterion 6

Outcome criterion6() {
  int total = 0, ok = 0;
  for (const ExperimentReport* report :
       {&rate_fixed_study(), &margin_study(), &slope_study()}) {
    for (const auto& cell : report->cells) {
      if (cell.replicates == 0) continue;
      ++total;
      if (cell.bartlett_ok) ++ok;
    }
  }
  double frac = total > 0 ? static_cast<double>(ok) / total : 0.0;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d/%d cells satisfy excess <= sqrt(2 KL) + 3 se",
                ok, total);
  return {frac >= 0.99, buf};
}

// -------------------------------------------------------- criteria 7-9

Outcome criterion7() {
  double slope = curve_slope(rate_fixed_study(), "exhaustive,d=8,d0=2");
  char buf[96];
  std::snprintf(buf, sizeof buf, "loglog slope %.4f (window [-0.65, -0.35])", slope);
  return {slope >= -0.65 && slope <= -0.35, buf};
}

Outcome criterion8() {
  double s_margin = curve_slope(margin_study(), "h=0.29");
  double s_zero = curve_slope(margin_study(), "h=0,");
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "h=0.3 slope %.4f (window [-1.2, -0.7]); h=0 slope %.4f; gap %.4f",
                s_margin, s_zero, s_zero - s_margin);
  bool pass = s_margin >= -1.2 && s_margin <= -0.7 && (s_zero - s_margin) >= 0.2;
  return {pass, buf};
}

Outcome criterion9() {
  const ExperimentReport& report = slope_study();
  double slope = curve_slope(report, "slope,d=32");
  double lo = 0.0, hi = 0.0, mean = 0.0;
  for (const auto& [key, value] : report.metrics) {
    if (key.rfind("kl_ratio_min", 0) == 0) lo = value;
    if (key.rfind("kl_ratio_max", 0) == 0) hi = value;
    if (key.rfind("kl_ratio_mean", 0) == 0) mean = value;
  }
  bool ratio_ok = mean > 0.0 && lo >= 0.5 * mean && hi <= 1.5 * mean;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "slope %.4f (window [-0.65, -0.35]); KL.n/(d0 ln(2de/d0)) in "
                "[%.4f, %.4f], mean %.4f",
                slope, lo, hi, mean);
  return {slope >= -0.65 && slope <= -0.35 && ratio_ok, buf};
}

// -------------------------------------------------------- criterion 10

Outcome criterion10() {
  // realizability of the hypercube construction at h in {0, 0.3}
  Rng rng(4010);
  for (double h : {0.0, 0.3}) {
    WorstCaseDesign x0 = build_worst_case_X0(2, 8, 40, h);
    double target = std::log((1 + 2 * h) / (1 - 2 * h));
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<int> b(static_cast<std::size_t>(x0.v_rows));
      for (auto& bit : b) bit = static_cast<int>(rng.next_u64() & 1);
      CoefVector beta = x0.beta_for_labeling(b);
      Eigen::VectorXd theta = x0.w * beta.beta;
      for (int i = 0; i < x0.v_rows; ++i) {
        if (std::fabs(std::fabs(theta(i)) - target) > 1e-12)
          return {false, "magnitude mismatch in the X0 construction"};
        if (h > 0.0 && (theta(i) >= 0.0) != (b[static_cast<std::size_t>(i)] == 1))
          return {false, "sign mismatch in the X0 construction"};
      }
    }
  }

  ExperimentConfig cfg;
  cfg.scenario = Scenario::lower_bound_X0;
  cfg.n_grid = {100, 200, 400};
  cfg.d_grid = {8};
  cfg.d0_grid = {2};
  cfg.estimators = {EstimatorKind::forward};
  cfg.replicates = 200;
  cfg.seed = 104;
  cfg.penalty_c = 2.0;
  cfg.margin_gamma = 1.0;
  cfg.signal_theta = 4.0;
  ExperimentReport report = run_lower_bound_study(cfg);
  double paired_min = report.metrics.at("paired_frac_min");
  double x0_slope = curve_slope(report, "x0,");
  bool envelope_ok = report.metrics.at("envelope_ok") == 1.0;
  char buf[192];
  std::snprintf(buf, sizeof buf,
                "realizability exact at h in {0, 0.3}; paired hardness min %.3f "
                "(need >= 0.80); X0 excess slope %.4f, envelope %s",
                paired_min, x0_slope, envelope_ok ? "held" : "broken");
  bool pass = paired_min >= 0.80 && envelope_ok && x0_slope >= -0.65 &&
              x0_slope <= -0.35;
  return {pass, buf};
}

// -------------------------------------------------------- criterion 11

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return "<missing " + p.string() + ">";
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool same_tree(const fs::path& a, const fs::path& b, std::string& why) {
  std::set<std::string> names;
  for (const auto& entry : fs::recursive_directory_iterator(a))
    if (entry.is_regular_file())
      names.insert(fs::relative(entry.path(), a).string());
  for (const auto& entry : fs::recursive_directory_iterator(b))
    if (entry.is_regular_file())
      names.insert(fs::relative(entry.path(), b).string());
  for (const auto& name : names) {
    if (slurp(a / name) != slurp(b / name)) {
      why = name;
      return false;
    }
  }
  return true;
}

Outcome criterion11() {
  ExperimentConfig cfg;
  cfg.scenario = Scenario::rate_fixed;
  cfg.n_grid = {100, 200, 400};
  cfg.d_grid = {8};
  cfg.d0_grid = {2};
  cfg.estimators = {EstimatorKind::exhaustive};
  cfg.replicates = 20;
  cfg.seed = 105;
  cfg.penalty_c = 1.0;

  fs::path base = fs::temp_directory_path() / "slr_acceptance_det";
  fs::remove_all(base);
  cfg.workers = 1;
  emit_report(run_experiment(cfg), (base / "w1").string());
  cfg.workers = 3;
  emit_report(run_experiment(cfg), (base / "w3").string());
  cfg.workers = 1;
  emit_report(run_experiment(cfg), (base / "again").string());

  std::string why;
  if (!same_tree(base / "w1", base / "w3", why))
    return {false, "workers=1 vs workers=3 differ in " + why};
  if (!same_tree(base / "w1", base / "again", why))
    return {false, "rerun differs in " + why};
  return {true, "byte-identical across reruns and worker counts 1/3"};
}

}  // namespace

int main(int argc, char** argv) {
  struct Entry {
    int id;
    const char* name;
    double limit_seconds;
    std::function<Outcome()> run;
  };
  std::vector<Entry> entries = {
      {1, "sorted-l1 prox oracle + properties", 60, criterion1},
      {2, "restricted-MLE grid oracle + separation", 60, criterion2},
      {3, "exhaustive selection vs full enumeration", 120, criterion3},
      {4, "constructive shattering of W", 60, criterion4},
      {5, "KL / quadratic sandwich", 60, criterion5},
      {6, "excess <= sqrt(2 KL) audit over study cells", 600, criterion6},
      {7, "fixed-design excess rate ~ n^{-1/2}", 600, criterion7},
      {8, "margin h=0.3 rate improvement", 600, criterion8},
      {9, "Slope rate and KL ratio stability", 600, criterion9},
      {10, "X0 realizability + paired hardness", 600, criterion10},
      {11, "byte-identical reports", 600, criterion11},
  };

  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& entry : entries) {
    if (!wanted.empty() && wanted.count(entry.id) == 0) continue;
    auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = entry.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    bool in_time = secs <= entry.limit_seconds;
    bool pass = outcome.pass && in_time;
    std::printf("[%s] criterion %2d: %s — %s [%.1f s%s]\n",
                pass ? "PASS" : "FAIL", entry.id, entry.name,
                outcome.detail.c_str(), secs,
                in_time ? "" : ", over the time limit");
    std::fflush(stdout);
    if (!pass) ++failures;
  }
  return failures;
}
