#include "slr/experiment.hpp"

#include <json.hpp>

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "slr/csv_io.hpp"
#include "slr/risk.hpp"
#include "slr/rng.hpp"
#include "slr/selection.hpp"

namespace slr {
namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kMarginCap = 0.45;

// ---------------------------------------------------------------- enums

const std::pair<Scenario, const char*> kScenarioNames[] = {
    {Scenario::rate_fixed, "rate_fixed"},
    {Scenario::rate_margin, "rate_margin"},
    {Scenario::rate_slope, "rate_slope"},
    {Scenario::lower_bound_X0, "lower_bound_X0"},
    {Scenario::random_design_rate, "random_design_rate"},
    {Scenario::csv_benchmark, "csv_benchmark"},
};
const std::pair<EstimatorKind, const char*> kEstimatorNames[] = {
    {EstimatorKind::exhaustive, "exhaustive"},
    {EstimatorKind::forward, "forward"},
    {EstimatorKind::slope, "slope"},
    {EstimatorKind::lasso, "lasso"},
};
const std::pair<Tuning, const char*> kTuningNames[] = {
    {Tuning::theory_constants, "theory_constants"},
    {Tuning::cv5, "cv5"},
};
const std::pair<DesignDistribution, const char*> kDesignNames[] = {
    {DesignDistribution::uniform_ball, "uniform_ball"},
    {DesignDistribution::gaussian_rescaled, "gaussian_rescaled"},
    {DesignDistribution::rademacher_rescaled, "rademacher_rescaled"},
};

template <class E, std::size_t N>
std::string enum_name(const std::pair<E, const char*> (&table)[N], E v) {
  for (const auto& [e, name] : table)
    if (e == v) return name;
  return "?";
}

template <class E, std::size_t N>
E enum_value(const std::pair<E, const char*> (&table)[N], const std::string& s,
             const char* what, long line) {
  for (const auto& [e, name] : table)
    if (s == name) return e;
  throw ParseError(std::string("unknown ") + what + " '" + s + "'", line);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  std::uint64_t sm = master ^ (a * 0x9e3779b97f4a7c15ULL);
  std::uint64_t x = splitmix64(sm);
  sm ^= b * 0xd1342543de82ef95ULL;
  return x ^ splitmix64(sm);
}

// ------------------------------------------------------------- replicates

struct RepRecord {
  bool ok = false;
  double excess = 0.0;
  double kl = 0.0;
  double support = 0.0;
  double bayes_risk = 0.0;
  double excess_benign = kNan;  // lower-bound second arm
  int pair_ge = -1;             // lower-bound pairing; -1 = n/a
  std::string err;
};

template <class Fn>
std::vector<RepRecord> run_replicates(int count, int workers, Fn&& fn) {
  std::vector<RepRecord> out(static_cast<std::size_t>(count));
  workers = std::max(1, workers);
  if (workers == 1) {
    for (int r = 0; r < count; ++r) out[static_cast<std::size_t>(r)] = fn(r);
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&out, &fn, w, count, workers]() {
      for (int r = w; r < count; r += workers)
        out[static_cast<std::size_t>(r)] = fn(r);
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

struct MeanStderr {
  double mean = kNan;
  double se = kNan;
};

MeanStderr mean_stderr(const std::vector<double>& v) {
  if (v.empty()) return {};
  double sum = 0.0;
  for (double x : v) sum += x;
  double mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  double var = v.size() > 1 ? ss / static_cast<double>(v.size() - 1) : 0.0;
  return {mean, std::sqrt(var / static_cast<double>(v.size()))};
}

CellStats aggregate_cell(const CellKey& key, const std::vector<RepRecord>& recs,
                         std::vector<std::string>& notes,
                         bool keep_replicates = false) {
  CellStats cell;
  cell.key = key;
  std::vector<double> excess, kl, support, bayes;
  int pair_total = 0, pair_ge = 0;
  for (const auto& r : recs) {
    if (!r.ok) {
      ++cell.failures;
      if (cell.failures == 1)
        notes.push_back("first failure in cell " + to_string(key.estimator) +
                        " n=" + std::to_string(key.n) + ": " + r.err);
      continue;
    }
    excess.push_back(r.excess);
    kl.push_back(r.kl);
    support.push_back(r.support);
    bayes.push_back(r.bayes_risk);
    if (r.pair_ge >= 0) {
      ++pair_total;
      pair_ge += r.pair_ge;
    }
  }
  if (keep_replicates) {
    cell.rep_excess = excess;
    cell.rep_kl = kl;
  }
  cell.replicates = static_cast<int>(excess.size());
  cell.flagged = cell.failures * 10 > static_cast<int>(recs.size());
  MeanStderr me = mean_stderr(excess);
  cell.mean_excess = me.mean;
  cell.stderr_excess = me.se;
  MeanStderr mk = mean_stderr(kl);
  cell.mean_kl = mk.mean;
  cell.stderr_kl = mk.se;
  cell.mean_support = mean_stderr(support).mean;
  cell.mean_bayes_risk = mean_stderr(bayes).mean;
  cell.bartlett_ok =
      cell.mean_excess <= std::sqrt(2.0 * cell.mean_kl) + 3.0 * cell.stderr_excess;
  if (pair_total > 0)
    cell.paired_frac = static_cast<double>(pair_ge) / static_cast<double>(pair_total);
  return cell;
}

// curve identity: everything but n
std::string curve_id(const CellKey& key) {
  std::ostringstream os;
  os << "excess[";
  if (!key.arm.empty()) os << key.arm << ",";
  os << to_string(key.estimator) << ",d=" << key.d << ",d0=" << key.d0
     << ",h=" << format_double(key.h) << ",alpha=" << format_double(key.alpha)
     << "]";
  return os.str();
}

void finalize_rate_fits(ExperimentReport& report) {
  std::map<std::string, std::vector<std::pair<int, double>>> curves;
  for (const auto& cell : report.cells) {
    if (cell.replicates == 0) continue;
    curves[curve_id(cell.key)].push_back({cell.key.n, cell.mean_excess});
  }
  for (auto& [curve, pts] : curves) {
    std::sort(pts.begin(), pts.end());
    std::vector<double> nv, yv;
    for (auto& [n, y] : pts) {
      nv.push_back(n);
      yv.push_back(y);
    }
    report.rate_fits.push_back({curve, fit_rate(nv, yv)});
  }
  int total = 0, ok = 0;
  for (const auto& cell : report.cells) {
    if (cell.replicates == 0) continue;
    ++total;
    if (cell.bartlett_ok) ++ok;
  }
  if (total > 0)
    report.metrics["bartlett_cell_fraction"] =
        static_cast<double>(ok) / static_cast<double>(total);
}

int shatter_rows(int d0, int d) {
  return static_cast<int>(build_shatter_matrix_W(d0, d).rows());
}

double critical_margin(double gamma, int v, int n) {
  if (gamma <= 0.0) return 0.0;
  return std::min(kMarginCap, gamma * std::sqrt((v - 1) / (18.0 * n)));
}

Eigen::VectorXd draw_response(const ProbVector& p, Rng& rng) {
  Eigen::VectorXd y(p.n());
  for (Eigen::Index i = 0; i < p.n(); ++i) y(i) = rng.bernoulli(p[i]);
  return y;
}

// fitted probabilities are clamped so diverged fits record a finite KL
double recorded_kl(const ProbVector& p, const Eigen::VectorXd& theta_hat) {
  ProbVector p_hat = inv_logit(theta_hat).clamped(1e-12);
  return kl_divergence(p, p_hat);
}

double penalty_c_for(const ExperimentConfig& cfg, double h_eff) {
  if (cfg.penalty_c) return *cfg.penalty_c;
  double delta_eff = std::max(cfg.delta, 0.5 - h_eff);
  return default_c(delta_eff);
}

double tuning_value_for(const ExperimentConfig& cfg, EstimatorKind kind,
                        double h_eff) {
  switch (kind) {
    case EstimatorKind::exhaustive:
    case EstimatorKind::forward:
      return penalty_c_for(cfg, h_eff);
    case EstimatorKind::slope:
      return cfg.slope_A;
    case EstimatorKind::lasso:
      return cfg.lasso_lambda;
  }
  return 1.0;
}

double excess_on(const DesignMatrix& x, const ProbVector& p,
                 const CoefVector& fitted, const CoefVector& truth) {
  LinearClassifier clf{fitted};
  LinearClassifier bayes{truth};
  return excess_risk_fixed(clf, x, p, bayes);
}

struct FixedEnsemble {
  int v = 0;
  double h_eff = 0.0;
  int kappa = 0;
};

// Margin h = 0 runs at the critical scale gamma*sqrt((V-1)/18n) with rows
// spread evenly; explicit h uses the lower-bound construction's kappa.
FixedEnsemble fixed_ensemble(const ExperimentConfig& cfg, int d0, int d, int n,
                             double h_requested) {
  FixedEnsemble e;
  e.v = shatter_rows(d0, d);
  if (e.v > n)
    throw ContractViolation("ensemble: V = " + std::to_string(e.v) +
                            " exceeds n = " + std::to_string(n));
  e.h_eff = std::max(h_requested, critical_margin(cfg.margin_gamma, e.v, n));
  const int kappa_max = n / (e.v - 1);
  if (h_requested > 1.0 / 6.0) {
    e.kappa = 1;
  } else if (h_requested > 0.0 && e.h_eff > 0.0) {
    e.kappa = std::clamp(static_cast<int>(1.0 / (18.0 * e.h_eff * e.h_eff)), 1,
                         kappa_max);
  } else {
    e.kappa = kappa_max;
  }
  return e;
}

CoefVector sparse_direction(int d, int d0) {
  Eigen::VectorXd dir = Eigen::VectorXd::Zero(d);
  for (int j = 0; j < d0; ++j) dir(j) = 1.0 / std::sqrt(static_cast<double>(d0));
  return CoefVector(std::move(dir));
}

// one fixed-design (X0 ensemble) cell
std::vector<RepRecord> run_fixed_cell(const ExperimentConfig& cfg,
                                      EstimatorKind est, int d0, int d, int n,
                                      double h_requested,
                                      std::uint64_t cell_stream) {
  FixedEnsemble ens = fixed_ensemble(cfg, d0, d, n, h_requested);
  WorstCaseDesign x0 = build_worst_case_X0(d0, d, n, ens.h_eff, ens.kappa);
  const double tval = tuning_value_for(cfg, est, ens.h_eff);

  return run_replicates(cfg.replicates, cfg.workers, [&](int rep) {
    RepRecord rec;
    try {
      Rng rng = Rng::child(cfg.seed, cell_stream, static_cast<std::uint64_t>(rep));
      std::vector<int> b(static_cast<std::size_t>(x0.v_rows));
      for (auto& bit : b) bit = static_cast<int>(rng.next_u64() & 1ULL);
      CoefVector beta_true = x0.beta_for_labeling(b);
      ProbVector p = x0.probs_for_labeling(b);
      Eigen::VectorXd y = draw_response(p, rng);
      EstimatorRun er = apply_estimator(est, x0.x, y, cfg, tval);
      Eigen::VectorXd theta_hat = linear_predictor(x0.x, er.fit.coef);
      rec.excess = excess_on(x0.x, p, er.fit.coef, beta_true);
      rec.kl = recorded_kl(p, theta_hat);
      rec.support = er.fit.coef.l0();
      rec.bayes_risk = bayes_risk_fixed(x0.x, p);
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.err = e.what();
    }
    return rec;
  });
}

// one margin-warped random-design cell; excess evaluated on a shared fresh
// test sample from the same law
std::vector<RepRecord> run_warped_cell(const ExperimentConfig& cfg,
                                       EstimatorKind est, int d0, int d, int n,
                                       double alpha, double h_star,
                                       std::uint64_t cell_stream) {
  RandomDesignSpec spec{cfg.design, d, true};
  CoefVector beta_true = sparse_direction(d, d0);
  DesignMatrix x_test = sample_margin_warped_design(
      spec, cfg.mc_test, beta_true, alpha, h_star,
      derive_seed(cfg.seed, cell_stream, 0x7e57ULL));
  ProbVector p_test = inv_logit(linear_predictor(x_test, beta_true));
  const double tval = tuning_value_for(cfg, est, h_star);

  return run_replicates(cfg.replicates, cfg.workers, [&](int rep) {
    RepRecord rec;
    try {
      Rng rng = Rng::child(cfg.seed, cell_stream, static_cast<std::uint64_t>(rep));
      DesignMatrix x =
          sample_margin_warped_design(spec, n, beta_true, alpha, h_star,
                                      rng.next_u64());
      ProbVector p = inv_logit(linear_predictor(x, beta_true));
      Eigen::VectorXd y = draw_response(p, rng);
      EstimatorRun er =
          apply_estimator(est, x, y, cfg, tval, PenaltyKind::random_design);
      Eigen::VectorXd theta_hat = linear_predictor(x, er.fit.coef);
      rec.excess = excess_on(x_test, p_test, er.fit.coef, beta_true);
      rec.kl = recorded_kl(p, theta_hat);
      rec.support = er.fit.coef.l0();
      rec.bayes_risk = bayes_risk_fixed(x, p);
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.err = e.what();
    }
    return rec;
  });
}

}  // namespace

// ------------------------------------------------------------------ api

std::string to_string(Scenario s) { return enum_name(kScenarioNames, s); }
std::string to_string(EstimatorKind e) { return enum_name(kEstimatorNames, e); }
std::string to_string(Tuning t) { return enum_name(kTuningNames, t); }

RateFit fit_rate(const std::vector<double>& n_values,
                 const std::vector<double>& y_values) {
  RateFit out;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < n_values.size() && i < y_values.size(); ++i) {
    if (n_values[i] > 0.0 && y_values[i] > 0.0 && std::isfinite(y_values[i])) {
      lx.push_back(std::log(n_values[i]));
      ly.push_back(std::log(y_values[i]));
    }
  }
  const int m = static_cast<int>(lx.size());
  out.points = m;
  if (m < 3) return out;

  double mx = 0.0, my = 0.0;
  for (int i = 0; i < m; ++i) {
    mx += lx[static_cast<std::size_t>(i)];
    my += ly[static_cast<std::size_t>(i)];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int i = 0; i < m; ++i) {
    double dx = lx[static_cast<std::size_t>(i)] - mx;
    double dy = ly[static_cast<std::size_t>(i)] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 0.0) return out;
  out.slope_loglog = sxy / sxx;
  double ss_res = std::max(0.0, syy - sxy * sxy / sxx);
  out.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  double sigma2 = m > 2 ? ss_res / (m - 2) : 0.0;
  out.stderr_ = std::sqrt(sigma2 / sxx);
  return out;
}

EstimatorRun apply_estimator(EstimatorKind kind, const DesignMatrix& x,
                             const Eigen::VectorXd& y,
                             const ExperimentConfig& cfg, double tuning_value,
                             PenaltyKind penalty_kind) {
  EstimatorRun run;
  const int d = static_cast<int>(x.d());
  switch (kind) {
    case EstimatorKind::exhaustive:
    case EstimatorKind::forward: {
      ComplexityPenalty pen =
          penalty_kind == PenaltyKind::fixed_design
              ? ComplexityPenalty::fixed_design(tuning_value, d, x.rank())
              : ComplexityPenalty::random_design(tuning_value, d,
                                                 static_cast<int>(x.n()));
      int max_size =
          std::max(0, std::min({pen.cap, static_cast<int>(x.n()) / 2, 50}));
      SelectionResult sel;
      if (kind == EstimatorKind::exhaustive && d <= 20 && max_size <= 8) {
        sel = select_exhaustive(GlmFamily::logistic(), x, y, pen, max_size);
      } else {
        if (kind == EstimatorKind::exhaustive)
          run.note = "exhaustive downgraded to forward (d > 20 or max_size > 8)";
        sel = select_forward(GlmFamily::logistic(), x, y, pen, max_size);
      }
      run.fit = std::move(sel.fit);
      break;
    }
    case EstimatorKind::slope:
    case EstimatorKind::lasso: {
      NormalizedDesign norm = unit_normalize_columns(x);
      SolverConfig scfg;
      scfg.max_iter = 5000;
      scfg.obj_tol = 1e-9;
      FitResult fit;
      if (kind == EstimatorKind::slope) {
        LambdaSchedule sched =
            build_schedule(ScheduleKind::slope_logistic, d, tuning_value, cfg.c0,
                           GlmFamily::logistic());
        fit = fit_slope(GlmFamily::logistic(), norm.x, y, sched, scfg);
      } else {
        fit = fit_lasso(GlmFamily::logistic(), norm.x, y, tuning_value, scfg);
      }
      fit.coef = norm.map_back(fit.coef);
      run.fit = std::move(fit);
      break;
    }
  }
  return run;
}

ExperimentReport run_rate_study(const ExperimentConfig& cfg) {
  if (cfg.scenario != Scenario::rate_fixed && cfg.scenario != Scenario::rate_slope)
    throw ContractViolation(
        "run_rate_study: scenario must be rate_fixed or rate_slope");
  if (cfg.estimators.empty())
    throw ContractViolation("run_rate_study: estimators must be nonempty");
  if (cfg.replicates < 1) throw ContractViolation("replicates >= 1 required");

  ExperimentReport report;
  report.scenario = to_string(cfg.scenario);
  report.seed = cfg.seed;

  const bool random_design = cfg.scenario == Scenario::rate_slope;
  std::uint64_t cell_stream = 0;

  for (EstimatorKind est : cfg.estimators)
    for (int d : cfg.d_grid)
      for (int d0 : cfg.d0_grid)
        for (int n : cfg.n_grid) {
          ++cell_stream;
          CellKey key{"", est, n, d, d0, 0.0, random_design ? 1.0 : 0.0};
          std::vector<RepRecord> recs;
          if (random_design) {
            int v = shatter_rows(d0, d);
            double h_star = critical_margin(cfg.margin_gamma, v, n);
            recs = run_warped_cell(cfg, est, d0, d, n, 1.0, h_star, cell_stream);
          } else {
            recs = run_fixed_cell(cfg, est, d0, d, n, 0.0, cell_stream);
          }
          report.cells.push_back(
              aggregate_cell(key, recs, report.notes, cfg.emit_replicates));
        }

  finalize_rate_fits(report);

  if (random_design) {
    std::map<std::string, std::vector<double>> ratios;
    for (const auto& cell : report.cells) {
      if (cell.replicates == 0 || !(cell.mean_kl > 0.0)) continue;
      double denom =
          cell.key.d0 * std::log(2.0 * cell.key.d * std::exp(1.0) / cell.key.d0);
      ratios[curve_id(cell.key)].push_back(cell.mean_kl * cell.key.n / denom);
    }
    for (const auto& [curve, vals] : ratios) {
      double lo = *std::min_element(vals.begin(), vals.end());
      double hi = *std::max_element(vals.begin(), vals.end());
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      report.metrics["kl_ratio_mean " + curve] = mean;
      report.metrics["kl_ratio_min " + curve] = lo;
      report.metrics["kl_ratio_max " + curve] = hi;
    }
  }
  return report;
}

ExperimentReport run_margin_study(const ExperimentConfig& cfg) {
  if (cfg.scenario != Scenario::rate_margin &&
      cfg.scenario != Scenario::random_design_rate)
    throw ContractViolation(
        "run_margin_study: scenario must be rate_margin or random_design_rate");
  if (cfg.estimators.empty())
    throw ContractViolation("run_margin_study: estimators must be nonempty");
  if (cfg.replicates < 1) throw ContractViolation("replicates >= 1 required");

  ExperimentReport report;
  report.scenario = to_string(cfg.scenario);
  report.seed = cfg.seed;

  const bool fixed_design = cfg.scenario == Scenario::rate_margin;
  std::uint64_t cell_stream = 0;

  if (fixed_design) {
    for (EstimatorKind est : cfg.estimators)
      for (int d : cfg.d_grid)
        for (int d0 : cfg.d0_grid)
          for (double h : cfg.h_grid)
            for (int n : cfg.n_grid) {
              ++cell_stream;
              CellKey key{"", est, n, d, d0, h, 0.0};
              auto recs = run_fixed_cell(cfg, est, d0, d, n, h, cell_stream);
              report.cells.push_back(
                  aggregate_cell(key, recs, report.notes, cfg.emit_replicates));
            }
  } else {
    std::vector<double> alphas =
        cfg.alpha_grid.empty() ? std::vector<double>{1.0} : cfg.alpha_grid;
    for (EstimatorKind est : cfg.estimators)
      for (int d : cfg.d_grid)
        for (int d0 : cfg.d0_grid)
          for (double alpha : alphas)
            for (int n : cfg.n_grid) {
              ++cell_stream;
              CellKey key{"", est, n, d, d0, cfg.h_star, alpha};
              auto recs = run_warped_cell(cfg, est, d0, d, n, alpha, cfg.h_star,
                                          cell_stream);
              report.cells.push_back(
                  aggregate_cell(key, recs, report.notes, cfg.emit_replicates));
            }
  }

  finalize_rate_fits(report);

  if (fixed_design) {
    // smallest h whose fitted slope has moved toward the 1/(nh) branch
    double transition = kNan;
    std::vector<std::pair<double, double>> by_h;  // (h, slope)
    for (const auto& cf : report.rate_fits) {
      // recover h from the curve of some cell with matching id
      for (const auto& cell : report.cells) {
        if (curve_id(cell.key) == cf.curve) {
          by_h.push_back({cell.key.h, cf.fit.slope_loglog});
          break;
        }
      }
    }
    std::sort(by_h.begin(), by_h.end());
    for (const auto& [h, slope] : by_h) {
      if (std::isfinite(slope) && slope <= -0.75) {
        transition = h;
        break;
      }
    }
    report.metrics["transition_h"] = transition;
  }
  return report;
}

ExperimentReport run_lower_bound_study(const ExperimentConfig& cfg) {
  if (cfg.scenario != Scenario::lower_bound_X0)
    throw ContractViolation("run_lower_bound_study: scenario must be lower_bound_X0");
  if (cfg.estimators.empty())
    throw ContractViolation("run_lower_bound_study: estimators must be nonempty");
  if (cfg.replicates < 1) throw ContractViolation("replicates >= 1 required");

  ExperimentReport report;
  report.scenario = to_string(cfg.scenario);
  report.seed = cfg.seed;

  std::uint64_t cell_stream = 0;
  for (EstimatorKind est : cfg.estimators)
    for (int d : cfg.d_grid)
      for (int d0 : cfg.d0_grid)
        for (int n : cfg.n_grid) {
          ++cell_stream;
          FixedEnsemble ens = fixed_ensemble(cfg, d0, d, n, 0.0);
          WorstCaseDesign x0 = build_worst_case_X0(d0, d, n, ens.h_eff, ens.kappa);
          const double tval_x0 = tuning_value_for(cfg, est, ens.h_eff);
          const double tval_benign = tuning_value_for(cfg, est, 0.0);

          auto recs = run_replicates(cfg.replicates, cfg.workers, [&](int rep) {
            RepRecord rec;
            try {
              Rng rng =
                  Rng::child(cfg.seed, cell_stream, static_cast<std::uint64_t>(rep));

              // adversarial arm
              std::vector<int> b(static_cast<std::size_t>(x0.v_rows));
              for (auto& bit : b) bit = static_cast<int>(rng.next_u64() & 1ULL);
              CoefVector beta_x0 = x0.beta_for_labeling(b);
              ProbVector p_x0 = x0.probs_for_labeling(b);
              Eigen::VectorXd y_x0 = draw_response(p_x0, rng);
              EstimatorRun er_x0 = apply_estimator(est, x0.x, y_x0, cfg, tval_x0);
              double excess_x0 = excess_on(x0.x, p_x0, er_x0.fit.coef, beta_x0);

              // benign arm: orthonormal columns, planted strong signal
              Eigen::MatrixXd g(n, d);
              for (int i = 0; i < n; ++i)
                for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
              Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
              Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, d);
              DesignMatrix xb(std::move(q));

              Eigen::VectorXd beta_raw = Eigen::VectorXd::Zero(d);
              std::vector<int> idx(static_cast<std::size_t>(d));
              for (int j = 0; j < d; ++j) idx[static_cast<std::size_t>(j)] = j;
              for (int j = 0; j < d0; ++j) {
                int pick = j + static_cast<int>(rng.uniform_int(
                                   static_cast<std::uint64_t>(d - j)));
                std::swap(idx[static_cast<std::size_t>(j)],
                          idx[static_cast<std::size_t>(pick)]);
                beta_raw(idx[static_cast<std::size_t>(j)]) = rng.sign();
              }
              CoefVector beta_b(beta_raw);
              Eigen::VectorXd theta_b = linear_predictor(xb, beta_b);
              double peak = theta_b.cwiseAbs().maxCoeff();
              if (peak > 0.0) {
                beta_raw *= cfg.signal_theta / peak;
                beta_b = CoefVector(beta_raw);
                theta_b = linear_predictor(xb, beta_b);
              }
              ProbVector p_b = inv_logit(theta_b);
              Eigen::VectorXd y_b = draw_response(p_b, rng);
              EstimatorRun er_b = apply_estimator(est, xb, y_b, cfg, tval_benign);
              double excess_b = excess_on(xb, p_b, er_b.fit.coef, beta_b);

              rec.excess = excess_x0;
              rec.kl = recorded_kl(p_x0, linear_predictor(x0.x, er_x0.fit.coef));
              rec.support = er_x0.fit.coef.l0();
              rec.bayes_risk = bayes_risk_fixed(x0.x, p_x0);
              rec.excess_benign = excess_b;
              rec.pair_ge = excess_x0 >= excess_b ? 1 : 0;
              rec.ok = true;
            } catch (const std::exception& e) {
              rec.ok = false;
              rec.err = e.what();
            }
            return rec;
          });

          CellKey key_x0{"x0", est, n, d, d0, 0.0, 0.0};
          report.cells.push_back(
              aggregate_cell(key_x0, recs, report.notes, cfg.emit_replicates));

          std::vector<RepRecord> benign;
          for (const auto& r : recs) {
            if (!r.ok) {
              benign.push_back(r);
              continue;
            }
            RepRecord rb;
            rb.ok = true;
            rb.excess = r.excess_benign;
            rb.kl = kNan;  // not recorded on the benign arm
            benign.push_back(rb);
          }
          CellKey key_b{"benign", est, n, d, d0, 0.0, 0.0};
          CellStats cb =
              aggregate_cell(key_b, benign, report.notes, cfg.emit_replicates);
          cb.mean_kl = kNan;
          cb.stderr_kl = kNan;
          cb.mean_support = kNan;
          cb.mean_bayes_risk = kNan;
          cb.bartlett_ok = true;
          report.cells.push_back(cb);
        }

  finalize_rate_fits(report);

  // lower-envelope check, constant calibrated on the smallest x0 cell
  double fit_const = kNan;
  bool envelope_ok = true;
  double paired_min = 1.0;
  std::map<std::string, std::vector<const CellStats*>> x0_curves;
  for (const auto& cell : report.cells)
    if (cell.key.arm == "x0" && cell.replicates > 0)
      x0_curves[curve_id(cell.key)].push_back(&cell);
  for (auto& [curve, cells] : x0_curves) {
    std::sort(cells.begin(), cells.end(),
              [](const CellStats* a, const CellStats* b) {
                return a->key.n < b->key.n;
              });
    auto rate = [](const CellStats& c) {
      return std::sqrt(c.key.d0 *
                       std::log(c.key.d * std::exp(1.0) / c.key.d0) /
                       static_cast<double>(c.key.n));
    };
    double fc = cells.front()->mean_excess / rate(*cells.front());
    fit_const = fc;
    for (const CellStats* c : cells) {
      if (c->mean_excess < 0.5 * fc * rate(*c)) envelope_ok = false;
      if (c->paired_frac == c->paired_frac)  // not NaN
        paired_min = std::min(paired_min, c->paired_frac);
    }
  }
  report.metrics["envelope_fit_const"] = fit_const;
  report.metrics["envelope_ok"] = envelope_ok ? 1.0 : 0.0;
  report.metrics["paired_frac_min"] = paired_min;
  return report;
}

ExperimentReport run_csv_benchmark(const ExperimentConfig& cfg) {
  if (cfg.scenario != Scenario::csv_benchmark)
    throw ContractViolation("run_csv_benchmark: scenario must be csv_benchmark");
  if (cfg.csv_x.empty() || cfg.csv_y.empty())
    throw ContractViolation("run_csv_benchmark: csv_x and csv_y paths required");

  auto [x_all, y_all] = load_csv_dataset(cfg.csv_x, cfg.csv_y, false);
  const int n = static_cast<int>(x_all.n());
  if (n < 20) throw ContractViolation("run_csv_benchmark: need at least 20 rows");

  ExperimentReport report;
  report.scenario = to_string(cfg.scenario);
  report.seed = cfg.seed;
  report.notes.push_back(
      "csv_benchmark: excess column holds raw test misclassification "
      "(true model unknown)");

  // stratified 70/30 split
  Rng rng(cfg.seed);
  std::vector<int> idx0, idx1;
  for (int i = 0; i < n; ++i) (y_all(i) == 1.0 ? idx1 : idx0).push_back(i);
  auto shuffle = [&rng](std::vector<int>& v) {
    for (std::size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[rng.uniform_int(i)]);
  };
  shuffle(idx0);
  shuffle(idx1);
  std::vector<int> train, test;
  for (std::size_t i = 0; i < idx0.size(); ++i)
    (i % 10 < 7 ? train : test).push_back(idx0[i]);
  for (std::size_t i = 0; i < idx1.size(); ++i)
    (i % 10 < 7 ? train : test).push_back(idx1[i]);
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());

  auto take = [&](const std::vector<int>& rows) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), x_all.d());
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      m.row(static_cast<Eigen::Index>(i)) = x_all.entries().row(rows[i]);
      y(static_cast<Eigen::Index>(i)) = y_all(rows[i]);
    }
    return std::make_pair(DesignMatrix(std::move(m)), std::move(y));
  };
  auto [x_train, y_train] = take(train);
  auto [x_test, y_test] = take(test);

  for (EstimatorKind est : cfg.estimators) {
    double tuning;
    if (cfg.tuning == Tuning::cv5) {
      std::vector<double> grid;
      if (est == EstimatorKind::slope || est == EstimatorKind::lasso)
        grid = {0.05, 0.1, 0.2, 0.4, 0.8, 1.6};
      else
        grid = {0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
      CvResult cv = cross_validate(x_train, y_train, est, grid, cfg,
                                   derive_seed(cfg.seed, 0xc5, 0));
      tuning = cv.chosen;
      report.metrics["chosen_tuning " + to_string(est)] = cv.chosen;
      report.metrics["cv_skipped_folds " + to_string(est)] = cv.skipped_folds;
    } else {
      tuning = tuning_value_for(cfg, est, 0.0);
    }

    EstimatorRun er = apply_estimator(est, x_train, y_train, cfg, tuning);
    Eigen::VectorXi pred = classify(LinearClassifier{er.fit.coef}, x_test);
    int wrong = 0;
    for (Eigen::Index i = 0; i < y_test.size(); ++i)
      if (pred(i) != static_cast<int>(y_test(i))) ++wrong;
    double err = static_cast<double>(wrong) / static_cast<double>(y_test.size());

    CellKey key{"test", est, static_cast<int>(x_train.n()),
                static_cast<int>(x_all.d()), 0, 0.0, 0.0};
    CellStats cell;
    cell.key = key;
    cell.replicates = static_cast<int>(y_test.size());
    cell.mean_excess = err;
    cell.stderr_excess = std::sqrt(err * (1.0 - err) /
                                   static_cast<double>(y_test.size()));
    cell.mean_kl = kNan;
    cell.stderr_kl = kNan;
    cell.mean_support = er.fit.coef.l0();
    cell.mean_bayes_risk = kNan;
    cell.bartlett_ok = true;
    report.cells.push_back(cell);
    if (!er.note.empty()) report.notes.push_back(er.note);
  }
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.scenario) {
    case Scenario::rate_fixed:
    case Scenario::rate_slope:
      return run_rate_study(cfg);
    case Scenario::rate_margin:
    case Scenario::random_design_rate:
      return run_margin_study(cfg);
    case Scenario::lower_bound_X0:
      return run_lower_bound_study(cfg);
    case Scenario::csv_benchmark:
      return run_csv_benchmark(cfg);
  }
  throw ContractViolation("run_experiment: unknown scenario");
}

CvResult cross_validate(const DesignMatrix& x, const Eigen::VectorXd& y,
                        EstimatorKind estimator, const std::vector<double>& grid,
                        const ExperimentConfig& cfg, std::uint64_t seed) {
  if (x.n() < 10) throw ContractViolation("cross_validate: n >= 10 required");
  if (grid.empty()) throw ContractViolation("cross_validate: grid must be nonempty");

  CvResult out;
  out.candidate_grid = grid;
  std::sort(out.candidate_grid.begin(), out.candidate_grid.end());

  const int n = static_cast<int>(x.n());
  const int folds = out.folds;

  // stratified fold assignment, seeded
  Rng rng(seed);
  std::vector<int> idx0, idx1;
  for (int i = 0; i < n; ++i) (y(i) == 1.0 ? idx1 : idx0).push_back(i);
  auto shuffle = [&rng](std::vector<int>& v) {
    for (std::size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[rng.uniform_int(i)]);
  };
  shuffle(idx0);
  shuffle(idx1);
  std::vector<int> fold_of(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < idx0.size(); ++i)
    fold_of[static_cast<std::size_t>(idx0[i])] = static_cast<int>(i) % folds;
  for (std::size_t i = 0; i < idx1.size(); ++i)
    fold_of[static_cast<std::size_t>(idx1[i])] = static_cast<int>(i) % folds;

  struct Fold {
    DesignMatrix x_train;
    Eigen::VectorXd y_train;
    DesignMatrix x_val;
    Eigen::VectorXd y_val;
    bool usable;
  };
  std::vector<Fold> prepared;
  for (int f = 0; f < folds; ++f) {
    std::vector<int> tr, va;
    for (int i = 0; i < n; ++i)
      (fold_of[static_cast<std::size_t>(i)] == f ? va : tr).push_back(i);
    Eigen::MatrixXd xt(static_cast<Eigen::Index>(tr.size()), x.d());
    Eigen::VectorXd yt(static_cast<Eigen::Index>(tr.size()));
    for (std::size_t i = 0; i < tr.size(); ++i) {
      xt.row(static_cast<Eigen::Index>(i)) = x.entries().row(tr[i]);
      yt(static_cast<Eigen::Index>(i)) = y(tr[i]);
    }
    Eigen::MatrixXd xv(static_cast<Eigen::Index>(va.size()), x.d());
    Eigen::VectorXd yv(static_cast<Eigen::Index>(va.size()));
    for (std::size_t i = 0; i < va.size(); ++i) {
      xv.row(static_cast<Eigen::Index>(i)) = x.entries().row(va[i]);
      yv(static_cast<Eigen::Index>(i)) = y(va[i]);
    }
    bool single_class =
        yt.size() == 0 || yt.minCoeff() == yt.maxCoeff() || yv.size() == 0;
    if (single_class) ++out.skipped_folds;
    prepared.push_back({DesignMatrix(single_class ? Eigen::MatrixXd::Identity(1, 1)
                                                  : std::move(xt)),
                        std::move(yt),
                        DesignMatrix(yv.size() == 0 ? Eigen::MatrixXd::Identity(1, 1)
                                                    : std::move(xv)),
                        std::move(yv), !single_class});
  }

  out.cv_error_curve.assign(out.candidate_grid.size(), kNan);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < out.candidate_grid.size(); ++c) {
    double cand = out.candidate_grid[c];
    double err_sum = 0.0;
    long err_count = 0;
    for (const Fold& fold : prepared) {
      if (!fold.usable) continue;
      int wrong = 0;
      try {
        EstimatorRun er =
            apply_estimator(estimator, fold.x_train, fold.y_train, cfg, cand);
        Eigen::VectorXi pred = classify(LinearClassifier{er.fit.coef}, fold.x_val);
        for (Eigen::Index i = 0; i < fold.y_val.size(); ++i)
          if (pred(i) != static_cast<int>(fold.y_val(i))) ++wrong;
      } catch (const std::exception&) {
        wrong = static_cast<int>(fold.y_val.size());  // failed fit scores worst
      }
      err_sum += static_cast<double>(wrong);
      err_count += fold.y_val.size();
    }
    if (err_count == 0)
      throw ContractViolation("cross_validate: no usable folds");
    double err = err_sum / static_cast<double>(err_count);
    out.cv_error_curve[c] = err;
    if (err < best) {
      best = err;
      out.chosen = cand;
    }
  }
  return out;
}

// ----------------------------------------------------------------- config

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  long lineno = 0;
  std::vector<std::string> seen;

  auto split_list = [](const std::string& s) {
    std::vector<std::string> items;
    std::string cur;
    for (char ch : s) {
      if (ch == ',') {
        items.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    items.push_back(cur);
    for (auto& item : items) {
      std::size_t a = item.find_first_not_of(" \t");
      std::size_t b = item.find_last_not_of(" \t");
      item = a == std::string::npos ? "" : item.substr(a, b - a + 1);
    }
    return items;
  };
  auto to_int = [](const std::string& s, long lineno_) {
    try {
      std::size_t pos = 0;
      long v = std::stol(s, &pos);
      if (pos != s.size()) throw std::invalid_argument("trailing");
      return static_cast<int>(v);
    } catch (const std::exception&) {
      throw ParseError("expected integer, got '" + s + "'", lineno_);
    }
  };
  auto to_dbl = [](const std::string& s, long lineno_) {
    try {
      if (s == "inf") return std::numeric_limits<double>::infinity();
      std::size_t pos = 0;
      double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ParseError("expected number, got '" + s + "'", lineno_);
    }
  };

  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      std::size_t x = s.find_first_not_of(" \t\r");
      std::size_t y = s.find_last_not_of(" \t\r");
      s = x == std::string::npos ? "" : s.substr(x, y - x + 1);
    };
    trim(key);
    trim(val);
    if (key.empty()) throw ParseError("empty key", lineno);
    if (std::find(seen.begin(), seen.end(), key) != seen.end())
      throw ParseError("duplicate key '" + key + "'", lineno);
    seen.push_back(key);

    if (key == "scenario") {
      cfg.scenario = enum_value(kScenarioNames, val, "scenario", lineno);
    } else if (key == "n") {
      cfg.n_grid.clear();
      for (const auto& s : split_list(val)) cfg.n_grid.push_back(to_int(s, lineno));
    } else if (key == "d") {
      cfg.d_grid.clear();
      for (const auto& s : split_list(val)) cfg.d_grid.push_back(to_int(s, lineno));
    } else if (key == "d0") {
      cfg.d0_grid.clear();
      for (const auto& s : split_list(val)) cfg.d0_grid.push_back(to_int(s, lineno));
    } else if (key == "h") {
      cfg.h_grid.clear();
      for (const auto& s : split_list(val)) cfg.h_grid.push_back(to_dbl(s, lineno));
    } else if (key == "alpha") {
      cfg.alpha_grid.clear();
      for (const auto& s : split_list(val))
        cfg.alpha_grid.push_back(to_dbl(s, lineno));
    } else if (key == "estimators") {
      cfg.estimators.clear();
      for (const auto& s : split_list(val))
        cfg.estimators.push_back(enum_value(kEstimatorNames, s, "estimator", lineno));
    } else if (key == "replicates") {
      cfg.replicates = to_int(val, lineno);
    } else if (key == "seed") {
      try {
        cfg.seed = std::stoull(val);
      } catch (const std::exception&) {
        throw ParseError("expected integer seed, got '" + val + "'", lineno);
      }
    } else if (key == "tuning") {
      cfg.tuning = enum_value(kTuningNames, val, "tuning", lineno);
    } else if (key == "workers") {
      cfg.workers = to_int(val, lineno);
    } else if (key == "emit_replicates") {
      if (val == "true" || val == "1") cfg.emit_replicates = true;
      else if (val == "false" || val == "0") cfg.emit_replicates = false;
      else throw ParseError("expected boolean, got '" + val + "'", lineno);
    } else if (key == "delta") {
      cfg.delta = to_dbl(val, lineno);
    } else if (key == "penalty_c") {
      cfg.penalty_c = to_dbl(val, lineno);
    } else if (key == "margin_gamma") {
      cfg.margin_gamma = to_dbl(val, lineno);
    } else if (key == "slope_A") {
      cfg.slope_A = to_dbl(val, lineno);
    } else if (key == "lasso_lambda") {
      cfg.lasso_lambda = to_dbl(val, lineno);
    } else if (key == "c0") {
      cfg.c0 = to_dbl(val, lineno);
    } else if (key == "design") {
      cfg.design = enum_value(kDesignNames, val, "design", lineno);
    } else if (key == "h_star") {
      cfg.h_star = to_dbl(val, lineno);
    } else if (key == "signal_theta") {
      cfg.signal_theta = to_dbl(val, lineno);
    } else if (key == "mc_test") {
      cfg.mc_test = to_int(val, lineno);
    } else if (key == "csv_x") {
      cfg.csv_x = val;
    } else if (key == "csv_y") {
      cfg.csv_y = val;
    } else {
      throw ParseError("unknown config key '" + key + "'", lineno);
    }
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

// ----------------------------------------------------------------- output

namespace {

nlohmann::json cell_to_json(const CellStats& c) {
  nlohmann::json j;
  j["arm"] = c.key.arm;
  j["estimator"] = to_string(c.key.estimator);
  j["n"] = c.key.n;
  j["d"] = c.key.d;
  j["d0"] = c.key.d0;
  j["h"] = c.key.h;
  j["alpha"] = c.key.alpha;
  j["replicates"] = c.replicates;
  j["failures"] = c.failures;
  j["flagged"] = c.flagged;
  j["mean_excess"] = c.mean_excess;
  j["stderr_excess"] = c.stderr_excess;
  j["mean_kl"] = c.mean_kl;
  j["stderr_kl"] = c.stderr_kl;
  j["mean_support"] = c.mean_support;
  j["mean_bayes_risk"] = c.mean_bayes_risk;
  j["bartlett_ok"] = c.bartlett_ok;
  j["paired_frac"] = c.paired_frac;
  if (!c.rep_excess.empty()) {
    j["rep_excess"] = c.rep_excess;
    j["rep_kl"] = c.rep_kl;
  }
  return j;
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-')
      out += c;
    else
      out += '_';
  }
  return out;
}

}  // namespace

void emit_report(const ExperimentReport& report, const std::string& out_dir,
                 const std::vector<ReportFormat>& formats) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + out_dir);

  for (ReportFormat fmt : formats) {
    if (fmt == ReportFormat::csv) {
      std::ofstream cells(fs::path(out_dir) / "cells.csv");
      if (!cells) throw IoError("cannot write cells.csv");
      cells << "scenario,arm,estimator,n,d,d0,h,alpha,replicates,failures,"
               "flagged,mean_excess,stderr_excess,mean_kl,stderr_kl,"
               "mean_support,mean_bayes_risk,bartlett_ok,paired_frac\n";
      for (const auto& c : report.cells) {
        cells << report.scenario << ',' << c.key.arm << ','
              << to_string(c.key.estimator) << ',' << c.key.n << ',' << c.key.d
              << ',' << c.key.d0 << ',' << format_double(c.key.h) << ','
              << format_double(c.key.alpha) << ',' << c.replicates << ','
              << c.failures << ',' << (c.flagged ? 1 : 0) << ','
              << format_double(c.mean_excess) << ','
              << format_double(c.stderr_excess) << ','
              << format_double(c.mean_kl) << ',' << format_double(c.stderr_kl)
              << ',' << format_double(c.mean_support) << ','
              << format_double(c.mean_bayes_risk) << ','
              << (c.bartlett_ok ? 1 : 0) << ',' << format_double(c.paired_frac)
              << '\n';
      }
      std::ofstream fits(fs::path(out_dir) / "rate_fits.csv");
      if (!fits) throw IoError("cannot write rate_fits.csv");
      fits << "curve,slope_loglog,stderr,r_squared,points\n";
      for (const auto& cf : report.rate_fits) {
        fits << '"' << cf.curve << "\"," << format_double(cf.fit.slope_loglog)
             << ',' << format_double(cf.fit.stderr_) << ','
             << format_double(cf.fit.r_squared) << ',' << cf.fit.points << '\n';
      }
      bool any_reps = false;
      for (const auto& c : report.cells)
        if (!c.rep_excess.empty()) any_reps = true;
      if (any_reps) {
        std::ofstream reps(fs::path(out_dir) / "replicates.csv");
        if (!reps) throw IoError("cannot write replicates.csv");
        reps << "scenario,arm,estimator,n,d,d0,h,alpha,replicate,excess,kl\n";
        for (const auto& c : report.cells)
          for (std::size_t r = 0; r < c.rep_excess.size(); ++r)
            reps << report.scenario << ',' << c.key.arm << ','
                 << to_string(c.key.estimator) << ',' << c.key.n << ','
                 << c.key.d << ',' << c.key.d0 << ',' << format_double(c.key.h)
                 << ',' << format_double(c.key.alpha) << ',' << r << ','
                 << format_double(c.rep_excess[r]) << ','
                 << format_double(c.rep_kl[r]) << '\n';
      }
    } else if (fmt == ReportFormat::json) {
      nlohmann::json j;
      j["scenario"] = report.scenario;
      j["seed"] = report.seed;
      j["cells"] = nlohmann::json::array();
      for (const auto& c : report.cells) j["cells"].push_back(cell_to_json(c));
      j["rate_fits"] = nlohmann::json::array();
      for (const auto& cf : report.rate_fits) {
        nlohmann::json f;
        f["curve"] = cf.curve;
        f["slope_loglog"] = cf.fit.slope_loglog;
        f["stderr"] = cf.fit.stderr_;
        f["r_squared"] = cf.fit.r_squared;
        f["points"] = cf.fit.points;
        j["rate_fits"].push_back(f);
      }
      j["metrics"] = report.metrics;
      j["notes"] = report.notes;
      std::ofstream out(fs::path(out_dir) / "report.json");
      if (!out) throw IoError("cannot write report.json");
      out << j.dump(2) << '\n';
    } else {
      fs::path plotdir = fs::path(out_dir) / "plotdata";
      fs::create_directories(plotdir, ec);
      if (ec) throw IoError("cannot create plotdata directory");
      std::map<std::string, std::vector<const CellStats*>> curves;
      for (const auto& c : report.cells)
        if (c.replicates > 0) curves[curve_id(c.key)].push_back(&c);
      for (auto& [curve, cells] : curves) {
        std::sort(cells.begin(), cells.end(),
                  [](const CellStats* a, const CellStats* b) {
                    return a->key.n < b->key.n;
                  });
        std::ofstream dat(plotdir / (sanitize(curve) + ".dat"));
        std::ofstream err(plotdir / (sanitize(curve) + ".err"));
        if (!dat || !err) throw IoError("cannot write plotdata files");
        for (const CellStats* c : cells) {
          dat << c->key.n << ' ' << format_double(c->mean_excess) << '\n';
          err << c->key.n << ' ' << format_double(c->stderr_excess) << '\n';
        }
      }
    }
  }
}

}  // namespace slr
