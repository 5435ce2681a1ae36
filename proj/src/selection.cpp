#include "slr/selection.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace slr {
namespace {

constexpr long kEnumerationGuard = 2'000'000;

long models_up_to(int d, int max_size) {
  long total = 0;
  double binom = 1.0;
  for (int k = 0; k <= max_size; ++k) {
    if (k > 0) binom = binom * (d - k + 1) / k;
    total += static_cast<long>(binom);
    if (total > 4 * kEnumerationGuard) return total;  // early out, already over
  }
  return total;
}

}  // namespace

ComplexityPenalty ComplexityPenalty::fixed_design(double c, int d, int r) {
  if (c <= 0.0 || d < 1 || r < 1 || r > d)
    throw ContractViolation("ComplexityPenalty: need c > 0, 1 <= r <= d");
  return ComplexityPenalty{PenaltyKind::fixed_design, c, d, r};
}

ComplexityPenalty ComplexityPenalty::random_design(double c, int d, int n) {
  if (c <= 0.0 || d < 1 || n < 1)
    throw ContractViolation("ComplexityPenalty: need c > 0, d >= 1, n >= 1");
  return ComplexityPenalty{PenaltyKind::random_design, c, d, std::min(d, n)};
}

double ComplexityPenalty::value(int k) const {
  if (k < 0 || k > cap)
    throw ContractViolation("penalty_value: k outside [0, " + std::to_string(cap) + "]");
  if (k == 0) return 0.0;
  if (kind == PenaltyKind::fixed_design && k == cap) return c * k;
  return c * k * std::log(d * std::exp(1.0) / k);
}

double default_c(double delta) {
  if (!(delta > 0.0 && delta < 0.5))
    throw ContractViolation("default_c: delta must be in (0, 1/2)");
  return 4.0 / (delta * (1.0 - delta)) * 1.01;
}

SelectionResult select_exhaustive(const GlmFamily& family, const DesignMatrix& x,
                                  const Eigen::VectorXd& y,
                                  const ComplexityPenalty& pen, int max_size,
                                  const IrlsConfig& cfg) {
  const int d = static_cast<int>(x.d());
  if (max_size < 0 || max_size > pen.cap)
    throw ContractViolation("select_exhaustive: max_size outside penalty domain");
  long total = models_up_to(d, max_size);
  if (total > kEnumerationGuard)
    throw EnumerationGuardError(
        "select_exhaustive: " + std::to_string(total) +
        " models exceed the 2e6 enumeration guard; use select_forward");

  SelectionResult best;
  best.criterion = std::numeric_limits<double>::infinity();
  SelectionResult out;
  out.path.reserve(static_cast<std::size_t>(total));

  auto consider = [&](const std::vector<int>& m) {
    FitResult fit;
    try {
      fit = fit_restricted_mle(family, x, y, m, cfg);
    } catch (const DegenerateModelError&) {
      ++out.skipped_candidates;
      return;
    } catch (const ConvergenceError&) {
      ++out.skipped_candidates;
      return;
    }
    double crit = -fit.log_lik + pen.value(static_cast<int>(m.size()));
    out.path.emplace_back(m, crit);
    if (crit < best.criterion) {
      best.criterion = crit;
      best.model = m;
      best.fit = std::move(fit);
    }
  };

  // sizes ascending, supports lexicographic: ties resolve to the smaller,
  // lexicographically first support by first-strict-win
  consider({});
  std::vector<int> combo;
  for (int k = 1; k <= max_size; ++k) {
    combo.assign(static_cast<std::size_t>(k), 0);
    for (int j = 0; j < k; ++j) combo[static_cast<std::size_t>(j)] = j;
    for (;;) {
      consider(combo);
      int i = k - 1;
      while (i >= 0 && combo[static_cast<std::size_t>(i)] == d - k + i) --i;
      if (i < 0) break;
      ++combo[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < k; ++j)
        combo[static_cast<std::size_t>(j)] = combo[static_cast<std::size_t>(j - 1)] + 1;
    }
  }

  out.model = best.model;
  out.fit = std::move(best.fit);
  out.criterion = best.criterion;
  return out;
}

SelectionResult select_forward(const GlmFamily& family, const DesignMatrix& x,
                               const Eigen::VectorXd& y,
                               const ComplexityPenalty& pen, int max_size,
                               const IrlsConfig& cfg) {
  const int d = static_cast<int>(x.d());
  if (max_size < 0 || max_size > std::min<Eigen::Index>(d, x.n()) ||
      max_size > pen.cap)
    throw ContractViolation("select_forward: max_size outside admissible range");

  SelectionResult out;
  std::vector<int> current;
  std::vector<FitResult> path_fits;

  FitResult empty_fit = fit_restricted_mle(family, x, y, {}, cfg);
  out.path.emplace_back(current, -empty_fit.log_lik + pen.value(0));
  path_fits.push_back(std::move(empty_fit));

  std::vector<char> in_model(static_cast<std::size_t>(d), 0);
  for (int step = 1; step <= max_size; ++step) {
    double best_crit = std::numeric_limits<double>::infinity();
    int best_j = -1;
    FitResult best_fit;
    for (int j = 0; j < d; ++j) {
      if (in_model[static_cast<std::size_t>(j)]) continue;
      std::vector<int> cand = current;
      cand.insert(std::lower_bound(cand.begin(), cand.end(), j), j);
      FitResult fit;
      try {
        fit = fit_restricted_mle(family, x, y, cand, cfg);
      } catch (const DegenerateModelError&) {
        ++out.skipped_candidates;
        continue;
      } catch (const ConvergenceError&) {
        ++out.skipped_candidates;
        continue;
      }
      double crit = -fit.log_lik + pen.value(step);
      if (crit < best_crit) {
        best_crit = crit;
        best_j = j;
        best_fit = std::move(fit);
      }
    }
    if (best_j < 0) break;  // nothing fittable at this size
    in_model[static_cast<std::size_t>(best_j)] = 1;
    current.insert(std::lower_bound(current.begin(), current.end(), best_j), best_j);
    out.path.emplace_back(current, best_crit);
    path_fits.push_back(std::move(best_fit));
  }

  std::size_t arg = 0;
  for (std::size_t i = 1; i < out.path.size(); ++i)
    if (out.path[i].second < out.path[arg].second) arg = i;

  out.model = out.path[arg].first;
  out.fit = std::move(path_fits[arg]);
  out.criterion = out.path[arg].second;
  return out;
}

}  // namespace slr
