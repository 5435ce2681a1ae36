#pragma once

// Complexity-penalized model selection: exhaustive search over all supports
// up to a size cap (guarded), and greedy forward selection for larger d.

#include <utility>
#include <vector>

#include "slr/irls.hpp"

namespace slr {

enum class PenaltyKind { fixed_design, random_design };

// Pen(k) = c*k*ln(de/k) with the fixed-design boundary clause Pen(r) = c*r.
struct ComplexityPenalty {
  PenaltyKind kind = PenaltyKind::fixed_design;
  double c = 1.0;
  int d = 1;
  int cap = 1;  // r for fixed_design, min(d,n) for random_design

  static ComplexityPenalty fixed_design(double c, int d, int r);
  static ComplexityPenalty random_design(double c, int d, int n);

  double value(int k) const;
};

inline double penalty_value(const ComplexityPenalty& pen, int k) {
  return pen.value(k);
}

// Smallest admissible penalty constant 4/(delta(1-delta)) plus a 1% margin.
double default_c(double delta);

struct SelectionResult {
  std::vector<int> model;
  FitResult fit;
  double criterion = 0.0;
  // every (model, criterion) visited, in visit order
  std::vector<std::pair<std::vector<int>, double>> path;
  int skipped_candidates = 0;
};

// Global minimizer of the criterion over all models of size <= max_size
// (empty model included). Refuses with a hint when the enumeration would
// exceed 2e6 models. Ties break to the smaller, lexicographically first
// support. Unfittable candidates (rank-deficient) are skipped and counted.
SelectionResult select_exhaustive(const GlmFamily& family, const DesignMatrix& x,
                                  const Eigen::VectorXd& y,
                                  const ComplexityPenalty& pen, int max_size,
                                  const IrlsConfig& cfg = {});

// Greedy path empty -> {j1} -> {j1,j2} -> ...; each step adds the feature
// minimizing the criterion; returns the path minimum (no early stopping).
SelectionResult select_forward(const GlmFamily& family, const DesignMatrix& x,
                               const Eigen::VectorXd& y,
                               const ComplexityPenalty& pen, int max_size,
                               const IrlsConfig& cfg = {});

}  // namespace slr
