#pragma once

// Design generation: the block shattering matrix W and the stacked
// worst-case design X0 from the lower-bound constructions, bounded-support
// random designs, column normalization, and budgeted estimation of the
// weighted-restricted-eigenvalue constant kappa(d0, c0).

#include <cstdint>
#include <optional>
#include <vector>

#include "slr/model.hpp"

namespace slr {

// Cone S(d0,c0) = { u : sum_j sqrt(ln(2d/j)) |u|_(j)
//                       <= (1+c0) ||u||_2 sqrt(sum_{j<=d0} ln(2d/j)) }.
struct WreParams {
  int d0 = 1;
  double c0 = 3.0;
};

// Scale-invariant membership test for S(d0, c0); u == 0 is excluded.
bool in_wre_cone(const Eigen::VectorXd& u, const WreParams& params);

enum class DesignDistribution { uniform_ball, gaussian_rescaled, rademacher_rescaled };

struct RandomDesignSpec {
  DesignDistribution distribution = DesignDistribution::rademacher_rescaled;
  int d = 1;
  bool rescale_to_unit_ball = true;
};

// Block-diagonal W with d0 copies of the k x 2^{k-1} matrix K whose columns
// are all +-1 vectors with leading +1; k = log2(2d/d0). Its d0*k rows are
// shattered by the one-entry-per-block sparse sign vectors.
// Requires 2d/d0 to be a power of two with d0*2^{k-1} = d.
Eigen::MatrixXd build_shatter_matrix_W(int d0, int d);

// Exhaustively checks whether all 2^rows labelings of W's rows are realized
// by vectors with a single +-1 entry per block (rows <= 20 guard).
bool verify_shattering(const Eigen::MatrixXd& w, int d0);

// X0 stacks kappa copies of each of w_1..w_{V-1} and n-(V-1)*kappa copies of
// w_V. For any labeling b of the V vertices, beta_for_labeling returns the
// d0-sparse vector with beta' w_i = +- ln((1+2h)/(1-2h)) matching b.
struct WorstCaseDesign {
  DesignMatrix x;
  Eigen::MatrixXd w;  // V x d
  int d0 = 0;
  int v_rows = 0;
  int kappa = 0;
  double h = 0.0;
  std::vector<int> row_vertex;  // length n

  CoefVector beta_for_labeling(const std::vector<int>& b) const;
  CoefVector beta_for_labeling(const std::vector<int>& b, double h_use) const;
  // exact probabilities 1/2 +- h on the rows induced by labeling b
  ProbVector probs_for_labeling(const std::vector<int>& b) const;
};

WorstCaseDesign build_worst_case_X0(int d0, int d, int n, double h,
                                    std::optional<int> kappa_override = {});

struct NormalizedDesign {
  DesignMatrix x;
  Eigen::VectorXd column_norms;  // original norms; beta_orig = beta_norm / norms

  CoefVector map_back(const CoefVector& beta_normalized) const;
};

NormalizedDesign unit_normalize_columns(const DesignMatrix& x);

struct KappaEstimate {
  double kappa = 0.0;            // best (smallest) ratio found; an upper bound
  Eigen::VectorXd minimizer;     // achieving direction, unit norm, in the cone
  bool is_estimate = true;
};

// Budgeted random cone sampling plus sphere-projected local descent.
KappaEstimate estimate_kappa_wre(const DesignMatrix& x, const WreParams& params,
                                 int budget = 10000, std::uint64_t seed = 0);

// i.i.d. rows from the given distribution; same seed, same matrix.
DesignMatrix sample_random_design(const RandomDesignSpec& spec, int n,
                                  std::uint64_t seed);

// Rows adjusted along beta so the margins |p_i - 1/2| are exactly
// h_star * U^{1/alpha} with random sides (alpha = inf: constant h_star;
// alpha <= 0 degenerates to p == 1/2). Used by the low-noise-rate studies.
DesignMatrix sample_margin_warped_design(const RandomDesignSpec& spec, int n,
                                         const CoefVector& beta, double alpha,
                                         double h_star, std::uint64_t seed);

struct MarginResponse {
  Eigen::VectorXd y;
  ProbVector p;
  double min_margin = 0.0;       // min_i |p_i - 1/2|
  Eigen::VectorXd h_grid;        // margin thresholds
  Eigen::VectorXd frac_within;   // empirical P(|p - 1/2| <= h), per grid point
  std::optional<double> alpha_ref;  // requested exponent, when given
  // log-log slope of the fraction curve over its interior points; estimates
  // the margin exponent when the fraction behaves like (h/h*)^alpha
  std::optional<double> alpha_hat;
};

// Draws Y_i ~ Bin(1, p_i) and reports the realized margin profile.
MarginResponse sample_margin_response(const DesignMatrix& x, const CoefVector& beta,
                                      std::optional<double> alpha_margin,
                                      std::uint64_t seed);

}  // namespace slr
