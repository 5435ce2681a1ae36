#include "slr/design.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "slr/rng.hpp"

namespace slr {
namespace {

// weights sqrt(ln(2d/j)), j = 1..d
Eigen::VectorXd cone_weights(int d) {
  Eigen::VectorXd w(d);
  for (int j = 1; j <= d; ++j) w(j - 1) = std::sqrt(std::log(2.0 * d / j));
  return w;
}

double weighted_sorted_norm(const Eigen::VectorXd& u, const Eigen::VectorXd& w) {
  std::vector<double> mags(static_cast<std::size_t>(u.size()));
  for (Eigen::Index j = 0; j < u.size(); ++j)
    mags[static_cast<std::size_t>(j)] = std::fabs(u(j));
  std::sort(mags.begin(), mags.end(), std::greater<double>());
  double s = 0.0;
  for (Eigen::Index j = 0; j < u.size(); ++j)
    s += w(j) * mags[static_cast<std::size_t>(j)];
  return s;
}

double cone_rhs_factor(int d, const WreParams& params) {
  double s = 0.0;
  for (int j = 1; j <= params.d0; ++j) s += std::log(2.0 * d / j);
  return (1.0 + params.c0) * std::sqrt(s);
}

int int_log2_exact(long v) {
  int k = 0;
  while ((1L << k) < v) ++k;
  return (1L << k) == v ? k : -1;
}

Eigen::VectorXd sample_row(const RandomDesignSpec& spec, Rng& rng) {
  const int d = spec.d;
  Eigen::VectorXd x(d);
  switch (spec.distribution) {
    case DesignDistribution::rademacher_rescaled: {
      double s = 1.0 / std::sqrt(static_cast<double>(d));
      for (int j = 0; j < d; ++j) x(j) = rng.sign() * s;
      break;
    }
    case DesignDistribution::uniform_ball: {
      for (int j = 0; j < d; ++j) x(j) = rng.normal();
      double nrm = x.norm();
      if (nrm == 0.0) nrm = 1.0;
      double r = std::pow(rng.uniform(), 1.0 / d);
      x *= r / nrm;
      break;
    }
    case DesignDistribution::gaussian_rescaled: {
      double s = 1.0 / std::sqrt(static_cast<double>(d));
      for (int j = 0; j < d; ++j) x(j) = s * rng.normal();
      if (spec.rescale_to_unit_ball) {
        double nrm = x.norm();
        if (nrm > 1.0) x /= nrm;
      }
      break;
    }
  }
  return x;
}

}  // namespace

bool in_wre_cone(const Eigen::VectorXd& u, const WreParams& params) {
  if (params.d0 < 1 || params.c0 <= 1.0)
    throw ContractViolation("WreParams: d0 >= 1 and c0 > 1 required");
  const int d = static_cast<int>(u.size());
  if (d < params.d0) throw ContractViolation("in_wre_cone: d0 exceeds dimension");
  double nrm = u.norm();
  if (nrm == 0.0) return false;
  Eigen::VectorXd w = cone_weights(d);
  return weighted_sorted_norm(u, w) <= cone_rhs_factor(d, params) * nrm;
}

Eigen::MatrixXd build_shatter_matrix_W(int d0, int d) {
  if (d0 < 1 || d < d0) throw ContractViolation("build_shatter_matrix_W: need 1 <= d0 <= d");
  if ((2L * d) % d0 != 0)
    throw ContractViolation("build_shatter_matrix_W: 2d/d0 is not an integer");
  int k = int_log2_exact(2L * d / d0);
  if (k < 1 || static_cast<long>(d0) << (k - 1) != d) {
    // suggest the nearest admissible d for this d0
    int kk = 1;
    while ((static_cast<long>(d0) << (kk - 1)) < d) ++kk;
    long lo = static_cast<long>(d0) << (kk > 1 ? kk - 2 : 0);
    long hi = static_cast<long>(d0) << (kk - 1);
    throw ContractViolation(
        "build_shatter_matrix_W: 2d/d0 must be a power of two with d0*2^(k-1) = d; "
        "nearest admissible d for d0=" + std::to_string(d0) + " are " +
        std::to_string(lo) + " and " + std::to_string(hi));
  }

  const int width = 1 << (k - 1);  // columns per block
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d0) * k, d);
  for (int blk = 0; blk < d0; ++blk) {
    for (int c = 0; c < width; ++c) {
      Eigen::Index col = static_cast<Eigen::Index>(blk) * width + c;
      w(static_cast<Eigen::Index>(blk) * k, col) = 1.0;  // leading +1
      for (int t = 1; t < k; ++t)
        w(static_cast<Eigen::Index>(blk) * k + t, col) = (c >> (t - 1)) & 1 ? -1.0 : 1.0;
    }
  }
  return w;
}

bool verify_shattering(const Eigen::MatrixXd& w, int d0) {
  const int rows = static_cast<int>(w.rows());
  const int cols = static_cast<int>(w.cols());
  if (rows > 20)
    throw EnumerationGuardError("verify_shattering: more than 20 rows (2^rows guard)");
  if (d0 < 1 || rows % d0 != 0 || cols % d0 != 0)
    throw ContractViolation("verify_shattering: rows and cols must divide by d0");

  const int width = cols / d0;
  const long per_block = 2L * width;  // position x sign
  double total_d = 1.0;
  for (int b = 0; b < d0; ++b) total_d *= static_cast<double>(per_block);
  if (total_d > 64e6)
    throw EnumerationGuardError("verify_shattering: candidate count too large");
  const long total = static_cast<long>(total_d);

  std::vector<char> seen(1u << rows, 0);
  long distinct = 0;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(cols);
  for (long code = 0; code < total; ++code) {
    long c = code;
    beta.setZero();
    for (int b = 0; b < d0; ++b) {
      long choice = c % per_block;
      c /= per_block;
      int pos = static_cast<int>(choice >> 1);
      double sgn = (choice & 1) ? -1.0 : 1.0;
      beta(static_cast<Eigen::Index>(b) * width + pos) = sgn;
    }
    unsigned mask = 0;
    for (int i = 0; i < rows; ++i) {
      double v = w.row(i).dot(beta);
      if (v >= 0.0) mask |= (1u << i);
    }
    if (!seen[mask]) {
      seen[mask] = 1;
      if (++distinct == (1L << rows)) return true;
    }
  }
  return distinct == (1L << rows);
}

CoefVector WorstCaseDesign::beta_for_labeling(const std::vector<int>& b) const {
  return beta_for_labeling(b, h);
}

CoefVector WorstCaseDesign::beta_for_labeling(const std::vector<int>& b,
                                              double h_use) const {
  if (static_cast<int>(b.size()) != v_rows)
    throw ContractViolation("beta_for_labeling: labeling length != V");
  if (!(h_use >= 0.0 && h_use < 0.5))
    throw ContractViolation("beta_for_labeling: h must be in [0, 1/2)");
  const int k = v_rows / d0;
  const int width = static_cast<int>(w.cols()) / d0;
  const double m = std::log((1.0 + 2.0 * h_use) / (1.0 - 2.0 * h_use));

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(w.cols());
  for (int blk = 0; blk < d0; ++blk) {
    // desired signs on this block's k rows
    double lead = b[static_cast<std::size_t>(blk) * k] ? 1.0 : -1.0;
    int pos = 0;
    for (int t = 1; t < k; ++t) {
      double sgn = b[static_cast<std::size_t>(blk) * k + t] ? 1.0 : -1.0;
      if (lead * sgn < 0.0) pos |= (1 << (t - 1));  // column has -1 at entry t
    }
    beta(static_cast<Eigen::Index>(blk) * width + pos) = lead * m;
  }
  return CoefVector(std::move(beta));
}

ProbVector WorstCaseDesign::probs_for_labeling(const std::vector<int>& b) const {
  if (static_cast<int>(b.size()) != v_rows)
    throw ContractViolation("probs_for_labeling: labeling length != V");
  Eigen::VectorXd p(x.n());
  for (Eigen::Index i = 0; i < x.n(); ++i) {
    int vert = row_vertex[static_cast<std::size_t>(i)];
    p(i) = b[static_cast<std::size_t>(vert)] ? 0.5 + h : 0.5 - h;
  }
  return ProbVector(std::move(p));
}

WorstCaseDesign build_worst_case_X0(int d0, int d, int n, double h,
                                    std::optional<int> kappa_override) {
  Eigen::MatrixXd w = build_shatter_matrix_W(d0, d);
  const int v = static_cast<int>(w.rows());
  if (v < 2 || v > n)
    throw ContractViolation("build_worst_case_X0: need 2 <= V <= n (V = " +
                            std::to_string(v) + ")");
  if (!(h >= 0.0 && h < 0.5))
    throw ContractViolation("build_worst_case_X0: h must be in [0, 1/2)");

  const int kappa_max = n / (v - 1);
  int kappa = kappa_override.value_or(kappa_max);
  if (kappa < 1 || kappa > kappa_max)
    throw ContractViolation("build_worst_case_X0: kappa outside [1, floor(n/(V-1))]");

  Eigen::MatrixXd x0(n, d);
  std::vector<int> row_vertex(static_cast<std::size_t>(n));
  int row = 0;
  for (int i = 0; i < v - 1; ++i)
    for (int rep = 0; rep < kappa; ++rep, ++row) {
      x0.row(row) = w.row(i);
      row_vertex[static_cast<std::size_t>(row)] = i;
    }
  for (; row < n; ++row) {
    x0.row(row) = w.row(v - 1);
    row_vertex[static_cast<std::size_t>(row)] = v - 1;
  }

  WorstCaseDesign out{DesignMatrix(std::move(x0)), std::move(w), d0, v, kappa, h,
                      std::move(row_vertex)};
  return out;
}

NormalizedDesign unit_normalize_columns(const DesignMatrix& x) {
  const Eigen::MatrixXd& m = x.entries();
  Eigen::VectorXd norms(m.cols());
  Eigen::MatrixXd normalized = m;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    double nrm = m.col(j).norm();
    if (nrm == 0.0)
      throw ContractViolation("unit_normalize_columns: column " + std::to_string(j) +
                              " is zero");
    norms(j) = nrm;
    normalized.col(j) /= nrm;
  }
  return NormalizedDesign{DesignMatrix(std::move(normalized)), std::move(norms)};
}

CoefVector NormalizedDesign::map_back(const CoefVector& beta_normalized) const {
  if (beta_normalized.beta.size() != column_norms.size())
    throw ContractViolation("map_back: dimension mismatch");
  Eigen::VectorXd b = beta_normalized.beta.cwiseQuotient(column_norms);
  return CoefVector(std::move(b));
}

KappaEstimate estimate_kappa_wre(const DesignMatrix& x, const WreParams& params,
                                 int budget, std::uint64_t seed) {
  if (!x.columns_unit_normalized())
    throw ContractViolation("estimate_kappa_wre: design must be unit-normalized");
  const int d = static_cast<int>(x.d());
  if (params.d0 < 1 || params.d0 > d || params.c0 <= 1.0)
    throw ContractViolation("estimate_kappa_wre: invalid WRE parameters");
  if (budget < 1) throw ContractViolation("estimate_kappa_wre: budget >= 1 required");

  const Eigen::MatrixXd& m = x.entries();
  Eigen::MatrixXd gram = m.transpose() * m;
  Eigen::VectorXd w = cone_weights(d);
  const double rhs_factor = cone_rhs_factor(d, params);

  auto in_cone = [&](const Eigen::VectorXd& u) {
    double nrm = u.norm();
    if (nrm == 0.0) return false;
    return weighted_sorted_norm(u, w) <= rhs_factor * nrm;
  };
  auto ratio = [&](const Eigen::VectorXd& u) {
    return std::sqrt(std::max(0.0, u.dot(gram * u))) / u.norm();
  };

  KappaEstimate best;
  best.kappa = std::numeric_limits<double>::infinity();
  auto consider = [&](const Eigen::VectorXd& u) {
    if (!in_cone(u)) return false;
    double r = ratio(u);
    if (r < best.kappa) {
      best.kappa = r;
      best.minimizer = u / u.norm();
    }
    return true;
  };

  // seeded witnesses: most-correlated column pairs (catches duplicates)
  {
    std::vector<std::pair<double, std::pair<int, int>>> pairs;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j)
        pairs.push_back({std::fabs(gram(i, j)), {i, j}});
    std::sort(pairs.begin(), pairs.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    int take = std::min<int>(static_cast<int>(pairs.size()), 32);
    for (int t = 0; t < take; ++t) {
      auto [i, j] = pairs[static_cast<std::size_t>(t)].second;
      Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
      u(i) = 1.0;
      u(j) = gram(i, j) >= 0.0 ? -1.0 : 1.0;
      consider(u);
    }
  }

  // seeded witnesses: sparsified bottom right-singular vectors
  {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinV);
    const Eigen::MatrixXd& vmat = svd.matrixV();
    for (int t = 0; t < std::min<int>(3, static_cast<int>(vmat.cols())); ++t) {
      Eigen::VectorXd u = vmat.col(vmat.cols() - 1 - t);
      consider(u);
      // push into the cone by zeroing small entries
      Eigen::VectorXd mags = u.cwiseAbs();
      std::vector<double> sorted(mags.data(), mags.data() + d);
      std::sort(sorted.begin(), sorted.end(), std::greater<double>());
      for (int keep = params.d0; keep < d; keep *= 2) {
        double thresh = sorted[static_cast<std::size_t>(std::min(keep, d - 1))];
        Eigen::VectorXd su = u;
        for (int j = 0; j < d; ++j)
          if (std::fabs(su(j)) <= thresh) su(j) = 0.0;
        if (su.norm() > 0.0) consider(su);
      }
    }
  }

  Rng rng(seed == 0 ? 0x5eed0001ULL : seed);

  // random d0-sparse directions (always inside the cone) + local descent
  int descent_budget = budget / 4;
  int sample_budget = budget - descent_budget;
  for (int it = 0; it < sample_budget; ++it) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
    for (int pick = 0; pick < params.d0; ++pick)
      u(static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(d)))) =
          rng.normal();
    if (u.norm() == 0.0) continue;
    consider(u);
  }

  // sphere-projected gradient descent from the incumbent
  if (best.minimizer.size() == d) {
    Eigen::VectorXd u = best.minimizer;
    double step = 0.5;
    for (int it = 0; it < descent_budget; ++it) {
      Eigen::VectorXd g = gram * u;
      g -= u.dot(g) * u;  // tangent component
      double gn = g.norm();
      if (gn < 1e-14) break;
      Eigen::VectorXd cand = u - step * g / gn;
      cand /= cand.norm();
      if (!in_cone(cand)) {
        // sparsify toward the cone
        Eigen::VectorXd mags = cand.cwiseAbs();
        std::vector<double> sorted(mags.data(), mags.data() + d);
        std::sort(sorted.begin(), sorted.end(), std::greater<double>());
        for (int keep = d / 2; keep >= params.d0 && !in_cone(cand); keep /= 2) {
          double thresh = sorted[static_cast<std::size_t>(std::min(keep, d - 1))];
          for (int j = 0; j < d; ++j)
            if (std::fabs(cand(j)) <= thresh) cand(j) = 0.0;
        }
        if (!in_cone(cand)) {
          step *= 0.5;
          if (step < 1e-10) break;
          continue;
        }
        cand /= cand.norm();
      }
      if (ratio(cand) < ratio(u)) {
        u = cand;
        consider(u);
      } else {
        step *= 0.5;
        if (step < 1e-10) break;
      }
    }
  }

  return best;
}

DesignMatrix sample_random_design(const RandomDesignSpec& spec, int n,
                                  std::uint64_t seed) {
  if (n < 1 || spec.d < 1)
    throw ContractViolation("sample_random_design: n >= 1 and d >= 1 required");
  Rng rng(seed);
  Eigen::MatrixXd x(n, spec.d);
  for (int i = 0; i < n; ++i) x.row(i) = sample_row(spec, rng);
  return DesignMatrix(std::move(x));
}

DesignMatrix sample_margin_warped_design(const RandomDesignSpec& spec, int n,
                                         const CoefVector& beta, double alpha,
                                         double h_star, std::uint64_t seed) {
  if (beta.support.empty())
    throw ContractViolation("sample_margin_warped_design: beta must be nonzero");
  if (!(h_star >= 0.0 && h_star < 0.5))
    throw ContractViolation("sample_margin_warped_design: h_star in [0, 1/2) required");
  const double bnorm2 = beta.beta.squaredNorm();
  Rng rng(seed);
  Eigen::MatrixXd x(n, spec.d);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd z = sample_row(spec, rng);
    double margin;
    if (std::isinf(alpha)) {
      margin = h_star;
    } else if (alpha <= 0.0) {
      margin = 0.0;
    } else {
      margin = h_star * std::pow(rng.uniform(), 1.0 / alpha);
    }
    double theta = rng.sign() * std::log((1.0 + 2.0 * margin) / (1.0 - 2.0 * margin));
    double raw = z.dot(beta.beta);
    x.row(i) = z + ((theta - raw) / bnorm2) * beta.beta;
  }
  return DesignMatrix(std::move(x));
}

MarginResponse sample_margin_response(const DesignMatrix& x, const CoefVector& beta,
                                      std::optional<double> alpha_margin,
                                      std::uint64_t seed) {
  Eigen::VectorXd theta = linear_predictor(x, beta);
  if (!theta.allFinite())
    throw ContractViolation("sample_margin_response: non-finite linear predictor");
  ProbVector p = inv_logit(theta);

  Rng rng(seed);
  MarginResponse out{Eigen::VectorXd(x.n()), p, 0.5, Eigen::VectorXd(),
                     Eigen::VectorXd(), alpha_margin};
  for (Eigen::Index i = 0; i < x.n(); ++i) {
    out.y(i) = rng.bernoulli(p[i]);
    out.min_margin = std::min(out.min_margin, std::fabs(p[i] - 0.5));
  }

  const int grid = 50;
  out.h_grid.resize(grid);
  out.frac_within.resize(grid);
  for (int t = 0; t < grid; ++t) {
    double h = (t + 1) / 100.0;  // 0.01 .. 0.50
    out.h_grid(t) = h;
    int count = 0;
    for (Eigen::Index i = 0; i < x.n(); ++i)
      if (std::fabs(p[i] - 0.5) <= h) ++count;
    out.frac_within(t) = static_cast<double>(count) / static_cast<double>(x.n());
  }

  // margin-exponent estimate from the interior of the fraction curve
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int pts = 0;
  for (int t = 0; t < grid; ++t) {
    double f = out.frac_within(t);
    if (f <= 0.05 || f >= 0.95) continue;
    double lx = std::log(out.h_grid(t)), ly = std::log(f);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++pts;
  }
  if (pts >= 3 && sxx * pts - sx * sx > 0.0)
    out.alpha_hat = (pts * sxy - sx * sy) / (pts * sxx - sx * sx);
  return out;
}

}  // namespace slr
