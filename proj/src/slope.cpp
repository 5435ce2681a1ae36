#include "slr/slope.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "slr/kernels.hpp"

namespace slr {
namespace {

void dense_predictor(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta,
                     Eigen::VectorXd& theta) {
  theta.setZero();
  const std::size_t n = static_cast<std::size_t>(x.rows());
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    if (beta(j) != 0.0) kernels::axpy(beta(j), x.col(j).data(), theta.data(), n);
}

// grad = X^t v / a
void gradient_from_resid(const Eigen::MatrixXd& x, const Eigen::VectorXd& v,
                         double a, Eigen::VectorXd& grad) {
  const std::size_t n = static_cast<std::size_t>(x.rows());
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    grad(j) = kernels::dot(x.col(j).data(), v.data(), n) / a;
}

// negative log-likelihood (smooth part of the Slope objective)
double smooth_loss(const GlmFamily& family, const Eigen::VectorXd& theta,
                   const Eigen::VectorXd& y) {
  const std::size_t n = static_cast<std::size_t>(theta.size());
  double s;
  if (family.name == Family::logistic) {
    s = kernels::softplus_sum(theta.data(), n) -
        kernels::dot(theta.data(), y.data(), n);
  } else {
    s = 0.5 * kernels::nrm2sq(theta.data(), n) -
        kernels::dot(theta.data(), y.data(), n);
  }
  return s / family.scale_a;
}

double sorted_l1_norm(const Eigen::VectorXd& beta, const Eigen::VectorXd& lambdas) {
  std::vector<double> mags(static_cast<std::size_t>(beta.size()));
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    mags[static_cast<std::size_t>(j)] = std::fabs(beta(j));
  std::sort(mags.begin(), mags.end(), std::greater<double>());
  double s = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    s += lambdas(j) * mags[static_cast<std::size_t>(j)];
  return s;
}

FitResult run_proximal_gradient(const GlmFamily& family, const DesignMatrix& x,
                                const Eigen::VectorXd& y,
                                const LambdaSchedule& schedule,
                                const SolverConfig& cfg) {
  if (!x.columns_unit_normalized())
    throw ContractViolation("fit_slope: design columns must be unit-normalized");
  if (y.size() != x.n()) throw ContractViolation("fit_slope: y length != n");
  if (schedule.lambdas.size() != x.d())
    throw ContractViolation("fit_slope: schedule length != d");
  if (cfg.max_iter < 1 || cfg.obj_tol <= 0.0)
    throw ContractViolation("SolverConfig: max_iter >= 1 and obj_tol > 0 required");

  const Eigen::Index n = x.n();
  const Eigen::Index d = x.d();
  const Eigen::MatrixXd& xm = x.entries();
  const double a = family.scale_a;
  const Eigen::VectorXd& lam = schedule.lambdas;

  double lip = family.variance_upper_U() / a * x.sigma_max() * x.sigma_max();
  if (lip <= 0.0) lip = 1.0;

  Eigen::VectorXd xk = Eigen::VectorXd::Zero(d);      // monotone iterate
  Eigen::VectorXd xk_prev = xk;
  Eigen::VectorXd zk = xk;                            // extrapolation point
  Eigen::VectorXd uk(d), grad(d), theta(n), mu(n), diff(d);

  dense_predictor(xm, xk, theta);
  double obj = smooth_loss(family, theta, y) + sorted_l1_norm(xk, lam);

  FitResult res;
  if (cfg.keep_trace) res.solver.objective_trace.push_back(obj);

  double t_mom = 1.0;
  int calm = 0;  // consecutive small relative changes
  int iter = 0;

  for (; iter < cfg.max_iter; ++iter) {
    dense_predictor(xm, zk, theta);
    if (family.name == Family::logistic) {
      kernels::sigmoid(theta.data(), mu.data(), static_cast<std::size_t>(n));
    } else {
      mu = theta;
    }
    Eigen::VectorXd resid = mu - y;
    gradient_from_resid(xm, resid, a, grad);
    double f_z = smooth_loss(family, theta, y);

    // proximal step with quadratic-bound backtracking on the step 1/lip
    double f_u = 0.0;
    for (;;) {
      uk = prox_sorted_l1(zk - grad / lip, lam, 1.0 / lip);
      dense_predictor(xm, uk, theta);
      f_u = smooth_loss(family, theta, y);
      if (cfg.step_rule == StepRule::fixed_lipschitz) break;
      diff = uk - zk;
      double quad = f_z + grad.dot(diff) +
                    0.5 * lip * kernels::nrm2sq(diff.data(), static_cast<std::size_t>(d));
      if (f_u <= quad + 1e-12 * (1.0 + std::fabs(f_z))) break;
      lip *= 2.0;
      if (lip > 1e18)
        throw ConvergenceError("fit_slope: backtracking exploded", iter, lip);
    }

    double obj_u = f_u + sorted_l1_norm(uk, lam);

    // monotone update: keep the better of the prox point and the incumbent
    xk_prev.swap(xk);
    double obj_prev = obj;
    if (obj_u <= obj_prev) {
      xk = uk;
      obj = obj_u;
    } else {
      xk = xk_prev;
    }

    if (cfg.restart && obj_u > obj_prev) {
      // adaptive restart: drop momentum, re-center on the incumbent
      t_mom = 1.0;
      zk = xk;
    } else {
      double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_mom * t_mom));
      zk = xk + (t_mom / t_next) * (uk - xk) +
           ((t_mom - 1.0) / t_next) * (xk - xk_prev);
      t_mom = t_next;
    }

    if (cfg.keep_trace) res.solver.objective_trace.push_back(obj);

    double rel = std::fabs(obj_prev - obj) / (1.0 + std::fabs(obj));
    res.solver.final_rel_change = rel;
    calm = rel < cfg.obj_tol ? calm + 1 : 0;
    if (calm >= 5) {
      res.solver.converged = true;
      ++iter;
      break;
    }
  }

  res.solver.iterations = iter;
  res.solver.below_lambda_floor = schedule.below_theory_floor;
  res.coef = CoefVector(xk);
  dense_predictor(xm, xk, theta);
  res.log_lik = log_likelihood_theta(family, theta, y);
  res.objective = obj;
  return res;
}

}  // namespace

LambdaSchedule build_schedule(ScheduleKind kind, int d, double A, double c0,
                              const GlmFamily& family) {
  if (d < 1) throw ContractViolation("build_schedule: d >= 1 required");
  if (A <= 0.0) throw ContractViolation("build_schedule: A > 0 required");
  if (kind != ScheduleKind::lasso && c0 <= 1.0)
    throw ContractViolation("build_schedule: c0 > 1 required");

  LambdaSchedule sched;
  sched.A = A;
  sched.c0 = c0;
  sched.lambdas.resize(d);

  switch (kind) {
    case ScheduleKind::lasso:
      sched.family_factor = 1.0;
      sched.lambdas.setConstant(A);
      break;
    case ScheduleKind::slope_logistic:
    case ScheduleKind::slope_glm: {
      double factor = (c0 + 1.0) / (c0 - 1.0);
      if (kind == ScheduleKind::slope_glm)
        sched.family_factor = std::sqrt(family.variance_upper_U() / family.scale_a);
      factor *= sched.family_factor;
      for (int j = 1; j <= d; ++j)
        sched.lambdas(j - 1) = A * factor * std::sqrt(std::log(2.0 * d / j));
      double floor = (kind == ScheduleKind::slope_logistic ? 20.0 : 40.0) *
                     std::sqrt(6.0);
      sched.below_theory_floor = A < floor;
      break;
    }
  }
  return sched;
}

Eigen::VectorXd prox_sorted_l1(const Eigen::VectorXd& y,
                               const Eigen::VectorXd& lambdas, double t) {
  const Eigen::Index d = y.size();
  if (lambdas.size() != d)
    throw ContractViolation("prox_sorted_l1: |lambdas| != |y|");
  if (t < 0.0) throw ContractViolation("prox_sorted_l1: t must be nonnegative");
  for (Eigen::Index j = 0; j < d; ++j) {
    if (lambdas(j) < 0.0)
      throw ContractViolation("prox_sorted_l1: lambdas must be nonnegative");
    if (j > 0 && lambdas(j) > lambdas(j - 1))
      throw ContractViolation("prox_sorted_l1: lambdas must be nonincreasing");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return std::fabs(y(i)) > std::fabs(y(j));
  });

  // pool-adjacent-violators pass on |y|_(k) - t*lambda_k
  std::vector<double> sum(static_cast<std::size_t>(d)), avg(static_cast<std::size_t>(d));
  std::vector<Eigen::Index> block_start(static_cast<std::size_t>(d)),
      block_end(static_cast<std::size_t>(d));
  Eigen::Index nblocks = 0;
  for (Eigen::Index k = 0; k < d; ++k) {
    block_start[static_cast<std::size_t>(nblocks)] = k;
    block_end[static_cast<std::size_t>(nblocks)] = k;
    sum[static_cast<std::size_t>(nblocks)] =
        std::fabs(y(order[static_cast<std::size_t>(k)])) - t * lambdas(k);
    avg[static_cast<std::size_t>(nblocks)] = sum[static_cast<std::size_t>(nblocks)];
    ++nblocks;
    while (nblocks > 1 && avg[static_cast<std::size_t>(nblocks - 2)] <=
                              avg[static_cast<std::size_t>(nblocks - 1)]) {
      --nblocks;
      sum[static_cast<std::size_t>(nblocks - 1)] += sum[static_cast<std::size_t>(nblocks)];
      block_end[static_cast<std::size_t>(nblocks - 1)] = k;
      avg[static_cast<std::size_t>(nblocks - 1)] =
          sum[static_cast<std::size_t>(nblocks - 1)] /
          static_cast<double>(k - block_start[static_cast<std::size_t>(nblocks - 1)] + 1);
    }
  }

  Eigen::VectorXd out = Eigen::VectorXd::Zero(d);
  for (Eigen::Index b = 0; b < nblocks; ++b) {
    double v = std::max(0.0, avg[static_cast<std::size_t>(b)]);
    for (Eigen::Index k = block_start[static_cast<std::size_t>(b)];
         k <= block_end[static_cast<std::size_t>(b)]; ++k) {
      Eigen::Index idx = order[static_cast<std::size_t>(k)];
      out(idx) = y(idx) < 0.0 ? -v : v;
    }
  }
  return out;
}

double slope_objective(const GlmFamily& family, const DesignMatrix& x,
                       const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                       const Eigen::VectorXd& lambdas) {
  Eigen::VectorXd theta(x.n());
  dense_predictor(x.entries(), beta, theta);
  return smooth_loss(family, theta, y) + sorted_l1_norm(beta, lambdas);
}

FitResult fit_slope(const GlmFamily& family, const DesignMatrix& x,
                    const Eigen::VectorXd& y, const LambdaSchedule& schedule,
                    const SolverConfig& cfg) {
  return run_proximal_gradient(family, x, y, schedule, cfg);
}

FitResult fit_lasso(const GlmFamily& family, const DesignMatrix& x,
                    const Eigen::VectorXd& y, double lambda,
                    const SolverConfig& cfg) {
  if (lambda < 0.0) throw ContractViolation("fit_lasso: lambda must be nonnegative");
  LambdaSchedule sched;
  sched.A = lambda;
  sched.lambdas = Eigen::VectorXd::Constant(x.d(), lambda);
  return run_proximal_gradient(family, x, y, sched, cfg);
}

}  // namespace slr
