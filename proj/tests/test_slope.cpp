#include <doctest.h>

#include <Eigen/QR>
#include <cmath>

#include "slr/design.hpp"
#include "slr/irls.hpp"
#include "slr/rng.hpp"
#include "slr/slope.hpp"
#include "support/oracles.hpp"

using namespace slr;

namespace {

const GlmFamily kLogistic = GlmFamily::logistic();

Eigen::VectorXd vec(std::initializer_list<double> vals) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v(i++) = x;
  return v;
}

Eigen::MatrixXd orthonormal_cols(int n, int d, Rng& rng) {
  Eigen::MatrixXd g(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, d);
}

}  // namespace

TEST_CASE("prox basics") {
  // t = 0: identity
  Eigen::VectorXd y = vec({3.0, -1.0, 0.4});
  Eigen::VectorXd lam = vec({2.0, 1.0, 0.5});
  CHECK((prox_sorted_l1(y, lam, 0.0) - y).cwiseAbs().maxCoeff() == 0.0);

  // equal weights reduce to soft thresholding
  Eigen::VectorXd p = prox_sorted_l1(vec({5.0, 1.0}), vec({2.0, 2.0}), 1.0);
  CHECK(p(0) == doctest::Approx(3.0));
  CHECK(p(1) == doctest::Approx(0.0));

  // unsorted lambdas rejected
  CHECK_THROWS_AS(prox_sorted_l1(vec({1.0, 1.0}), vec({1.0, 2.0}), 1.0),
                  ContractViolation);
  CHECK_THROWS_AS(prox_sorted_l1(vec({1.0}), vec({1.0, 2.0}), 1.0),
                  ContractViolation);
}

TEST_CASE("prox matches the structure-enumeration oracle") {
  Rng rng(314);
  for (int rep = 0; rep < 60; ++rep) {
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
    CHECK(mine == doctest::Approx(oracle).epsilon(1e-9).scale(1.0));
    CHECK(std::fabs(mine - oracle) < 1e-6);
  }
}

TEST_CASE("prox properties: nonexpansive, order- and sign-preserving") {
  Rng rng(2718);
  for (int rep = 0; rep < 1000; ++rep) {
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
    CHECK((p1 - p2).norm() <= (y1 - y2).norm() + 1e-12);

    for (int a = 0; a < d; ++a) {
      if (p1(a) != 0.0) CHECK(p1(a) * y1(a) > 0.0);  // sign match where nonzero
      for (int b = 0; b < d; ++b)
        if (std::fabs(y1(a)) >= std::fabs(y1(b)))
          CHECK(std::fabs(p1(a)) >= std::fabs(p1(b)) - 1e-12);
    }
  }
}

TEST_CASE("schedules") {
  double a_floor = 20.0 * std::sqrt(6.0);
  LambdaSchedule s = build_schedule(ScheduleKind::slope_logistic, 2, a_floor, 3.0,
                                    kLogistic);
  CHECK(s.lambdas(0) == doctest::Approx(115.362150928070641).epsilon(1e-12));
  CHECK(s.lambdas(1) == doctest::Approx(81.5733592135047174).epsilon(1e-12));
  CHECK_FALSE(s.below_theory_floor);

  LambdaSchedule low = build_schedule(ScheduleKind::slope_logistic, 2, 1.0, 3.0,
                                      kLogistic);
  CHECK(low.below_theory_floor);

  // glm builder with A = 2 * A_logistic reproduces the logistic schedule
  // (family factor sqrt(U) = 1/2 for the Bernoulli case)
  LambdaSchedule glm = build_schedule(ScheduleKind::slope_glm, 5, 2.0 * a_floor,
                                      3.0, kLogistic);
  LambdaSchedule lgs = build_schedule(ScheduleKind::slope_logistic, 5, a_floor,
                                      3.0, kLogistic);
  CHECK((glm.lambdas - lgs.lambdas).cwiseAbs().maxCoeff() < 1e-10);
  CHECK_FALSE(glm.below_theory_floor);
  CHECK(build_schedule(ScheduleKind::slope_glm, 5, 40.0 * std::sqrt(6.0) - 1.0,
                       3.0, kLogistic)
            .below_theory_floor);

  LambdaSchedule lasso = build_schedule(ScheduleKind::lasso, 4, 0.7, 3.0, kLogistic);
  CHECK(lasso.lambdas.minCoeff() == 0.7);
  CHECK(lasso.lambdas.maxCoeff() == 0.7);

  // nonincreasing at several sizes
  for (int d : {1, 2, 7, 100, 10000}) {
    LambdaSchedule sd = build_schedule(ScheduleKind::slope_logistic, d, 1.0, 2.0,
                                       kLogistic);
    for (int j = 1; j < d; ++j) CHECK(sd.lambdas(j) <= sd.lambdas(j - 1));
    CHECK(sd.lambdas(d - 1) > 0.0);
  }

  CHECK_THROWS_AS(build_schedule(ScheduleKind::slope_logistic, 2, 1.0, 1.0, kLogistic),
                  ContractViolation);
  CHECK_THROWS_AS(build_schedule(ScheduleKind::slope_logistic, 0, 1.0, 3.0, kLogistic),
                  ContractViolation);
}

TEST_CASE("slope fit: penalty dominance and normalization contract") {
  Rng rng(5150);
  int n = 30, d = 4;
  Eigen::MatrixXd q = orthonormal_cols(n, d, rng);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = rng.bernoulli(inv_logit(4.0 * q(i, 0)));
  DesignMatrix x{q};

  LambdaSchedule huge = build_schedule(ScheduleKind::slope_logistic, d, 1e6, 3.0,
                                       kLogistic);
  FitResult fit = fit_slope(kLogistic, x, y, huge);
  CHECK(fit.coef.beta.isZero(0.0));

  Eigen::MatrixXd raw = 2.0 * q;
  CHECK_THROWS_AS(fit_slope(kLogistic, DesignMatrix{raw}, y, huge), ContractViolation);
}

TEST_CASE("gaussian orthogonal slope reduces to the prox of X'Y") {
  Rng rng(404);
  int n = 20, d = 5;
  Eigen::MatrixXd q = orthonormal_cols(n, d, rng);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = rng.normal();
  DesignMatrix x{q};

  GlmFamily ga = GlmFamily::gaussian();
  LambdaSchedule sched = build_schedule(ScheduleKind::slope_logistic, d, 0.8, 3.0,
                                        kLogistic);
  SolverConfig cfg;
  cfg.max_iter = 20000;
  cfg.obj_tol = 1e-13;
  FitResult fit = fit_slope(ga, x, y, sched, cfg);

  Eigen::VectorXd target = q.transpose() * y;
  Eigen::VectorXd closed = prox_sorted_l1(target, sched.lambdas, 1.0);
  CHECK((fit.coef.beta - closed).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("logistic slope: monotone objective, self-consistency, convexity") {
  Rng rng(616);
  int n = 40, d = 3;
  Eigen::MatrixXd m(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
  NormalizedDesign norm = unit_normalize_columns(DesignMatrix{m});
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i)
    y(i) = rng.bernoulli(inv_logit(4.0 * norm.x.entries()(i, 0)));

  LambdaSchedule sched = build_schedule(ScheduleKind::slope_logistic, d, 0.3, 3.0,
                                        kLogistic);

  SolverConfig traced;
  traced.keep_trace = true;
  FitResult fit = fit_slope(kLogistic, norm.x, y, sched, traced);
  REQUIRE(fit.solver.converged);
  for (std::size_t i = 1; i < fit.solver.objective_trace.size(); ++i)
    CHECK(fit.solver.objective_trace[i] <= fit.solver.objective_trace[i - 1] + 1e-14);

  SolverConfig longrun;
  longrun.max_iter = 100000;
  longrun.obj_tol = 1e-15;
  FitResult ref = fit_slope(kLogistic, norm.x, y, sched, longrun);
  CHECK(fit.objective == doctest::Approx(ref.objective).epsilon(1e-6));
  CHECK(std::fabs(fit.objective - ref.objective) < 1e-6);

  // convexity certificate around the minimizer
  Rng rng2(617);
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd u(d);
    for (int j = 0; j < d; ++j) u(j) = rng2.normal();
    u.normalize();
    Eigen::VectorXd pert = fit.coef.beta + 1e-4 * u;
    CHECK(fit.objective <=
          slope_objective(kLogistic, norm.x, y, pert, sched.lambdas) + 1e-8);
  }
}

TEST_CASE("slope with an equal-weight schedule matches lasso") {
  Rng rng(88);
  int n = 50, d = 4;
  Eigen::MatrixXd m(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
  NormalizedDesign norm = unit_normalize_columns(DesignMatrix{m});
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i)
    y(i) = rng.bernoulli(inv_logit(5.0 * norm.x.entries()(i, 1)));

  double lambda = 0.4;
  LambdaSchedule flat = build_schedule(ScheduleKind::lasso, d, lambda, 3.0,
                                       kLogistic);
  FitResult s = fit_slope(kLogistic, norm.x, y, flat);
  FitResult l = fit_lasso(kLogistic, norm.x, y, lambda);
  CHECK(std::fabs(s.objective - l.objective) < 1e-6);
}

TEST_CASE("lasso: unpenalized limit and KKT conditions") {
  Rng rng(99);
  int n = 60, d = 3;
  Eigen::MatrixXd m(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
  NormalizedDesign norm = unit_normalize_columns(DesignMatrix{m});
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i)
    y(i) = rng.bernoulli(
        inv_logit(2.0 * norm.x.entries()(i, 0) - 1.0 * norm.x.entries()(i, 2)));

  // lambda = 0 matches the unrestricted MLE
  SolverConfig tight;
  tight.max_iter = 200000;
  tight.obj_tol = 1e-14;
  FitResult l0 = fit_lasso(kLogistic, norm.x, y, 0.0, tight);
  FitResult mle = fit_restricted_mle(kLogistic, norm.x, y, {0, 1, 2});
  CHECK((l0.coef.beta - mle.coef.beta).cwiseAbs().maxCoeff() < 1e-4);

  // KKT residuals at lambda = 0.25
  double lambda = 0.25;
  FitResult fit = fit_lasso(kLogistic, norm.x, y, lambda, tight);
  Eigen::VectorXd p = inv_logit(linear_predictor(norm.x, fit.coef)).values();
  Eigen::VectorXd score = norm.x.entries().transpose() * (y - p);
  for (int j = 0; j < d; ++j) {
    if (fit.coef.beta(j) == 0.0) {
      CHECK(std::fabs(score(j)) <= lambda + 1e-5);
    } else {
      CHECK(score(j) == doctest::Approx(lambda * (fit.coef.beta(j) > 0 ? 1 : -1))
                            .epsilon(1e-4));
      CHECK(std::fabs(score(j) - lambda * (fit.coef.beta(j) > 0 ? 1 : -1)) < 1e-5);
    }
  }

  // huge lambda kills everything
  FitResult dead = fit_lasso(kLogistic, norm.x, y, 1e5);
  CHECK(dead.coef.beta.isZero(0.0));
  CHECK_THROWS_AS(fit_lasso(kLogistic, norm.x, y, -1.0), ContractViolation);
}

TEST_CASE("iteration budget exhaustion is flagged, not thrown") {
  Rng rng(111);
  int n = 30, d = 3;
  Eigen::MatrixXd m(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
  NormalizedDesign norm = unit_normalize_columns(DesignMatrix{m});
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = rng.bernoulli(0.5);

  SolverConfig skimpy;
  skimpy.max_iter = 2;
  FitResult fit = fit_lasso(kLogistic, norm.x, y, 0.01, skimpy);
  CHECK_FALSE(fit.solver.converged);
  CHECK(fit.solver.iterations == 2);
}
