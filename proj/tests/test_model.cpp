#include <doctest.h>

#include <cmath>

#include "slr/model.hpp"
#include "slr/rng.hpp"

using namespace slr;

TEST_CASE("family instances") {
  GlmFamily lg = GlmFamily::logistic();
  CHECK(lg.b(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(lg.scale_a == 1.0);
  CHECK(lg.variance_upper_U() == 0.25);

  // L = delta(1-delta), delta = 1/(1+e^{C0})
  double c0 = 2.0;
  double delta = 1.0 / (1.0 + std::exp(c0));
  CHECK(lg.variance_lower_L(c0) == doctest::Approx(delta * (1 - delta)).epsilon(1e-15));

  // convexity of b
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    double t = rng.uniform(-30.0, 30.0);
    CHECK(lg.b_double_prime(t) >= 0.0);
    CHECK(lg.b_double_prime(t) <= 0.25 + 1e-15);
  }

  GlmFamily ga = GlmFamily::gaussian(2.0);
  CHECK(ga.b(3.0) == 4.5);
  CHECK(ga.b_prime(3.0) == 3.0);
  CHECK(ga.b_double_prime(3.0) == 1.0);
  CHECK(ga.variance_upper_U() == 1.0);
  CHECK(ga.variance_lower_L(5.0) == 1.0);
  CHECK_THROWS_AS(GlmFamily::gaussian(0.0), ContractViolation);
}

TEST_CASE("linear predictor") {
  DesignMatrix eye{Eigen::MatrixXd::Identity(2, 2)};
  CoefVector beta{(Eigen::VectorXd(2) << 1.0, -1.0).finished()};
  Eigen::VectorXd t = linear_predictor(eye, beta);
  CHECK(t(0) == 1.0);
  CHECK(t(1) == -1.0);

  CoefVector zero = CoefVector::zeros(2);
  Eigen::VectorXd tz = linear_predictor(eye, zero);
  CHECK(tz.isZero(0.0));

  Eigen::MatrixXd m(2, 2);
  m << 1, 2, 3, 4;
  DesignMatrix x{m};
  CoefVector ones{(Eigen::VectorXd(2) << 1.0, 1.0).finished()};
  Eigen::VectorXd t2 = linear_predictor(x, ones);
  CHECK(t2(0) == 3.0);
  CHECK(t2(1) == 7.0);

  CoefVector wrong{(Eigen::VectorXd(3) << 1.0, 1.0, 1.0).finished()};
  CHECK_THROWS_AS(linear_predictor(x, wrong), ContractViolation);
}

TEST_CASE("inv_logit") {
  CHECK(inv_logit(0.0) == 0.5);
  CHECK(std::fabs(inv_logit(40.0) - 1.0) < 1e-15);
  CHECK(inv_logit(std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-15));

  // inv_logit . logit = identity on (delta, 1-delta)
  for (double p = 0.05; p < 0.96; p += 0.05)
    CHECK(inv_logit(logit(p)) == doctest::Approx(p).epsilon(1e-12));

  CHECK_THROWS_AS(logit(0.0), ContractViolation);
  CHECK_THROWS_AS(logit(1.0), ContractViolation);
}

TEST_CASE("log likelihood") {
  GlmFamily lg = GlmFamily::logistic();
  int n = 7;
  DesignMatrix x{Eigen::MatrixXd::Random(n, 3)};
  Eigen::VectorXd y(n);
  y << 1, 0, 1, 1, 0, 0, 1;
  CHECK(log_likelihood(lg, x, CoefVector::zeros(3), y) ==
        doctest::Approx(-n * std::log(2.0)).epsilon(1e-14));

  // n=1, theta = ln 3, Y=1 -> ln(0.75)
  DesignMatrix one{Eigen::MatrixXd::Ones(1, 1)};
  CoefVector b{(Eigen::VectorXd(1) << std::log(3.0)).finished()};
  Eigen::VectorXd y1(1);
  y1 << 1;
  CHECK(log_likelihood(lg, one, b, y1) ==
        doctest::Approx(-0.287682072451780927).epsilon(1e-14));

  Eigen::VectorXd ybad(1);
  ybad << 0.5;
  CHECK_THROWS_AS(log_likelihood(lg, one, b, ybad), ContractViolation);

  // gaussian: theta = y is the componentwise maximum
  GlmFamily ga = GlmFamily::gaussian();
  Eigen::VectorXd yg(3);
  yg << 0.3, -1.2, 2.0;
  double at_opt = log_likelihood_theta(ga, yg, yg);
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    Eigen::VectorXd pert = yg;
    pert(static_cast<Eigen::Index>(rng.uniform_int(3))) += rng.uniform(-1.0, 1.0);
    CHECK(log_likelihood_theta(ga, pert, yg) <= at_opt + 1e-12);
  }

  // concavity along random segments (logistic)
  Rng rng2(11);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd ta = Eigen::VectorXd::NullaryExpr(5, [&](Eigen::Index) {
      return rng2.uniform(-4.0, 4.0);
    });
    Eigen::VectorXd tb = Eigen::VectorXd::NullaryExpr(5, [&](Eigen::Index) {
      return rng2.uniform(-4.0, 4.0);
    });
    Eigen::VectorXd yy = Eigen::VectorXd::NullaryExpr(5, [&](Eigen::Index) {
      return static_cast<double>(rng2.bernoulli(0.5));
    });
    double mid = log_likelihood_theta(lg, ((ta + tb) / 2).eval(), yy);
    double avg = 0.5 * (log_likelihood_theta(lg, ta, yy) +
                        log_likelihood_theta(lg, tb, yy));
    CHECK(mid >= avg - 1e-12);
  }
}

TEST_CASE("kl divergence") {
  auto pv = [](std::initializer_list<double> vals) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
    Eigen::Index i = 0;
    for (double x : vals) v(i++) = x;
    return ProbVector(v);
  };

  ProbVector p = pv({0.3, 0.6, 0.9});
  CHECK(kl_divergence(p, p) == 0.0);

  CHECK(kl_divergence(pv({0.5}), pv({0.25})) ==
        doctest::Approx(0.143841036225890464).epsilon(1e-14));

  // asymmetry witness
  ProbVector a = pv({0.2, 0.7});
  ProbVector b = pv({0.5, 0.5});
  CHECK(kl_divergence(a, b) != kl_divergence(b, a));

  // nonnegativity, zero iff equal
  Rng rng(5);
  for (int rep = 0; rep < 200; ++rep) {
    Eigen::VectorXd u(4), v(4);
    for (int i = 0; i < 4; ++i) {
      u(i) = rng.uniform(0.02, 0.98);
      v(i) = rng.uniform(0.02, 0.98);
    }
    double kl = kl_divergence(ProbVector(u), ProbVector(v));
    CHECK(kl >= 0.0);
    if ((u - v).cwiseAbs().maxCoeff() > 1e-3) CHECK(kl > 0.0);
  }

  CHECK_THROWS_AS(kl_divergence(pv({0.5}), pv({1.0})), DivergentKlError);
  CHECK_THROWS_AS(kl_divergence(pv({0.5}), pv({0.0})), DivergentKlError);
}

TEST_CASE("glm kl") {
  GlmFamily lg = GlmFamily::logistic();
  Eigen::VectorXd t0(1), t1(1);
  t0 << 0.0;
  t1 << std::log(1.0 / 3.0);
  CHECK(glm_kl(lg, t0, t0) == 0.0);
  CHECK(glm_kl(lg, t0, t1) == doctest::Approx(0.143841036225890464).epsilon(1e-14));

  // logistic glm_kl == bernoulli kl of the induced probabilities
  Rng rng(17);
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd ta(6), tb(6);
    for (int i = 0; i < 6; ++i) {
      ta(i) = rng.uniform(-3.0, 3.0);
      tb(i) = rng.uniform(-3.0, 3.0);
    }
    double kl1 = glm_kl(lg, ta, tb);
    double kl2 = kl_divergence(inv_logit(ta), inv_logit(tb));
    CHECK(kl1 == doctest::Approx(kl2).epsilon(1e-12));
  }

  // gaussian, a=1: ||t - s||^2 / (2n)
  GlmFamily ga = GlmFamily::gaussian();
  Eigen::VectorXd ta(3), tb(3);
  ta << 1.0, -2.0, 0.5;
  tb << 0.0, 1.0, 0.5;
  CHECK(glm_kl(ga, ta, tb) ==
        doctest::Approx((ta - tb).squaredNorm() / 6.0).epsilon(1e-14));
}

TEST_CASE("KL / l2 sandwich under the theta box") {
  GlmFamily lg = GlmFamily::logistic();
  const double c0 = 3.0;
  const double L = lg.variance_lower_L(c0);
  const double U = lg.variance_upper_U();
  Rng rng(23);
  int violations = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = 16;
    Eigen::VectorXd t(n), s(n);
    for (int i = 0; i < n; ++i) {
      t(i) = rng.uniform(-c0, c0);
      s(i) = rng.uniform(-c0, c0);
    }
    double kl = glm_kl(lg, t, s);
    double q = (t - s).squaredNorm() / n;
    if (!(L / 2.0 * q <= kl * (1 + 1e-12) + 1e-15)) ++violations;
    if (!(kl <= U / 2.0 * q * (1 + 1e-12) + 1e-15)) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("bernoulli hellinger") {
  double h = 0.3;
  CHECK(bernoulli_hellinger_sq(0.5 + h, 0.5 - h) ==
        doctest::Approx(0.2).epsilon(1e-15));
  CHECK(bernoulli_hellinger_sq(0.37, 0.37) == doctest::Approx(0.0).epsilon(1e-15));

  // H^2 >= (p1-p2)^2 / 2 on a grid
  for (int i = 1; i < 10; ++i)
    for (int j = 1; j < 10; ++j) {
      double p1 = i / 10.0, p2 = j / 10.0;
      CHECK(bernoulli_hellinger_sq(p1, p2) >= (p1 - p2) * (p1 - p2) / 2.0 - 1e-15);
    }

  CHECK_THROWS_AS(bernoulli_hellinger_sq(0.0, 0.5), ContractViolation);
}

TEST_CASE("design matrix metadata") {
  Eigen::MatrixXd m(2, 2);
  m << 1, 2, 2, 4;
  DesignMatrix x{m};
  CHECK(x.rank() == 1);
  CHECK_FALSE(x.columns_unit_normalized());

  DesignMatrix eye{Eigen::MatrixXd::Identity(3, 3)};
  CHECK(eye.rank() == 3);
  CHECK(eye.columns_unit_normalized());
  CHECK(eye.sigma_max() == doctest::Approx(1.0));
  CHECK(eye.sigma_min() == doctest::Approx(1.0));
}

TEST_CASE("prob vector and coef vector") {
  Eigen::VectorXd p(3);
  p << 0.0, 0.5, 1.0;
  ProbVector pv{p};
  CHECK_FALSE(pv.within_box(0.05));
  ProbVector cl = pv.clamped(1e-12);
  CHECK(cl[0] == 1e-12);
  CHECK(cl[2] == 1.0 - 1e-12);
  CHECK(ProbVector{(Eigen::VectorXd(1) << 0.3).finished()}.within_box(0.05));

  Eigen::VectorXd bad(1);
  bad << 1.5;
  CHECK_THROWS_AS(ProbVector{bad}, ContractViolation);

  Eigen::VectorXd b(4);
  b << 0.0, 2.0, 0.0, -1.0;
  CoefVector cv{b};
  CHECK(cv.support == std::vector<int>{1, 3});
  CHECK(cv.l0() == 2);
}
