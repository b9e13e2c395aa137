#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "spherelab/regression.hpp"

using namespace spherelab;

namespace {

SpheresDataset sampled(Index n, std::uint64_t seed, int dim = 100) {
  SpheresConfig config;
  config.dim = dim;
  config.seed = seed;
  return sample(config, n);
}

/// One inner point at r1 e1 (label +1) and one outer point at -r2 e1 (label -1).
SpheresDataset antipodal_pair(int dim) {
  SpheresConfig config;
  config.dim = dim;
  SpheresDataset data;
  data.config = config;
  data.X = PointMatrix::Zero(2, dim);
  data.X(0, 0) = config.r1;
  data.X(1, 0) = -config.r2;
  data.y = Vector(2);
  data.y << 1.0, -1.0;
  return data;
}

}  // namespace

TEST_CASE("fit: two-point interpolation") {
  const SpheresDataset data = antipodal_pair(5);
  for (auto family : {KernelFamily::Nngp, KernelFamily::Ntk}) {
    for (int depth = 1; depth <= 4; ++depth) {
      const Predictor p = Predictor::fit({family, depth, 0.7, 5}, data);
      CHECK(p.interpolation_residual() <= 1e-10);
      CHECK(p.predict(data.point(0)) == doctest::Approx(1.0).epsilon(1e-8));
      CHECK(p.predict(data.point(1)) == doctest::Approx(-1.0).epsilon(1e-8));
    }
  }
}

TEST_CASE("fit: 2x2 inverse oracle for gamma and predictions") {
  const SpheresDataset data = antipodal_pair(5);
  const KernelSpec spec{KernelFamily::Ntk, 3, 0.5, 5};
  const Predictor p = Predictor::fit(spec, data);
  const double a = kernel_value(spec, data.point(0), data.point(0));
  const double b = kernel_value(spec, data.point(0), data.point(1));
  const double c = kernel_value(spec, data.point(1), data.point(1));
  const double det = a * c - b * b;
  CHECK(p.gamma() == doctest::Approx((c - a) / det).epsilon(1e-12));

  // Midpoint direction e2 at unit norm.
  const Vector mid = Vector::Unit(5, 1);
  const double k1 = kernel_value(spec, as_point(mid), data.point(0));
  const double k2 = kernel_value(spec, as_point(mid), data.point(1));
  const double expected = (k1 * (c + b) - k2 * (a + b)) / det;
  CHECK(p.predict(as_point(mid)) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("fit: symmetric two-point Gram gives gamma = 0") {
  // Equal norms make a = c, hence gamma = (c - a) / det = 0.
  SpheresConfig config;
  config.dim = 4;
  SpheresDataset data;
  data.config = config;
  config.balance = Balance::Bernoulli;
  data.config = config;
  data.X = PointMatrix::Zero(2, 4);
  data.X(0, 0) = 1.0;
  data.X(1, 1) = 1.0;
  data.y = Vector(2);
  data.y << 1.0, -1.0;
  const Predictor p = Predictor::fit({KernelFamily::Nngp, 2, 0.0, 4}, data);
  CHECK(std::abs(p.gamma()) <= 1e-12);
  CHECK(std::abs(bias_capacity_limit(p)) <= 1e-12);
}

TEST_CASE("fit: 256 points, NNGP depth 3, bias 1 fits the training set") {
  const SpheresDataset data = sampled(256, 31);
  const Predictor p = Predictor::fit({KernelFamily::Nngp, 3, 1.0, 100}, data);
  CHECK(p.jitter_used() == 0.0);
  CHECK(p.interpolation_residual() <= 1e-8);
  CHECK(accuracy(p, data).value == 1.0);
  for (Index i = 0; i < data.size(); i += 17) {
    CHECK(p.predict(data.point(i)) == doctest::Approx(data.y(i)).epsilon(1e-8));
  }
  // gamma = 1' K^-1 y = y' K^-1 1
  CHECK(p.gamma() == doctest::Approx(data.y.dot(p.ones_solution())).epsilon(1e-10));
}

TEST_CASE("fit: duplicated rows are reported") {
  SpheresDataset data = sampled(8, 2, 10);
  data.X.row(3) = data.X.row(1);
  data.y(3) = data.y(1);
  try {
    (void)Predictor::fit({KernelFamily::Nngp, 2, 0.0, 10}, data);
    FAIL("expected SingularGramError");
  } catch (const SingularGramError& e) {
    CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
  }
}

TEST_CASE("fit and predict: argument errors") {
  const SpheresDataset data = sampled(8, 2, 10);
  CHECK_THROWS_AS(Predictor::fit({KernelFamily::Nngp, 2, 0.0, 11}, data), std::invalid_argument);
  const Predictor p = Predictor::fit({KernelFamily::Nngp, 2, 0.0, 10}, data);
  const Vector short_x = Vector::Ones(9);
  CHECK_THROWS_AS(p.predict(as_point(short_x)), std::invalid_argument);
  CHECK_THROWS_AS(accuracy_of(Vector::Ones(3), Vector::Ones(4)), std::invalid_argument);
}

namespace {

/// Balanced data in which each outer point mirrors an inner one,
/// x_{m+i} = -(r2/r1) x_i, with r2 = 1 + eps.
SpheresDataset mirrored(double eps, SpheresDataset* unpaired = nullptr) {
  SpheresConfig config;
  config.dim = 100;
  config.r2 = 1.0 + eps;
  config.seed = 77;
  const SpheresDataset drawn = sample(config, 64);
  if (unpaired != nullptr) *unpaired = drawn;
  SpheresDataset data = drawn;
  for (Index i = 0; i < 32; ++i) data.X.row(32 + i) = -(config.r2 / config.r1) * drawn.X.row(i);
  return data;
}

}  // namespace

TEST_CASE("gamma vanishes as the radii merge on label-symmetric data") {
  // The mirrored Gram is [[A, B], [B, A']] with A' -> A as eps -> 0. Swapping
  // the halves maps 1 to 1 and y to -y, so gamma = y' K^-1 1 is O(eps).
  const KernelSpec spec{KernelFamily::Nngp, 3, 0.0, 100};
  std::vector<double> slopes;
  for (double eps : {1e-5, 1e-6, 1e-7}) {
    const SpheresDataset data = mirrored(eps);
    REQUIRE_NOTHROW(data.check_invariants());
    slopes.push_back(Predictor::fit(spec, data).gamma() / eps);
  }
  CHECK(slopes[1] == doctest::Approx(slopes[0]).epsilon(1e-2));
  CHECK(slopes[2] == doctest::Approx(slopes[0]).epsilon(1e-2));
  CHECK(std::abs(Predictor::fit(spec, mirrored(1e-8)).gamma()) <= 1e-3);

  // Without the mirror symmetry there is no such limit: labels become
  // independent of position and gamma stays of order one or larger.
  SpheresDataset unpaired;
  (void)mirrored(1e-6, &unpaired);
  CHECK(std::abs(Predictor::fit(spec, unpaired).gamma()) > 1.0);
}

TEST_CASE("projection identity") {
  const SpheresDataset data = sampled(64, 5);
  SUBCASE("no bias: pure rescaling") {
    const Predictor p = Predictor::fit({KernelFamily::Ntk, 3, 0.0, 100}, data);
    for (Index i = 0; i < 4; ++i) {
      const auto [direct, formula] = projection_prediction_identity(p, data.point(i));
      CHECK(direct == doctest::Approx(1.11 * p.predict(data.point(i))).epsilon(1e-12));
      CHECK(direct == doctest::Approx(formula).epsilon(1e-12));
    }
  }
  SUBCASE("bias 1") {
    const Predictor p = Predictor::fit({KernelFamily::Nngp, 2, 1.0, 100}, data);
    for (Index i = 0; i < data.size(); ++i) {
      const auto [direct, formula] = projection_prediction_identity(p, data.point(i));
      CHECK(std::abs(direct - formula) <= 1e-8 * std::max(1.0, std::abs(direct)));
    }
    const SpheresDataset fresh = sampled(100, 6);
    for (Index i = 0; i < fresh.size(); ++i) {
      const auto [direct, formula] = projection_prediction_identity(p, fresh.point(i));
      CHECK(std::abs(direct - formula) <= 1e-8 * std::max(1.0, std::abs(direct)));
    }
    const Vector off = Vector::Unit(100, 0) * 1.05;
    CHECK_THROWS_AS(projection_prediction_identity(p, as_point(off)), std::invalid_argument);
  }
}

TEST_CASE("predict_regime thresholds") {
  const PhaseReport low = predict_regime(5.0, 1.0, 1.11, 1.0, 0.5);
  CHECK(low.threshold_low == doctest::Approx(1.0 / 0.11).epsilon(1e-12));
  CHECK(low.threshold_high == doctest::Approx(1.11 / 0.11).epsilon(1e-12));
  CHECK(low.threshold_low == doctest::Approx(9.0909).epsilon(1e-5));
  CHECK(low.threshold_high == doctest::Approx(10.0909).epsilon(1e-5));
  CHECK(low.predicted_regime == Regime::Zero);
  CHECK(predict_regime(9.5, 1.0, 1.11, 1.0, 0.5).predicted_regime == Regime::OneMinusQ);
  CHECK(predict_regime(11.0, 1.0, 1.11, 1.0, 0.5).predicted_regime == Regime::One);
  // Boundary values go to the larger regime.
  CHECK(predict_regime(low.threshold_low, 1.0, 1.11, 1.0, 0.5).predicted_regime == Regime::OneMinusQ);
  CHECK(predict_regime(low.threshold_high, 1.0, 1.11, 1.0, 0.5).predicted_regime == Regime::One);
  // Thresholds scale with 1 / zeta^2.
  CHECK(predict_regime(0.0, 1.0, 1.11, 2.0, 0.5).threshold_low == doctest::Approx(1.0 / 0.44));
  const PhaseReport none = predict_regime(1e9, 1.0, 1.11, 0.0, 0.5);
  CHECK(none.predicted_regime == Regime::Zero);
  CHECK(std::isinf(none.threshold_low));
  CHECK(regime_accuracy(Regime::OneMinusQ, 0.3) == doctest::Approx(0.7));
  CHECK(regime_accuracy(Regime::One, 0.3) == 1.0);
  CHECK(regime_accuracy(Regime::Zero, 0.3) == 0.0);
  CHECK_THROWS_AS(predict_regime(1.0, 1.11, 1.0, 1.0, 0.5), std::invalid_argument);
}

TEST_CASE("accuracy: sign(0) = +1 and tie counting") {
  Vector predictions(4);
  predictions << 0.0, -2.0, 1e-13, 3.0;
  Vector labels(4);
  labels << 1.0, -1.0, -1.0, -1.0;
  const Accuracy acc = accuracy_of(predictions, labels);
  CHECK(acc.value == doctest::Approx(0.5));
  CHECK(acc.ties == 2);
}

TEST_CASE("adversarial accuracy is quantized and matches the predicted regime") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const SpheresDataset data = sampled(128, seed);
    const SpheresDataset adv = adversarial_set(data);
    for (double beta : {0.1, 1.0, 3.0}) {
      const KernelSpec spec{KernelFamily::Nngp, 5, beta, 100};
      const Predictor p = Predictor::fit(spec, data);
      const Accuracy acc = adversarial_accuracy(p, adv);
      CAPTURE(seed);
      CAPTURE(beta);
      CAPTURE(p.gamma());
      CHECK(acc.ties == 0);
      const bool quantized = acc.value == 0.0 || acc.value == 0.5 || acc.value == 1.0;
      CHECK(quantized);
      const PhaseReport report = predict_regime(p.gamma(), 1.0, 1.11, beta, 0.5);
      if (report.margin() > 1e-6) CHECK(acc.value == regime_accuracy(report.predicted_regime, 0.5));
    }
  }
}

TEST_CASE("bias isolation: gamma, capacity limit and shifted weights") {
  const SpheresDataset data = sampled(64, 8);
  const KernelSpec base{KernelFamily::Ntk, 3, 0.0, 100};
  const Predictor c = Predictor::fit(base, data);
  CHECK(gamma_bias_isolated(c, 0.0) == c.gamma());

  const Predictor k = Predictor::fit(base.with_bias(1.0), data);
  CHECK(gamma_bias_isolated(c, 1.0) == doctest::Approx(k.gamma()).epsilon(1e-8));

  const Vector shifted = bias_shifted_alpha(c, 1.0);
  CHECK((shifted - k.alpha()).norm() <= 1e-8 * k.alpha().norm());
  const SpheresDataset fresh = sampled(10, 9);
  const Matrix cross = cross_gram(base, fresh.X, data.X);
  const Vector via_update = cross * shifted + Vector::Constant(10, shifted.sum());
  CHECK((via_update - k.predict_all(fresh.X)).cwiseAbs().maxCoeff() <= 1e-8);

  const double limit = bias_capacity_limit(c);
  const double big = 1e4;
  CHECK(big * big * gamma_bias_isolated(c, big) == doctest::Approx(limit).epsilon(1e-2));

  double previous = -std::numeric_limits<double>::infinity();
  for (double beta : {0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0}) {
    const double g = beta * beta * gamma_bias_isolated(c, beta);
    CHECK(g > previous);
    previous = g;
  }
  CHECK_THROWS_AS(gamma_bias_isolated(k, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(bias_capacity_limit(k), std::invalid_argument);
}
