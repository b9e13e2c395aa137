#include <doctest.h>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "spherelab/expected.hpp"

using namespace spherelab;

namespace {

constexpr double r1 = 1.0;
constexpr double r2 = 1.11;

Vector balanced_labels(Index m) {
  Vector y(2 * m);
  y.head(m).setOnes();
  y.tail(m).setConstant(-1.0);
  return y;
}

double relative(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("alpha: diagonal of the bias-free kernel") {
  CHECK(compute_alpha({KernelFamily::Nngp, 1, 0.0, 100}, 100) == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(compute_alpha({KernelFamily::Nngp, 2, 0.0, 100}, 100) == doctest::Approx(0.005).epsilon(1e-14));
  CHECK(compute_alpha({KernelFamily::Ntk, 2, 0.0, 100}, 100) == doctest::Approx(0.01).epsilon(1e-14));
  // The output bias is ignored.
  CHECK(compute_alpha({KernelFamily::Ntk, 2, 5.0, 100}, 100) == doctest::Approx(0.01).epsilon(1e-14));
}

TEST_CASE("gauss_legendre integrates polynomials of degree 2n - 1 exactly") {
  const QuadratureRule rule = gauss_legendre(5);
  CHECK(rule.weights.sum() == doctest::Approx(2.0).epsilon(1e-14));
  double x8 = 0.0, x9 = 0.0;
  for (Index i = 0; i < 5; ++i) {
    x8 += rule.weights(i) * std::pow(rule.nodes(i), 8);
    x9 += rule.weights(i) * std::pow(rule.nodes(i), 9);
  }
  CHECK(x8 == doctest::Approx(2.0 / 9.0).epsilon(1e-14));
  CHECK(std::abs(x9) <= 1e-15);
  CHECK_THROWS_AS(gauss_legendre(0), std::invalid_argument);
}

TEST_CASE("rho: symmetry, Monte Carlo agreement and domain errors") {
  CHECK(std::abs(compute_rho({KernelFamily::Nngp, 1, 0.0, 100}, 100).value) <= 1e-15);
  CHECK(std::abs(compute_rho({KernelFamily::Nngp, 1, 0.0, 7}, 7).value) <= 1e-15);
  for (const KernelSpec spec : {KernelSpec{KernelFamily::Nngp, 2, 0.0, 100}, KernelSpec{KernelFamily::Ntk, 3, 0.0, 100}}) {
    const RhoEstimate quad = compute_rho(spec, 100);
    const RhoEstimate mc = compute_rho(spec, 100, RhoMethod::MonteCarlo, 1'000'000, 21);
    CAPTURE(spec.depth);
    CHECK(quad.standard_error == 0.0);
    CHECK(mc.standard_error > 0.0);
    CHECK(std::abs(quad.value - mc.value) <= 3.0 * mc.standard_error);
    CHECK(std::abs(quad.value) <= compute_alpha(spec, 100));
  }
  CHECK_THROWS_AS(compute_rho({KernelFamily::Nngp, 2, 0.0, 20000}, 20000), std::domain_error);
  CHECK_NOTHROW(compute_rho({KernelFamily::Nngp, 2, 0.0, 20000}, 20000, RhoMethod::MonteCarlo, 100));
  CHECK_THROWS_AS(compute_rho({KernelFamily::Nngp, 2, 0.0, 1}, 1), std::invalid_argument);
}

TEST_CASE("build_expected_gram: structure") {
  const ExpectedKernelConstants k = expected_constants({KernelFamily::Ntk, 3, 0.0, 100}, 100);
  const double beta = 0.7;
  const Matrix one = build_expected_gram(1, k, r1, r2, beta);
  REQUIRE(one.rows() == 2);
  CHECK(one(0, 0) == doctest::Approx(r1 * r1 * k.alpha + beta * beta));
  CHECK(one(1, 1) == doctest::Approx(r2 * r2 * k.alpha + beta * beta));
  CHECK(one(0, 1) == doctest::Approx(r1 * r2 * k.rho + beta * beta));
  CHECK(one(1, 0) == one(0, 1));

  const Index m = 16;
  const Matrix g = build_expected_gram(m, k, r1, r2, beta);
  // 1_m stacked per block spans an invariant subspace: G [a 1; b 1] stays in it.
  Vector v(2 * m);
  v.head(m).setConstant(0.3);
  v.tail(m).setConstant(-1.7);
  const Vector gv = g * v;
  CHECK((gv.head(m).array() - gv(0)).abs().maxCoeff() <= 1e-14);
  CHECK((gv.tail(m).array() - gv(m)).abs().maxCoeff() <= 1e-14);
  // Within-block contrasts are eigenvectors with eigenvalue r^2 (alpha - rho).
  Vector contrast = Vector::Zero(2 * m);
  contrast(0) = 1.0;
  contrast(1) = -1.0;
  CHECK(((g * contrast) - r1 * r1 * (k.alpha - k.rho) * contrast).norm() <= 1e-14);
  const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(g, Eigen::EigenvaluesOnly).eigenvalues()(0);
  CHECK(min_eig >= -1e-10 * g.trace());
}

TEST_CASE("closed forms at m = 1 match the explicit 2x2 inverse") {
  const ExpectedKernelConstants k = expected_constants({KernelFamily::Nngp, 3, 0.0, 100}, 100);
  const double a = r1 * r1 * k.alpha, c = r2 * r2 * k.alpha, b = r1 * r2 * k.rho;
  const double det = a * c - b * b;
  CHECK(expected_gamma_C(1, k, r1, r2) == doctest::Approx((c - a) / det).epsilon(1e-12));
  CHECK(expected_s_Cinv(1, k, r1, r2) == doctest::Approx((a + c - 2 * b) / det).epsilon(1e-12));
  const double expected =
      (r2 * r2 - r1 * r1) / (r1 * r1 * r2 * r2) * k.alpha / ((k.alpha - k.rho) * (k.alpha + k.rho));
  CHECK(expected_gamma_C(1, k, r1, r2) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("closed forms match dense solves on the expected Gram") {
  for (const KernelSpec spec : {KernelSpec{KernelFamily::Nngp, 3, 0.0, 100}, KernelSpec{KernelFamily::Ntk, 2, 0.0, 100}}) {
    const ExpectedKernelConstants k = expected_constants(spec, 100);
    for (Index m = 1; m <= 256; m *= 2) {
      const Vector y = balanced_labels(m);
      const Vector ones = Vector::Ones(2 * m);
      const Eigen::LLT<Matrix> c_factor(build_expected_gram(m, k, r1, r2, 0.0));
      CAPTURE(m);
      CHECK(relative(expected_gamma_C(m, k, r1, r2), ones.dot(c_factor.solve(y))) <= 1e-8);
      CHECK(relative(expected_s_Cinv(m, k, r1, r2), ones.dot(c_factor.solve(ones))) <= 1e-8);
      for (double beta : {0.1, 1.0}) {
        const Eigen::LLT<Matrix> k_factor(build_expected_gram(m, k, r1, r2, beta));
        CHECK(relative(expected_gamma_K(m, k, r1, r2, beta), ones.dot(k_factor.solve(y))) <= 1e-8);
      }
    }
  }
}

TEST_CASE("equal radii") {
  const ExpectedKernelConstants k = expected_constants({KernelFamily::Nngp, 3, 0.0, 100}, 100);
  for (Index m : {1, 5, 64}) {
    CHECK(expected_gamma_C(m, k, 1.0, 1.0) == 0.0);
    const double d = k.alpha - k.rho;
    const double s = static_cast<double>(m) * d * 2.0 / (d * d + 2.0 * m * k.rho * d);
    CHECK(expected_s_Cinv(m, k, 1.0, 1.0) == doctest::Approx(s).epsilon(1e-12));
    const Vector ones = Vector::Ones(2 * m);
    const Eigen::LLT<Matrix> factor(build_expected_gram(m, k, 1.0, 1.0, 0.0));
    CHECK(relative(expected_s_Cinv(m, k, 1.0, 1.0), ones.dot(factor.solve(ones))) <= 1e-8);
  }
}

TEST_CASE("expected gamma_K increases with m towards its limit") {
  const ExpectedKernelConstants k = expected_constants({KernelFamily::Ntk, 3, 0.0, 100}, 100);
  double previous = -1.0;
  for (Index m = 1; m <= (1 << 20); m *= 2) {
    const double g = expected_gamma_K(m, k, r1, r2, 1.0);
    CHECK(g >= previous);
    previous = g;
  }
  const double limit = expected_gamma_limit(r1, r2, 1.0);
  CHECK(limit == doctest::Approx(2.11 / 0.11).epsilon(1e-12));
  CHECK(limit == doctest::Approx(19.1818).epsilon(1e-5));
  CHECK(relative(expected_gamma_K(1'000'000, k, r1, r2, 1.0), limit) <= 1e-2);
  CHECK(std::isinf(expected_gamma_limit(r1, r2, 0.0)));
}

TEST_CASE("degenerate constants are refused") {
  ExpectedKernelConstants k;
  k.alpha = 1.0;
  k.rho = 1.0;
  CHECK_THROWS_AS(expected_gamma_C(4, k, r1, r2), std::domain_error);
  CHECK_THROWS_AS(expected_s_Cinv(4, k, r1, r2), std::domain_error);
  k.rho = 0.5;
  CHECK_THROWS_AS(expected_gamma_C(0, k, r1, r2), std::invalid_argument);
  CHECK_THROWS_AS(expected_gamma_K(4, k, r1, r2, -1.0), std::invalid_argument);
}
