#include "spherelab/expected.hpp"

#include <boost/math/special_functions/legendre.hpp>
#include <cmath>
#include <stdexcept>

#include "spherelab/random.hpp"

namespace spherelab {
namespace {

constexpr int kQuadratureNodes = 256;
constexpr int kMaxQuadratureDim = 10'000;

void require_gap(const ExpectedKernelConstants& k) {
  if (!(k.alpha > k.rho)) {
    throw std::domain_error("expected-kernel formulas need alpha > rho");
  }
}

void require_m(Index m) {
  if (m < 1) throw std::invalid_argument("per-sphere count m must be >= 1");
}

// Uniform unit vector via a normalized Gaussian.
void draw_unit(Rng& rng, Vector& out) {
  for (Index j = 0; j < out.size(); ++j) out(j) = rng.normal();
  out /= out.norm();
}

}  // namespace

QuadratureRule gauss_legendre(int points) {
  if (points < 1) throw std::invalid_argument("quadrature needs at least one node");
  // Boost returns the non-negative zeros in ascending order.
  const auto zeros = boost::math::legendre_p_zeros<double>(points);
  QuadratureRule rule;
  rule.nodes.resize(points);
  rule.weights.resize(points);
  Index k = 0;
  auto weight = [points](double x) {
    const double dp = boost::math::legendre_p_prime(points, x);
    return 2.0 / ((1.0 - x * x) * dp * dp);
  };
  for (auto it = zeros.rbegin(); it != zeros.rend(); ++it) {
    if (*it == 0.0) continue;
    rule.nodes(k) = -*it;
    rule.weights(k) = weight(*it);
    ++k;
  }
  for (double z : zeros) {
    rule.nodes(k) = z;
    rule.weights(k) = weight(z);
    ++k;
  }
  return rule;
}

double compute_alpha(const KernelSpec& spec, int dim) {
  KernelSpec s = spec.bias_free();
  s.input_dim = dim;
  s.validate();
  return bias_free_kernel(s, 1.0, 1.0, 1.0);
}

RhoEstimate compute_rho(const KernelSpec& spec, int dim, RhoMethod method, std::int64_t budget,
                        std::uint64_t seed) {
  if (dim < 2) throw std::invalid_argument("compute_rho needs dim >= 2");
  KernelSpec s = spec.bias_free();
  s.input_dim = dim;
  s.validate();

  if (method == RhoMethod::Quadrature) {
    if (dim > kMaxQuadratureDim) {
      throw std::domain_error("quadrature density underflows for dim > 10^4; use MonteCarlo");
    }
    // Inner product of two uniform unit vectors has density ~ (1 - t^2)^((d-3)/2).
    static const QuadratureRule rule = gauss_legendre(kQuadratureNodes);
    const double exponent = 0.5 * (dim - 3);
    double mass = 0.0;
    double integral = 0.0;
    for (Index i = 0; i < rule.nodes.size(); ++i) {
      const double t = rule.nodes(i);
      const double w = rule.weights(i) * std::pow(1.0 - t * t, exponent);
      mass += w;
      integral += w * bias_free_kernel(s, 1.0, t, 1.0);
    }
    return {integral / mass, 0.0};
  }

  if (budget < 2) throw std::invalid_argument("MonteCarlo rho needs a budget of at least 2 pairs");
  Rng rng(seed);
  Vector a(dim);
  Vector b(dim);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::int64_t i = 0; i < budget; ++i) {
    draw_unit(rng, a);
    draw_unit(rng, b);
    const double v = bias_free_kernel(s, 1.0, a.dot(b), 1.0);
    const double delta = v - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (v - mean);
  }
  const double variance = m2 / static_cast<double>(budget - 1);
  return {mean, std::sqrt(variance / static_cast<double>(budget))};
}

ExpectedKernelConstants expected_constants(const KernelSpec& spec, int dim, RhoMethod method) {
  ExpectedKernelConstants k;
  k.alpha = compute_alpha(spec, dim);
  k.rho = compute_rho(spec, dim, method).value;
  k.dim = dim;
  k.spec = spec.bias_free();
  k.spec.input_dim = dim;
  return k;
}

double expected_gamma_C(Index m, const ExpectedKernelConstants& k, double r1, double r2) {
  require_m(m);
  require_gap(k);
  const double md = static_cast<double>(m);
  const double gap = k.alpha - k.rho;
  const double r1s = r1 * r1;
  const double r2s = r2 * r2;
  const double denominator = gap * gap + 2.0 * md * k.rho * gap;
  return (r2s - r1s) / (r1s * r2s) * (k.rho * md * md + md * gap) / denominator;
}

double expected_s_Cinv(Index m, const ExpectedKernelConstants& k, double r1, double r2) {
  require_m(m);
  require_gap(k);
  const double md = static_cast<double>(m);
  const double gap = k.alpha - k.rho;
  const double r1s = r1 * r1;
  const double r2s = r2 * r2;
  const double product = r1s * r2s;
  const double numerator = md * md * k.rho * (r1 - r2) * (r1 - r2) / product +
                           md * gap * (r1s + r2s) / product;
  return numerator / (gap * gap + 2.0 * md * k.rho * gap);
}

double expected_gamma_K(Index m, const ExpectedKernelConstants& k, double r1, double r2,
                        double beta) {
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
  return expected_gamma_C(m, k, r1, r2) / (1.0 + beta * beta * expected_s_Cinv(m, k, r1, r2));
}

double expected_gamma_limit(double r1, double r2, double beta) {
  if (!(r1 < r2)) throw std::invalid_argument("expected_gamma_limit requires r1 < r2");
  return (r1 + r2) / (beta * beta * (r2 - r1));
}

Matrix build_expected_gram(Index m, const ExpectedKernelConstants& k, double r1, double r2,
                           double beta) {
  require_m(m);
  const Index n = 2 * m;
  const double beta_sq = beta * beta;
  Matrix g(n, n);
  for (Index j = 0; j < n; ++j) {
    const double rj = j < m ? r1 : r2;
    for (Index i = 0; i < n; ++i) {
      const double ri = i < m ? r1 : r2;
      const bool same_block = (i < m) == (j < m);
      double c = ri * rj * k.rho;
      if (same_block && i == j) c = ri * ri * k.alpha;
      g(i, j) = c + beta_sq;
    }
  }
  return g;
}

}  // namespace spherelab
