#include "spherelab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace spherelab {
namespace {

constexpr double kCovarianceTolerance = 1e-12;

// cos(theta) = c / sqrt(v1 v2), clamped against rounding. Values within a few
// ulps of +-1 are snapped to +-1: for parallel inputs (x and a multiple of x)
// the ratio of rounded inner products lands just inside the interval, and
// acos turns that ulp into an angle of order 1e-8.
double clamped_cosine(const BivariateGaussianCov& cov, double scale) {
  constexpr double snap = 8.0 * std::numeric_limits<double>::epsilon();
  const double cosine = cov.c / scale;
  if (cosine >= 1.0 - snap) return 1.0;
  if (cosine <= -1.0 + snap) return -1.0;
  return cosine;
}

void require_same_length(Point x, Point y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("kernel inputs have different lengths (" + std::to_string(x.size()) +
                                " vs " + std::to_string(y.size()) + ")");
  }
}

void require_input_dim(const KernelSpec& spec, Point x) {
  if (x.size() != static_cast<std::size_t>(spec.input_dim)) {
    throw std::invalid_argument("kernel input has length " + std::to_string(x.size()) +
                                ", spec expects " + std::to_string(spec.input_dim));
  }
}

}  // namespace

std::string_view to_string(KernelFamily family) {
  return family == KernelFamily::Nngp ? "nngp" : "ntk";
}

KernelFamily parse_kernel_family(std::string_view text) {
  if (text == "nngp" || text == "NNGP") return KernelFamily::Nngp;
  if (text == "ntk" || text == "NTK") return KernelFamily::Ntk;
  throw std::invalid_argument("unknown kernel family '" + std::string(text) + "'");
}

void KernelSpec::validate() const {
  if (depth < 1) throw std::invalid_argument("kernel depth must be >= 1");
  if (input_dim < 1) throw std::invalid_argument("kernel input_dim must be >= 1");
  if (!(output_bias >= 0.0) || !std::isfinite(output_bias)) {
    throw std::invalid_argument("kernel output_bias must be finite and >= 0");
  }
}

KernelSpec KernelSpec::with_bias(double beta) const {
  KernelSpec copy = *this;
  copy.output_bias = beta;
  return copy;
}

void BivariateGaussianCov::validate() const {
  if (v1 < 0.0 || v2 < 0.0) throw std::invalid_argument("negative variance in bivariate covariance");
  const double bound = v1 * v2;
  if (c * c > bound * (1.0 + kCovarianceTolerance) + 0.0) {
    throw std::invalid_argument("covariance is not positive semidefinite (c^2 > v1 v2)");
  }
}

double relu_arc_expectation(const BivariateGaussianCov& cov) {
  cov.validate();
  const double product = cov.v1 * cov.v2;
  if (product == 0.0) return 0.0;
  const double scale = std::sqrt(product);
  const double cos_theta = clamped_cosine(cov, scale);
  const double theta = std::acos(cos_theta);
  return scale / (2.0 * std::numbers::pi) *
         (std::sin(theta) + (std::numbers::pi - theta) * cos_theta);
}

double relu_arc_derivative_expectation(const BivariateGaussianCov& cov) {
  cov.validate();
  const double product = cov.v1 * cov.v2;
  if (product == 0.0) {
    throw std::domain_error("derivative expectation undefined for a degenerate covariance");
  }
  const double theta = std::acos(clamped_cosine(cov, std::sqrt(product)));
  return (std::numbers::pi - theta) / (2.0 * std::numbers::pi);
}

double bias_free_kernel(const KernelSpec& spec, double xx, double xy, double yy) {
  const double inv_dim = 1.0 / static_cast<double>(spec.input_dim);
  double sxx = xx * inv_dim;
  double syy = yy * inv_dim;
  double sxy = xy * inv_dim;
  double theta = sxy;
  const bool ntk = spec.family == KernelFamily::Ntk;
  for (int layer = 1; layer < spec.depth; ++layer) {
    const BivariateGaussianCov cov{sxx, syy, sxy};
    const double next = relu_arc_expectation(cov);
    if (ntk) {
      // A degenerate pair has an a.s. zero pre-activation, so its gate is 0.
      const double gate = (sxx * syy > 0.0) ? relu_arc_derivative_expectation(cov) : 0.0;
      theta = theta * gate + next;
    }
    sxy = next;
    sxx *= 0.5;
    syy *= 0.5;
  }
  return ntk ? theta : sxy;
}

double dot(Point a, Point b) {
  require_same_length(a, b);
  const Eigen::Map<const Vector> va(a.data(), static_cast<Index>(a.size()));
  const Eigen::Map<const Vector> vb(b.data(), static_cast<Index>(b.size()));
  return va.dot(vb);
}

double kernel_value(const KernelSpec& spec, Point x, Point y) {
  spec.validate();
  require_same_length(x, y);
  require_input_dim(spec, x);
  return bias_free_kernel(spec, dot(x, x), dot(x, y), dot(y, y)) +
         spec.output_bias * spec.output_bias;
}

double semi_homogeneity_residual(const KernelSpec& spec, Point x, Point y, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("semi-homogeneity scale must be > 0");
  std::vector<double> scaled(x.begin(), x.end());
  for (double& v : scaled) v *= scale;
  const double beta_sq = spec.output_bias * spec.output_bias;
  return kernel_value(spec, scaled, y) - scale * kernel_value(spec, x, y) - beta_sq * (1.0 - scale);
}

Matrix gram(const KernelSpec& spec, const PointMatrix& points) {
  spec.validate();
  if (points.cols() != spec.input_dim) {
    throw std::invalid_argument("gram: point dimension does not match spec.input_dim");
  }
  const Index n = points.rows();
  const double beta_sq = spec.output_bias * spec.output_bias;
  Vector norms(n);
  for (Index i = 0; i < n; ++i) norms(i) = dot(row_of(points, i), row_of(points, i));
  Matrix k(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i <= j; ++i) {
      const double value =
          bias_free_kernel(spec, norms(i), dot(row_of(points, i), row_of(points, j)), norms(j)) +
          beta_sq;
      k(i, j) = value;
      k(j, i) = value;
    }
  }
  return k;
}

Vector kernel_column(const KernelSpec& spec, const PointMatrix& points, Point x) {
  spec.validate();
  require_input_dim(spec, x);
  if (points.cols() != spec.input_dim) {
    throw std::invalid_argument("kernel_column: point dimension does not match spec.input_dim");
  }
  const double beta_sq = spec.output_bias * spec.output_bias;
  const double xx = dot(x, x);
  Vector column(points.rows());
  for (Index i = 0; i < points.rows(); ++i) {
    const Point p = row_of(points, i);
    column(i) = bias_free_kernel(spec, dot(p, p), dot(p, x), xx) + beta_sq;
  }
  return column;
}

Matrix cross_gram(const KernelSpec& spec, const PointMatrix& a, const PointMatrix& b) {
  Matrix k(a.rows(), b.rows());
  for (Index j = 0; j < b.rows(); ++j) k.col(j) = kernel_column(spec, a, row_of(b, j));
  return k;
}

}  // namespace spherelab
