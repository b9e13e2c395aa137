#pragma once

#include <string_view>

#include "spherelab/types.hpp"

namespace spherelab {

enum class KernelFamily { Nngp, Ntk };

std::string_view to_string(KernelFamily family);
KernelFamily parse_kernel_family(std::string_view text);

/// Infinite-width ReLU kernel under NTK parametrization.
///
/// `depth` counts affine layers, so depth 1 is the linear kernel x'x/d0 and
/// depth 2 has one hidden layer. Hidden layers carry no bias; the only bias is
/// the output bias, which adds output_bias^2 to every kernel entry.
struct KernelSpec {
  KernelFamily family = KernelFamily::Nngp;
  int depth = 1;
  double output_bias = 0.0;
  int input_dim = 1;

  /// Throws std::invalid_argument on a violated field invariant.
  void validate() const;

  KernelSpec with_bias(double beta) const;
  KernelSpec bias_free() const { return with_bias(0.0); }
};

/// 2x2 covariance of a centered Gaussian pair (z1, z2).
struct BivariateGaussianCov {
  double v1 = 0.0;
  double v2 = 0.0;
  double c = 0.0;

  void validate() const;
};

/// E[relu(z1) relu(z2)], the first-order arc-cosine kernel.
double relu_arc_expectation(const BivariateGaussianCov& cov);

/// E[step(z1) step(z2)] = (pi - theta) / (2 pi). Requires v1 * v2 > 0.
double relu_arc_derivative_expectation(const BivariateGaussianCov& cov);

/// Bias-free kernel C(x, x') from the three inner products x'x, x'x', x''x'.
///
/// Both kernel families are dot-product kernels, so this is the whole kernel;
/// kernel_value and gram are thin wrappers around it.
double bias_free_kernel(const KernelSpec& spec, double xx, double xy, double yy);

/// K(x, x') = C(x, x') + output_bias^2.
double kernel_value(const KernelSpec& spec, Point x, Point y);

/// K(a x, x') - a K(x, x') - beta^2 (1 - a). Zero up to rounding for a > 0.
double semi_homogeneity_residual(const KernelSpec& spec, Point x, Point y, double scale);

/// K(X, X). Upper triangle is computed and mirrored, so the result is exactly symmetric.
Matrix gram(const KernelSpec& spec, const PointMatrix& points);

/// K(x, X) as a column with one entry per row of `points`.
Vector kernel_column(const KernelSpec& spec, const PointMatrix& points, Point x);

/// K(A, B), rows indexed by A.
Matrix cross_gram(const KernelSpec& spec, const PointMatrix& a, const PointMatrix& b);

double dot(Point a, Point b);

}  // namespace spherelab
