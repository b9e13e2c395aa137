#pragma once

#include <cstdint>

#include "spherelab/kernels.hpp"

namespace spherelab {

/// alpha = C(x, x) for unit x and rho = E[C(x, x')] for independent uniform
/// unit vectors, both for the bias-free kernel. These two numbers determine the
/// expected Gram matrix of a balanced two-sphere sample.
struct ExpectedKernelConstants {
  double alpha = 0.0;
  double rho = 0.0;
  int dim = 0;
  KernelSpec spec;
};

enum class RhoMethod { Quadrature, MonteCarlo };

struct RhoEstimate {
  double value = 0.0;
  /// Zero for quadrature.
  double standard_error = 0.0;
};

double compute_alpha(const KernelSpec& spec, int dim);

/// Quadrature integrates C(t) against (1 - t^2)^((d - 3) / 2) on [-1, 1] with
/// 256 Gauss-Legendre nodes; it refuses dim > 10^4, where the density is too
/// concentrated for the rule. MonteCarlo averages `budget` uniform pairs.
RhoEstimate compute_rho(const KernelSpec& spec, int dim, RhoMethod method = RhoMethod::Quadrature,
                        std::int64_t budget = 1'000'000, std::uint64_t seed = 0);

ExpectedKernelConstants expected_constants(const KernelSpec& spec, int dim,
                                           RhoMethod method = RhoMethod::Quadrature);

/// 1' C~^-1 y for the expected bias-free Gram with m points per sphere.
double expected_gamma_C(Index m, const ExpectedKernelConstants& k, double r1, double r2);

/// Entry sum of C~^-1.
double expected_s_Cinv(Index m, const ExpectedKernelConstants& k, double r1, double r2);

/// gamma_C / (1 + beta^2 s(C~^-1)).
double expected_gamma_K(Index m, const ExpectedKernelConstants& k, double r1, double r2,
                        double beta);

/// Large-m limit (r1 + r2) / (beta^2 (r2 - r1)); infinite for beta = 0.
double expected_gamma_limit(double r1, double r2, double beta);

/// Explicit 2m x 2m expected Gram: inner block r1^2 ((alpha - rho) I + rho 11'),
/// outer block r2^2 (...), cross blocks r1 r2 rho 11', plus beta^2 everywhere.
Matrix build_expected_gram(Index m, const ExpectedKernelConstants& k, double r1, double r2,
                           double beta);

/// Gauss-Legendre nodes and weights on [-1, 1].
struct QuadratureRule {
  Vector nodes;
  Vector weights;
};
QuadratureRule gauss_legendre(int points);

}  // namespace spherelab
