#pragma once

#include <Eigen/Cholesky>
#include <stdexcept>
#include <string_view>
#include <utility>

#include "spherelab/kernels.hpp"
#include "spherelab/spheres.hpp"

namespace spherelab {

/// Raised when a Gram matrix cannot be factorized even at the largest jitter.
class SingularGramError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ridge-less kernel regression f(x) = K(x, X) K(X, X)^-1 y.
///
/// The Gram matrix is factorized once (Cholesky). If the plain factorization
/// fails or is numerically singular, a multiple of the mean diagonal is added
/// from the ladder {1e-12, 1e-10, 1e-8}; the amount used is kept in jitter_used.
/// Immutable after fit; concurrent predict calls are safe.
class Predictor {
 public:
  static Predictor fit(const KernelSpec& spec, const SpheresDataset& train);

  double predict(Point x) const;
  Vector predict_all(const PointMatrix& points) const;

  /// gamma_K(n) = 1' K^-1 y.
  double gamma() const { return alpha_.sum(); }
  /// s(K^-1) = 1' K^-1 1, the entry sum of the inverse Gram.
  double inverse_sum() const { return ones_solution_.sum(); }

  /// Solves (K + jitter I) z = rhs with the stored factor.
  Vector solve(const Vector& rhs) const { return factor_.solve(rhs); }

  /// ||K alpha - y|| / ||y|| against the unjittered Gram.
  double interpolation_residual() const;

  const KernelSpec& spec() const { return spec_; }
  const SpheresDataset& train() const { return train_; }
  const Matrix& gram_matrix() const { return gram_; }
  const Vector& alpha() const { return alpha_; }
  const Vector& ones_solution() const { return ones_solution_; }
  /// Absolute diagonal shift added before factorizing (0 when none was needed).
  double jitter_used() const { return jitter_; }

 private:
  Predictor() = default;

  KernelSpec spec_;
  SpheresDataset train_;
  Matrix gram_;
  Eigen::LLT<Matrix> factor_;
  Vector alpha_;
  Vector ones_solution_;
  double jitter_ = 0.0;
};

/// sign with the tie-break sign(0) = +1.
inline double sign_of(double value) { return value >= 0.0 ? 1.0 : -1.0; }

/// Fraction of correctly signed predictions, plus near-zero outputs counted separately.
struct Accuracy {
  double value = 0.0;
  Index ties = 0;
};

/// Predictions with |f| below this are reported as ties.
inline constexpr double kTieThreshold = 1e-12;

Accuracy accuracy(const Predictor& predictor, const SpheresDataset& data);

/// Accuracy of precomputed predictions against labels (same sign and tie rules).
Accuracy accuracy_of(const Vector& predictions, const Vector& labels);

/// Accuracy of the predictor on its adversarial set (projected points, negated labels).
Accuracy adversarial_accuracy(const Predictor& predictor, const SpheresDataset& adversarial);

enum class Regime { Zero, OneMinusQ, One };

std::string_view to_string(Regime regime);

/// Predicted adversarial accuracy for a regime: 0, 1 - q or 1.
double regime_accuracy(Regime regime, double q);

struct PhaseReport {
  double gamma = 0.0;
  double threshold_low = 0.0;
  double threshold_high = 0.0;
  Regime predicted_regime = Regime::Zero;
  double empirical_adv_accuracy = 0.0;

  /// Smallest distance from gamma to either threshold.
  double margin() const;
};

/// Classifies gamma against r1 / (zeta^2 (r2 - r1)) and r2 / (zeta^2 (r2 - r1)).
/// Ties at a threshold go to the larger regime. With zeta = 0 both thresholds
/// are infinite and the regime is Zero. empirical_adv_accuracy is left at 0.
PhaseReport predict_regime(double gamma, double r1, double r2, double zeta, double q);

/// (f(P(x)) evaluated directly, (r~/r) f(x) + beta^2 (1 - r~/r) gamma).
std::pair<double, double> projection_prediction_identity(const Predictor& predictor, Point x);

/// gamma_C / (1 + beta^2 s(C^-1)) from a predictor fitted with output_bias = 0.
double gamma_bias_isolated(const Predictor& bias_free, double beta);

/// K^-1 y for K = C + beta^2 11' from a predictor fitted with output_bias = 0,
/// by the rank-one update alpha_C - beta^2 gamma_K C^-1 1. Predictions with the
/// biased kernel are then c(x)' a + beta^2 sum(a), with no further factorization.
Vector bias_shifted_alpha(const Predictor& bias_free, double beta);

/// lim beta^2 gamma_K = gamma_C / s(C^-1) for beta -> infinity.
double bias_capacity_limit(const Predictor& bias_free);

namespace testing {
/// Flips the sign of the gamma term in projection_prediction_identity.
/// Exists only so the verification suite can demonstrate that it catches a
/// broken identity.
void set_corollary_fault(bool enabled);
}  // namespace testing

}  // namespace spherelab
