#include "spherelab/regression.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace spherelab {
namespace {

constexpr std::array<double, 4> kJitterLadder{0.0, 1e-12, 1e-10, 1e-8};
// Below this reciprocal condition estimate a successful Cholesky is still
// treated as singular and the next jitter level is tried.
constexpr double kMinReciprocalCondition = 1e-14;

std::atomic<bool> g_corollary_fault{false};

// Exact duplicate rows make any Gram singular; report them by index.
void reject_duplicate_rows(const PointMatrix& x) {
  std::vector<Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  auto row_less = [&](Index a, Index b) {
    for (Index j = 0; j < x.cols(); ++j) {
      if (x(a, j) != x(b, j)) return x(a, j) < x(b, j);
    }
    return false;
  };
  std::sort(order.begin(), order.end(), row_less);
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (!row_less(order[k - 1], order[k])) {
      const auto [a, b] = std::minmax(order[k - 1], order[k]);
      throw SingularGramError(fmt::format(
          "singular Gram matrix: training rows {} and {} are duplicate points", a, b));
    }
  }
}

}  // namespace

Predictor Predictor::fit(const KernelSpec& spec, const SpheresDataset& train) {
  spec.validate();
  if (train.size() < 1) throw std::invalid_argument("cannot fit an empty training set");
  if (train.X.cols() != spec.input_dim) {
    throw std::invalid_argument(fmt::format("training points have dimension {}, kernel expects {}",
                                            train.X.cols(), spec.input_dim));
  }
  if (train.y.size() != train.size()) throw std::invalid_argument("training labels size mismatch");
  reject_duplicate_rows(train.X);

  Predictor p;
  p.spec_ = spec;
  p.train_ = train;
  p.gram_ = gram(spec, train.X);
  const Index n = p.gram_.rows();
  const double mean_diagonal = p.gram_.diagonal().mean();

  bool factored = false;
  for (double level : kJitterLadder) {
    const double shift = level * mean_diagonal;
    Matrix shifted = p.gram_;
    shifted.diagonal().array() += shift;
    p.factor_.compute(shifted);
    if (p.factor_.info() == Eigen::Success && p.factor_.rcond() > kMinReciprocalCondition) {
      p.jitter_ = shift;
      factored = true;
      break;
    }
  }
  if (!factored) {
    const Eigen::LDLT<Matrix> ldlt(p.gram_);
    const double pivot = ldlt.vectorD().minCoeff();
    throw SingularGramError(fmt::format(
        "Gram matrix is singular even with jitter {:.3g} x mean diagonal (smallest LDL' pivot {:.6g}); "
        "duplicate or nearly duplicate training points are the likely cause",
        kJitterLadder.back(), pivot));
  }
  p.alpha_ = p.factor_.solve(train.y);
  p.ones_solution_ = p.factor_.solve(Vector::Ones(n));
  return p;
}

double Predictor::predict(Point x) const {
  return kernel_column(spec_, train_.X, x).dot(alpha_);
}

Vector Predictor::predict_all(const PointMatrix& points) const {
  Vector out(points.rows());
  for (Index i = 0; i < points.rows(); ++i) out(i) = predict(row_of(points, i));
  return out;
}

double Predictor::interpolation_residual() const {
  return (gram_ * alpha_ - train_.y).norm() / train_.y.norm();
}

Accuracy accuracy(const Predictor& predictor, const SpheresDataset& data) {
  Accuracy result;
  if (data.size() == 0) return result;
  Index correct = 0;
  for (Index i = 0; i < data.size(); ++i) {
    const double f = predictor.predict(data.point(i));
    if (std::abs(f) < kTieThreshold) ++result.ties;
    if (sign_of(f) == data.y(i)) ++correct;
  }
  result.value = static_cast<double>(correct) / static_cast<double>(data.size());
  return result;
}

Accuracy accuracy_of(const Vector& predictions, const Vector& labels) {
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("prediction and label counts differ");
  }
  Accuracy result;
  if (labels.size() == 0) return result;
  Index correct = 0;
  for (Index i = 0; i < labels.size(); ++i) {
    if (std::abs(predictions(i)) < kTieThreshold) ++result.ties;
    if (sign_of(predictions(i)) == labels(i)) ++correct;
  }
  result.value = static_cast<double>(correct) / static_cast<double>(labels.size());
  return result;
}

Accuracy adversarial_accuracy(const Predictor& predictor, const SpheresDataset& adversarial) {
  if (adversarial.size() != predictor.train().size()) {
    throw std::invalid_argument("adversarial set size differs from the training set");
  }
  return accuracy(predictor, adversarial);
}

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::Zero: return "zero";
    case Regime::OneMinusQ: return "one_minus_q";
    case Regime::One: return "one";
  }
  return "unknown";
}

double regime_accuracy(Regime regime, double q) {
  switch (regime) {
    case Regime::Zero: return 0.0;
    case Regime::OneMinusQ: return 1.0 - q;
    case Regime::One: return 1.0;
  }
  return 0.0;
}

double PhaseReport::margin() const {
  return std::min(std::abs(gamma - threshold_low), std::abs(gamma - threshold_high));
}

PhaseReport predict_regime(double gamma, double r1, double r2, double zeta, double q) {
  if (!(r1 < r2)) throw std::invalid_argument("predict_regime requires r1 < r2");
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("predict_regime requires q in (0, 1)");
  PhaseReport report;
  report.gamma = gamma;
  const double zeta_sq = zeta * zeta;
  if (zeta_sq == 0.0) {
    report.threshold_low = std::numeric_limits<double>::infinity();
    report.threshold_high = std::numeric_limits<double>::infinity();
    report.predicted_regime = Regime::Zero;
    return report;
  }
  report.threshold_low = r1 / (zeta_sq * (r2 - r1));
  report.threshold_high = r2 / (zeta_sq * (r2 - r1));
  if (gamma >= report.threshold_high) {
    report.predicted_regime = Regime::One;
  } else if (gamma >= report.threshold_low) {
    report.predicted_regime = Regime::OneMinusQ;
  } else {
    report.predicted_regime = Regime::Zero;
  }
  return report;
}

std::pair<double, double> projection_prediction_identity(const Predictor& predictor, Point x) {
  const auto& config = predictor.train().config;
  const Vector projected = project(x, config);
  double norm_sq = 0.0;
  for (double v : x) norm_sq += v * v;
  const double ratio = projected.norm() / std::sqrt(norm_sq);
  const double beta_sq = predictor.spec().output_bias * predictor.spec().output_bias;
  const double direct = predictor.predict(as_point(projected));
  double shift = beta_sq * (1.0 - ratio) * predictor.gamma();
  if (g_corollary_fault.load(std::memory_order_relaxed)) shift = -shift;
  const double formula = ratio * predictor.predict(x) + shift;
  return {direct, formula};
}

double gamma_bias_isolated(const Predictor& bias_free, double beta) {
  if (bias_free.spec().output_bias != 0.0) {
    throw std::invalid_argument("gamma_bias_isolated needs a predictor fitted without output bias");
  }
  const double denominator = 1.0 + beta * beta * bias_free.inverse_sum();
  if (!(denominator > 0.0)) {
    throw std::domain_error("1 + beta^2 s(C^-1) <= 0: bias-free Gram is not positive definite");
  }
  return bias_free.gamma() / denominator;
}

Vector bias_shifted_alpha(const Predictor& bias_free, double beta) {
  const double gamma_k = gamma_bias_isolated(bias_free, beta);
  return bias_free.alpha() - (beta * beta * gamma_k) * bias_free.ones_solution();
}

double bias_capacity_limit(const Predictor& bias_free) {
  if (bias_free.spec().output_bias != 0.0) {
    throw std::invalid_argument("bias_capacity_limit needs a predictor fitted without output bias");
  }
  const double s = bias_free.inverse_sum();
  if (std::abs(s) < 1e-14) throw std::domain_error("s(C^-1) vanishes; capacity limit undefined");
  return bias_free.gamma() / s;
}

namespace testing {
void set_corollary_fault(bool enabled) { g_corollary_fault.store(enabled); }
}  // namespace testing

}  // namespace spherelab
