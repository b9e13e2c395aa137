#include "spherelab/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace spherelab {

SpectralDecomposition SpectralDecomposition::decompose(const Predictor& predictor) {
  SpectralDecomposition s;
  s.spec_ = predictor.spec();
  s.points_ = predictor.train().X;
  s.labels_ = predictor.train().y;
  s.gram_ = predictor.gram_matrix();
  s.gram_.diagonal().array() += predictor.jitter_used();

  const Eigen::SelfAdjointEigenSolver<Matrix> solver(s.gram_);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("symmetric eigensolver did not converge");
  }
  const Index n = s.gram_.rows();
  s.mu_ = solver.eigenvalues().reverse();
  s.v_ = solver.eigenvectors().rowwise().reverse();
  for (Index k = 0; k < n; ++k) {
    Index argmax = 0;
    s.v_.col(k).cwiseAbs().maxCoeff(&argmax);
    if (s.v_(argmax, k) < 0.0) s.v_.col(k) = -s.v_.col(k);
  }
  s.coeffs_ = s.v_.transpose() * s.labels_;
  return s;
}

double SpectralDecomposition::operator_eigenvalue(Index k) const {
  require_component(k);
  return mu_(k) / static_cast<double>(size());
}

double SpectralDecomposition::eigenvalue_floor() const {
  return kFloorRatio * mu_(0);
}

std::vector<Index> SpectralDecomposition::unstable_components() const {
  std::vector<Index> out;
  for (Index k = 0; k < size(); ++k) {
    if (mu_(k) <= eigenvalue_floor()) out.push_back(k);
  }
  return out;
}

void SpectralDecomposition::require_component(Index k) const {
  if (k < 0 || k >= size()) {
    throw std::out_of_range(fmt::format("component {} outside [0, {})", k, size()));
  }
}

Vector SpectralDecomposition::kernel_column_at(Point x) const {
  return kernel_column(spec_, points_, x);
}

double SpectralDecomposition::eigenfunction_from_column(Index k, const Vector& column) const {
  require_component(k);
  if (!(mu_(k) > eigenvalue_floor())) {
    throw std::domain_error(fmt::format(
        "eigenvalue {} of component {} is below the floor {}; its extension is meaningless", mu_(k),
        k, eigenvalue_floor()));
  }
  return v_.col(k).dot(column) / mu_(k);
}

double SpectralDecomposition::eigenfunction(Index k, Point x) const {
  return eigenfunction_from_column(k, kernel_column_at(x));
}

SpectralDecomposition::Restricted SpectralDecomposition::restricted_predict_from_column(
    std::span<const Index> components, const Vector& column) const {
  Restricted r;
  if (components.empty()) {
    r.empty_selection = true;
    return r;
  }
  for (Index k : components) r.value += coeffs_(k) * eigenfunction_from_column(k, column);
  return r;
}

SpectralDecomposition::Restricted SpectralDecomposition::restricted_predict(
    std::span<const Index> components, Point x) const {
  return restricted_predict_from_column(components, kernel_column_at(x));
}

Index SpectralDecomposition::dominant_index() const { return dominant_coefficient(coeffs_); }

Index dominant_coefficient(const Vector& coeffs) {
  if (coeffs.size() == 0) throw std::invalid_argument("no coefficients");
  Index best = 0;
  for (Index k = 1; k < coeffs.size(); ++k) {
    if (std::abs(coeffs(k)) > std::abs(coeffs(best))) best = k;
  }
  return best;
}

double SpectralDecomposition::parseval_residual() const {
  return std::abs(coeffs_.squaredNorm() - labels_.squaredNorm());
}

double SpectralDecomposition::eigen_residual() const {
  const Matrix residual = gram_ * v_ - v_ * mu_.asDiagonal();
  return residual.colwise().norm().maxCoeff() / mu_(0);
}

std::string_view to_string(EigenMode mode) {
  switch (mode) {
    case EigenMode::Dominant: return "dominant";
    case EigenMode::Top: return "top";
    case EigenMode::AllButDominant: return "all_but_dominant";
  }
  return "unknown";
}

EigenMode parse_eigen_mode(std::string_view text) {
  if (text == "dominant") return EigenMode::Dominant;
  if (text == "top") return EigenMode::Top;
  if (text == "all_but_dominant" || text == "all-but-dominant") return EigenMode::AllButDominant;
  throw std::invalid_argument("unknown eigen mode '" + std::string(text) + "'");
}

std::vector<Index> select_components(const SpectralDecomposition& s, const EigenSelection& selection) {
  const Index dominant = s.dominant_index();
  std::vector<Index> out;
  switch (selection.mode) {
    case EigenMode::Dominant:
      out.push_back(dominant);
      break;
    case EigenMode::Top: {
      std::vector<Index> order(static_cast<std::size_t>(s.size()));
      std::iota(order.begin(), order.end(), Index{0});
      const auto& c = s.coefficients();
      std::stable_sort(order.begin(), order.end(),
                       [&](Index a, Index b) { return std::abs(c(a)) > std::abs(c(b)); });
      const auto count = static_cast<std::size_t>(std::clamp<Index>(selection.top, 0, s.size()));
      out.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
      std::sort(out.begin(), out.end());
      break;
    }
    case EigenMode::AllButDominant:
      for (Index k = 0; k < s.size(); ++k) {
        if (k != dominant) out.push_back(k);
      }
      break;
  }
  return out;
}

EigenAccuracy eigen_experiment(const SpectralDecomposition& s, const EigenSelection& selection,
                               const SpheresDataset& train, const SpheresDataset& test,
                               const SpheresDataset& adversarial) {
  const auto components = select_components(s, selection);
  // Collapse the selection into one weight vector: f_I(x) = K(X, x)' w.
  Vector weights = Vector::Zero(s.size());
  for (Index k : components) {
    if (!(s.eigenvalues()(k) > s.eigenvalue_floor())) {
      throw std::domain_error(fmt::format("selected component {} is below the eigenvalue floor", k));
    }
    weights += s.eigenvectors().col(k) * (s.coefficients()(k) / s.eigenvalues()(k));
  }
  auto score = [&](const SpheresDataset& data) {
    if (data.size() == 0) return 0.0;
    Index correct = 0;
    for (Index i = 0; i < data.size(); ++i) {
      const double f = s.kernel_column_at(data.point(i)).dot(weights);
      if (sign_of(f) == data.y(i)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
  };
  EigenAccuracy result;
  result.k_dominant = s.dominant_index();
  result.acc_train = score(train);
  result.acc_test = score(test);
  result.acc_adv = score(adversarial);
  result.parseval_residual = s.parseval_residual();
  return result;
}

}  // namespace spherelab
