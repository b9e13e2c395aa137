#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "spherelab/regression.hpp"

namespace spherelab {

/// Eigendecomposition K(X, X) = V diag(mu) V' of a fitted predictor's Gram
/// matrix (including any jitter the fit used), with label alignments
/// coeffs[k] = v_k' y and Nystrom extensions of the eigenvectors.
///
/// Conventions: eigenvalues descending; each eigenvector's largest-magnitude
/// entry is positive (first such entry on ties).
class SpectralDecomposition {
 public:
  static SpectralDecomposition decompose(const Predictor& predictor);

  const Vector& eigenvalues() const { return mu_; }
  const Matrix& eigenvectors() const { return v_; }
  const Vector& coefficients() const { return coeffs_; }
  Index size() const { return mu_.size(); }

  /// mu_k / n, the Nystrom estimate of the operator eigenvalue.
  double operator_eigenvalue(Index k) const;

  /// Extensions are refused for eigenvalues at or below floor_ratio * mu_max.
  static constexpr double kFloorRatio = 1e-12;
  double eigenvalue_floor() const;
  /// Components whose eigenvalue is below the floor.
  std::vector<Index> unstable_components() const;

  /// phi_k(x) = (1 / mu_k) sum_i V(i, k) K(x_i, x).
  double eigenfunction(Index k, Point x) const;

  /// K(X, x); pass it to the *_from_column overloads to reuse it across components.
  Vector kernel_column_at(Point x) const;
  double eigenfunction_from_column(Index k, const Vector& column) const;

  struct Restricted {
    double value = 0.0;
    /// Set when the index set was empty; value is then 0.
    bool empty_selection = false;
  };

  /// sum over k in `components` of coeffs[k] phi_k(x).
  Restricted restricted_predict(std::span<const Index> components, Point x) const;
  Restricted restricted_predict_from_column(std::span<const Index> components,
                                            const Vector& column) const;

  /// argmax_k |coeffs[k]|, smallest index on ties.
  Index dominant_index() const;

  /// |sum_k coeffs[k]^2 - ||y||^2|.
  double parseval_residual() const;

  /// max_k ||K v_k - mu_k v_k|| / mu_max.
  double eigen_residual() const;

  const KernelSpec& spec() const { return spec_; }
  const PointMatrix& train_points() const { return points_; }

 private:
  SpectralDecomposition() = default;
  void require_component(Index k) const;

  KernelSpec spec_;
  PointMatrix points_;
  Vector labels_;
  Matrix gram_;
  Vector mu_;
  Matrix v_;
  Vector coeffs_;
};

/// argmax_k |coeffs[k]|, smallest index on ties.
Index dominant_coefficient(const Vector& coeffs);

enum class EigenMode { Dominant, Top, AllButDominant };

std::string_view to_string(EigenMode mode);
EigenMode parse_eigen_mode(std::string_view text);

struct EigenSelection {
  EigenMode mode = EigenMode::Dominant;
  /// Number of components for EigenMode::Top.
  Index top = 10;
};

/// Component indices for a selection: the dominant one, the `top` largest
/// |coeffs| (ties by index), or everything except the dominant one.
std::vector<Index> select_components(const SpectralDecomposition& s, const EigenSelection& selection);

struct EigenAccuracy {
  Index k_dominant = 0;
  double acc_train = 0.0;
  double acc_test = 0.0;
  double acc_adv = 0.0;
  double parseval_residual = 0.0;
};

/// Accuracies of the restricted predictor on the training, test and adversarial sets.
EigenAccuracy eigen_experiment(const SpectralDecomposition& s, const EigenSelection& selection,
                               const SpheresDataset& train, const SpheresDataset& test,
                               const SpheresDataset& adversarial);

}  // namespace spherelab
