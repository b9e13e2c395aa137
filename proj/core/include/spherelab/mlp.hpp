#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "spherelab/spheres.hpp"

namespace spherelab {

/// Fully connected ReLU network under NTK parametrization: every layer maps
/// h -> W h / sqrt(fan_in) with W ~ N(0, 1) entries. Hidden layers have no
/// bias. The scalar output bias is beta_init * b with a trainable b ~ N(0, 1),
/// so its contribution to the tangent kernel is beta_init^2, the same constant
/// the infinite-width kernel carries.
struct MlpConfig {
  int input_dim = 100;
  int width = 1000;
  /// Number of hidden ReLU layers; the network has hidden_layers + 1 affine
  /// layers, matching KernelSpec::depth = hidden_layers + 1.
  int hidden_layers = 2;
  double beta_init = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct MlpParams {
  /// weights[l] has shape (widths[l + 1], widths[l]).
  std::vector<Matrix> weights;
  /// Standardized bias parameter; the output bias is beta_init * bias_param.
  double bias_param = 0.0;
  double beta_init = 0.0;
  /// (d0, d1, ..., 1).
  std::vector<int> widths;

  static MlpParams initialize(const MlpConfig& config);

  double output_bias() const { return beta_init * bias_param; }
  Index parameter_count() const;
};

/// Gradient with the same layout as MlpParams.
struct MlpGradient {
  std::vector<Matrix> weights;
  double bias_param = 0.0;

  double squared_norm() const;
};

double forward(const MlpParams& params, Point x);
Vector forward_batch(const MlpParams& params, const PointMatrix& points);

/// (1/n) sum_i (f(x_i) - y_i)^2.
double mse_loss(const MlpParams& params, const SpheresDataset& batch);

struct LossAndGradient {
  double loss = 0.0;
  MlpGradient gradient;
};

/// Exact gradient of the mean squared error; the ReLU derivative at 0 is 0.
LossAndGradient loss_and_gradient(const MlpParams& params, const SpheresDataset& batch);
MlpGradient grad(const MlpParams& params, const SpheresDataset& batch);

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  MlpConfig net;
  double lr = 1.0;
  std::int64_t max_steps = 100'000;
  double loss_tol = 1e-4;
  /// Loss is recorded in the history every this many steps (and at the end).
  std::int64_t record_every = 100;
  /// Losses above this abort training with DivergenceError.
  double divergence_loss = 1e6;
};

struct TrainResult {
  MlpParams params;
  std::vector<std::pair<std::int64_t, double>> history;
  std::int64_t steps_run = 0;
  double final_loss = 0.0;
  bool converged = false;
};

/// Full-batch gradient descent until the loss reaches loss_tol or max_steps.
TrainResult train(const TrainConfig& config, const SpheresDataset& data);

/// Fraction of sign(f(x_i)) == y_i with sign(0) = +1.
double classification_accuracy(const MlpParams& params, const SpheresDataset& data);

}  // namespace spherelab
