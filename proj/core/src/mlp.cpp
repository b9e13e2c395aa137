#include "spherelab/mlp.hpp"

#include <fmt/format.h>

#include <cmath>

#include "spherelab/random.hpp"

namespace spherelab {
namespace {

struct ForwardPass {
  // inputs[l] is the input of layer l (widths[l] x n); inputs[0] = X'.
  std::vector<Matrix> inputs;
  // Pre-activations of the hidden layers.
  std::vector<Matrix> pre;
  Eigen::RowVectorXd output;
};

ForwardPass run_forward(const MlpParams& params, const PointMatrix& points) {
  if (points.cols() != params.widths.front()) {
    throw std::invalid_argument(fmt::format("network expects inputs of dimension {}, got {}",
                                            params.widths.front(), points.cols()));
  }
  ForwardPass pass;
  const std::size_t layers = params.weights.size();
  pass.inputs.reserve(layers);
  pass.pre.reserve(layers - 1);
  pass.inputs.emplace_back(points.transpose());
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(params.widths[l]));
    pass.pre.emplace_back(scale * (params.weights[l] * pass.inputs.back()));
    pass.inputs.emplace_back(pass.pre.back().cwiseMax(0.0));
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(params.widths[layers - 1]));
  pass.output = scale * (params.weights.back() * pass.inputs.back());
  pass.output.array() += params.output_bias();
  return pass;
}

void check_batch(const MlpParams& params, const SpheresDataset& batch) {
  if (batch.size() == 0) throw std::invalid_argument("gradient needs a non-empty batch");
  if (batch.X.cols() != params.widths.front()) {
    throw std::invalid_argument("batch dimension does not match the network input");
  }
}

}  // namespace

void MlpConfig::validate() const {
  if (input_dim < 1) throw std::invalid_argument("network input_dim must be >= 1");
  if (width < 1) throw std::invalid_argument("network width must be >= 1");
  if (hidden_layers < 0) throw std::invalid_argument("hidden_layers must be >= 0");
  if (!(beta_init >= 0.0)) throw std::invalid_argument("beta_init must be >= 0");
}

MlpParams MlpParams::initialize(const MlpConfig& config) {
  config.validate();
  MlpParams p;
  p.beta_init = config.beta_init;
  p.widths.push_back(config.input_dim);
  for (int l = 0; l < config.hidden_layers; ++l) p.widths.push_back(config.width);
  p.widths.push_back(1);
  Rng rng(config.seed);
  for (std::size_t l = 0; l + 1 < p.widths.size(); ++l) {
    Matrix w(p.widths[l + 1], p.widths[l]);
    for (Index i = 0; i < w.rows(); ++i) {
      for (Index j = 0; j < w.cols(); ++j) w(i, j) = rng.normal();
    }
    p.weights.push_back(std::move(w));
  }
  p.bias_param = rng.normal();
  return p;
}

Index MlpParams::parameter_count() const {
  Index count = 1;
  for (const auto& w : weights) count += w.size();
  return count;
}

double MlpGradient::squared_norm() const {
  double total = bias_param * bias_param;
  for (const auto& w : weights) total += w.squaredNorm();
  return total;
}

double forward(const MlpParams& params, Point x) {
  PointMatrix single(1, static_cast<Index>(x.size()));
  for (Index j = 0; j < single.cols(); ++j) single(0, j) = x[static_cast<std::size_t>(j)];
  return run_forward(params, single).output(0);
}

Vector forward_batch(const MlpParams& params, const PointMatrix& points) {
  return run_forward(params, points).output.transpose();
}

double mse_loss(const MlpParams& params, const SpheresDataset& batch) {
  check_batch(params, batch);
  const Vector residual = forward_batch(params, batch.X) - batch.y;
  return residual.squaredNorm() / static_cast<double>(batch.size());
}

LossAndGradient loss_and_gradient(const MlpParams& params, const SpheresDataset& batch) {
  check_batch(params, batch);
  const ForwardPass pass = run_forward(params, batch.X);
  const double n = static_cast<double>(batch.size());
  const Eigen::RowVectorXd residual = pass.output - batch.y.transpose();

  LossAndGradient out;
  out.loss = residual.squaredNorm() / n;
  const std::size_t layers = params.weights.size();
  out.gradient.weights.resize(layers);

  // delta holds dLoss/d(pre-activation) of the current layer, one column per sample.
  Matrix delta = (2.0 / n) * residual;
  out.gradient.bias_param = params.beta_init * delta.sum();
  for (std::size_t l = layers; l-- > 0;) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(params.widths[l]));
    out.gradient.weights[l] = scale * (delta * pass.inputs[l].transpose());
    if (l == 0) break;
    Matrix upstream = scale * (params.weights[l].transpose() * delta);
    delta = upstream.cwiseProduct((pass.pre[l - 1].array() > 0.0).cast<double>().matrix());
  }
  return out;
}

MlpGradient grad(const MlpParams& params, const SpheresDataset& batch) {
  return loss_and_gradient(params, batch).gradient;
}

TrainResult train(const TrainConfig& config, const SpheresDataset& data) {
  if (!(config.lr > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  if (config.max_steps < 0) throw std::invalid_argument("max_steps must be >= 0");
  MlpConfig net = config.net;
  net.input_dim = static_cast<int>(data.X.cols());
  TrainResult result;
  result.params = MlpParams::initialize(net);
  auto& p = result.params;
  const std::int64_t every = std::max<std::int64_t>(1, config.record_every);

  std::int64_t step = 0;
  while (true) {
    auto [loss, g] = loss_and_gradient(p, data);
    if (!std::isfinite(loss) || loss > config.divergence_loss) {
      throw DivergenceError(fmt::format(
          "training diverged at step {} (loss {:.4g}); use a smaller learning rate than {}", step,
          loss, config.lr));
    }
    result.final_loss = loss;
    const bool done = loss <= config.loss_tol || step >= config.max_steps;
    if (step % every == 0 || done) result.history.emplace_back(step, loss);
    if (done) {
      result.converged = loss <= config.loss_tol;
      break;
    }
    for (std::size_t l = 0; l < p.weights.size(); ++l) p.weights[l] -= config.lr * g.weights[l];
    p.bias_param -= config.lr * g.bias_param;
    ++step;
  }
  result.steps_run = step;
  return result;
}

double classification_accuracy(const MlpParams& params, const SpheresDataset& data) {
  if (data.size() == 0) return 0.0;
  const Vector f = forward_batch(params, data.X);
  Index correct = 0;
  for (Index i = 0; i < data.size(); ++i) {
    if ((f(i) >= 0.0 ? 1.0 : -1.0) == data.y(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace spherelab
