#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "spherelab/config.hpp"
#include "spherelab/csv.hpp"
#include "spherelab/regression.hpp"
#include "spherelab/spectral.hpp"

namespace spherelab {

/// Outcome of one sweep cell. Failed cells keep their grid coordinates and
/// carry NaN measurements plus the error message.
struct CellStatus {
  bool ok = true;
  std::string error;
};

/// Seeds are per repeat: the training set of repeat r uses
/// derive_seed(config seed, r), its test set derive_seed(that, 1) and an MLP
/// initialization derive_seed(that, 2). Rows report the training-set seed.
std::uint64_t repeat_seed(const ExperimentConfig& config, int repeat);

struct SweepRow {
  Index n = 0;
  double beta = 0.0;
  int repeat = 0;
  std::uint64_t seed = 0;
  double gamma = 0.0;
  double thr_low = 0.0;
  double thr_high = 0.0;
  Regime regime_pred = Regime::Zero;
  double acc_train = 0.0;
  double acc_test = 0.0;
  double acc_adv = 0.0;
  double jitter = 0.0;
  /// Adversarial points with |f| below kTieThreshold.
  Index ties = 0;
  /// Bias sweeps only: gamma from a direct fit with the biased kernel, and
  /// |gamma_direct - gamma|.
  double gamma_direct = 0.0;
  double lemma4_residual = 0.0;
  /// Bias sweeps only: beta^2 gamma and gamma_C / s(C^-1).
  double bias_gain = 0.0;
  double capacity_limit = 0.0;
  CellStatus status;
};

struct SweepResult {
  ExperimentConfig config;
  std::vector<SweepRow> rows;
  Index failures = 0;
};

/// Fits at every n of the grid for every repeat.
SweepResult sweep_n(const ExperimentConfig& config);
/// One bias-free fit per repeat at config.n; every beta of the grid reuses it
/// through gamma_bias_isolated and bias_shifted_alpha.
SweepResult sweep_beta(const ExperimentConfig& config);

struct GammaRow {
  Index n = 0;
  int repeat = 0;
  std::uint64_t seed = 0;
  double gamma_empirical = 0.0;
  double jitter = 0.0;
  double gamma_expected = 0.0;
  double limit = 0.0;
  CellStatus status;
};

struct ExpectedRow {
  Index m = 0;
  double alpha = 0.0;
  double rho = 0.0;
  double gamma_c_formula = 0.0;
  double gamma_c_numeric = 0.0;
  double s_formula = 0.0;
  double s_numeric = 0.0;
  double gamma_k_formula = 0.0;
  double gamma_k_numeric = 0.0;
  double limit = 0.0;
};

struct GammaResult {
  ExperimentConfig config;
  std::vector<GammaRow> rows;
  /// One row per grid n, with m = n / 2.
  std::vector<ExpectedRow> expected;
  Index failures = 0;
};

/// Empirical gamma_K(n) against the expected-kernel closed form.
GammaResult gamma_curve(const ExperimentConfig& config);

struct EigenRow {
  Index n = 0;
  double beta = 0.0;
  EigenMode mode = EigenMode::Dominant;
  int repeat = 0;
  std::uint64_t seed = 0;
  EigenAccuracy accuracy;
  double jitter = 0.0;
  CellStatus status;
};

struct EigenResult {
  ExperimentConfig config;
  std::vector<EigenRow> rows;
  Index failures = 0;
};

/// Restricted spectral predictors for every n and mode.
EigenResult eigen_sweep(const ExperimentConfig& config);

struct MlpRow {
  double beta_init = 0.0;
  int repeat = 0;
  std::uint64_t seed = 0;
  double lr = 0.0;
  std::int64_t steps_run = 0;
  double final_loss = 0.0;
  bool converged = false;
  double acc_train = 0.0;
  double acc_test = 0.0;
  double acc_adv = 0.0;
  /// Trained output bias.
  double output_bias = 0.0;
  std::vector<std::pair<std::int64_t, double>> history;
  CellStatus status;
};

struct MlpResult {
  ExperimentConfig config;
  std::vector<MlpRow> rows;
  Index failures = 0;
};

/// Trains one network per (beta_init, repeat).
MlpResult mlp_sweep(const ExperimentConfig& config);

/// Learning rate for training on `train` with the given beta_init under config.lr_rule.
double effective_lr(const ExperimentConfig& config, double beta_init, const SpheresDataset& train);

CsvTable sweep_n_table(const SweepResult& result);
CsvTable sweep_beta_table(const SweepResult& result);
CsvTable gamma_table(const GammaResult& result);
CsvTable expected_table(const GammaResult& result);
CsvTable eigen_table(const EigenResult& result);
CsvTable mlp_table(const MlpResult& result);
CsvTable mlp_history_table(const MlpResult& result);

struct RunSummary {
  std::vector<std::filesystem::path> files;
  Index cells = 0;
  Index failures = 0;
};

/// Runs the configured experiment and writes its CSV and SVG files (plus the
/// canonical config as config.txt) into config.output_dir. The config must be
/// validated; ExperimentKind::Verify is not handled here.
RunSummary run_experiment(const ExperimentConfig& config);

}  // namespace spherelab
