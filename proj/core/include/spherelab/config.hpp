#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "spherelab/kernels.hpp"
#include "spherelab/spectral.hpp"
#include "spherelab/spheres.hpp"

namespace spherelab {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { SweepN, SweepBeta, GammaCurve, Eigen, MlpSweep, Verify };

std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view text);

/// How the MLP learning rate is set: the configured lr as is, or lr times
/// n / (2 lambda_max), where lambda_max is the largest eigenvalue of the
/// infinite-width tangent-kernel Gram on the training set. The second puts the
/// stiffest mode of full-batch gradient descent at critical damping.
enum class LrRule { Fixed, KernelScaled };

std::string_view to_string(LrRule rule);
LrRule parse_lr_rule(std::string_view text);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::SweepN;
  KernelSpec kernel{KernelFamily::Ntk, 3, 1.0, 100};
  SpheresConfig spheres;
  /// Sweep values: n for sweep-n, gamma and eigen; beta for sweep-beta and mlp.
  std::vector<double> grid{4, 8, 16, 32, 64, 128, 256, 512, 1024};
  int repeats = 8;
  std::filesystem::path output_dir = "out";

  /// Training-set size for the experiments that sweep something else.
  Index n = 256;
  Index test_size = 1000;

  std::vector<EigenMode> eigen_modes{EigenMode::Dominant, EigenMode::Top,
                                     EigenMode::AllButDominant};
  Index eigen_top = 10;

  int mlp_width = 1000;
  int mlp_hidden_layers = 2;
  double lr = 1.0;
  LrRule lr_rule = LrRule::KernelScaled;
  std::int64_t max_steps = 100'000;
  double loss_tol = 1e-4;
  std::int64_t record_every = 100;

  /// Worker threads for sweep cells; 0 means one per hardware thread.
  int workers = 0;

  /// Keeps kernel.input_dim equal to spheres.dim and checks every field.
  void validate();
};

/// Defaults for an experiment: the grid, sizes and kernel of the figure it reproduces.
ExperimentConfig defaults_for(ExperimentKind kind);

/// Applies one `key = value` setting. Unknown keys and malformed values throw ConfigError.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Reads `key = value` lines; `#` starts a comment, blank lines are ignored.
void apply_config_stream(ExperimentConfig& config, std::istream& in, std::string_view source = "<config>");
void apply_config_file(ExperimentConfig& config, const std::filesystem::path& path);

/// SPHERELAB_SEED, when set, replaces spheres.seed.
void apply_environment(ExperimentConfig& config);

/// Grid syntax: a comma list "4,8,16", a geometric range "geom:4:1024:2"
/// (start, inclusive stop, ratio) or a log-spaced range "log:0.01:100:20"
/// (start, stop, number of points).
std::vector<double> parse_grid(std::string_view text);

/// Every setting that affects results, one `key = value` per line, in a fixed
/// order. Output directory and worker count are excluded.
std::string canonical_text(const ExperimentConfig& config);

/// 64-bit FNV-1a of canonical_text, printed as 16 hex digits in CSV rows.
std::uint64_t config_hash(const ExperimentConfig& config);
std::string config_hash_hex(const ExperimentConfig& config);

}  // namespace spherelab
