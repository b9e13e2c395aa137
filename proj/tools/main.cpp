// spherelab: runs the sweep experiments and the verification suites.
//
//   spherelab sweep-n --config tools/configs/figure2.conf --out out/figure2
//   spherelab verify --only theorem3
//
// Exit status: 0 on success, 1 if any sweep cell or suite failed, 2 on a
// configuration or usage error.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "spherelab/config.hpp"
#include "spherelab/experiments.hpp"
#include "spherelab/verify.hpp"

namespace {

using namespace spherelab;

constexpr int kExitFailure = 1;
constexpr int kExitConfigError = 2;

struct Flags {
  std::optional<std::string> experiment;
  std::optional<std::string> config_file;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> repeats;
  std::optional<std::string> grid;
  std::optional<int> workers;
  std::vector<std::string> settings;
  // verify only
  std::vector<std::string> only;
  bool slow = false;
  std::string inject_fault;
};

void add_common_options(CLI::App& app, Flags& f) {
  app.add_option("--config", f.config_file, "Config file with one `key = value` per line");
  app.add_option("--out", f.out, "Output directory for CSV and SVG files");
  app.add_option("--seed", f.seed, "Base seed (overrides config and SPHERELAB_SEED)");
  app.add_option("--repeats", f.repeats, "Independent runs per grid point");
  app.add_option("--grid", f.grid, "Sweep values: 4,8,16 | geom:4:1024:2 | log:0.01:100:20");
  app.add_option("--workers", f.workers, "Worker threads for sweep cells (0 = all cores)");
  app.add_option("--set", f.settings, "Extra `key=value` setting; repeatable");
}

/// Defaults for the experiment, then the config file, SPHERELAB_SEED and flags.
ExperimentConfig build_config(ExperimentKind kind, const Flags& f) {
  ExperimentConfig config = defaults_for(kind);
  if (f.config_file) {
    apply_config_file(config, *f.config_file);
    config.experiment = kind;
  }
  apply_environment(config);
  if (f.seed) config.spheres.seed = *f.seed;
  if (f.repeats) config.repeats = *f.repeats;
  if (f.grid) config.grid = parse_grid(*f.grid);
  if (f.out) config.output_dir = *f.out;
  if (f.workers) config.workers = *f.workers;
  for (const auto& setting : f.settings) {
    const auto eq = setting.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("--set expects key=value, got '{}'", setting));
    apply_setting(config, setting.substr(0, eq), setting.substr(eq + 1));
  }
  config.validate();
  return config;
}

/// The experiment named in a config file, if any.
std::optional<ExperimentKind> experiment_in_file(const std::string& path) {
  ExperimentConfig probe;
  probe.experiment = ExperimentKind::Verify;
  apply_config_file(probe, path);
  if (probe.experiment == ExperimentKind::Verify) return std::nullopt;
  return probe.experiment;
}

int run_sweep(const ExperimentConfig& config) {
  fmt::print("{} (config hash {}) -> {}\n", to_string(config.experiment), config_hash_hex(config),
             config.output_dir.string());
  const auto start = std::chrono::steady_clock::now();
  const RunSummary summary = run_experiment(config);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (const auto& file : summary.files) fmt::print("  wrote {}\n", file.string());
  fmt::print("{} cells, {} failed, {:.1f}s\n", summary.cells, summary.failures, seconds);
  return summary.failures == 0 ? 0 : kExitFailure;
}

int run_verification(const Flags& f) {
  VerifyOptions options;
  for (const auto& item : f.only) {
    std::size_t start = 0;
    while (start <= item.size()) {
      const auto comma = item.find(',', start);
      const auto name = item.substr(start, comma - start);
      if (!name.empty()) options.only.push_back(name);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  options.include_slow = f.slow;
  if (f.seed) options.seed = *f.seed;
  if (f.workers) options.workers = *f.workers;
  if (!f.inject_fault.empty()) {
    if (f.inject_fault != "corollary") {
      throw ConfigError(fmt::format("unknown fault '{}' (only 'corollary' exists)", f.inject_fault));
    }
    options.inject_corollary_fault = true;
  }
  std::vector<SuiteResult> results;
  try {
    results = run_verify(options);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  std::fputs(format_scoreboard(results).c_str(), stdout);
  const bool all = std::all_of(results.begin(), results.end(), [](const SuiteResult& r) { return r.passed; });
  return all ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel regression laboratory for the adversarial spheres problem"};
  app.require_subcommand(0, 1);
  Flags flags;
  add_common_options(app, flags);
  app.add_option("--experiment", flags.experiment,
                 "Experiment to run when no subcommand is given: sweep-n, sweep-beta, gamma, eigen, mlp, verify");

  const std::vector<std::pair<const char*, const char*>> sweeps{
      {"sweep-n", "Accuracy and capacity against training-set size"},
      {"sweep-beta", "Accuracy and capacity against output bias"},
      {"gamma", "Empirical against expected-kernel capacity"},
      {"eigen", "Restricted spectral predictors"},
      {"mlp", "Finite-width networks trained by gradient descent"},
  };
  for (const auto& [name, description] : sweeps) add_common_options(*app.add_subcommand(name, description), flags);
  auto* verify = app.add_subcommand("verify", "Run the property suites and print a scoreboard");
  verify->add_option("--only", flags.only, "Run only these suites (comma separated or repeated)");
  verify->add_flag("--slow", flags.slow, "Include slow suites (finite-width training sweep)");
  verify->add_option("--seed", flags.seed, "Seed for the randomized checks");
  verify->add_option("--workers", flags.workers, "Worker threads for sweep-based suites");
  verify->add_option("--inject-fault", flags.inject_fault, "Test hook: break an identity on purpose (corollary)")
      ->group("");
  verify->add_flag_callback("--list", [] {
    for (const auto& s : verify_suites()) fmt::print("{:<12} {}{}\n", s.name, s.title, s.slow ? "  [slow]" : "");
    std::exit(0);
  }, "List suite names and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  try {
    std::optional<std::string> name;
    if (!app.get_subcommands().empty()) name = app.get_subcommands().front()->get_name();
    else if (flags.experiment) name = *flags.experiment;
    else if (flags.config_file) {
      if (auto kind = experiment_in_file(*flags.config_file)) name = std::string(to_string(*kind));
    }
    if (!name) {
      fmt::print(stderr, "no experiment given; use a subcommand, --experiment or `experiment =` in the config\n{}",
                 app.help());
      return kExitConfigError;
    }
    const ExperimentKind kind = parse_experiment_kind(*name);
    if (kind == ExperimentKind::Verify) return run_verification(flags);
    return run_sweep(build_config(kind, flags));
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kExitConfigError;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitFailure;
  }
}
