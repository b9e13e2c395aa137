#include "spherelab/config.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <string>

namespace spherelab {
namespace {

std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r");
  return text.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(trim(text.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double parse_double(std::string_view key, std::string_view text) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty() || !std::isfinite(value)) {
    throw ConfigError(fmt::format("{}: '{}' is not a number", key, text));
  }
  return value;
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view text) {
  Int value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError(fmt::format("{}: '{}' is not an integer", key, text));
  }
  return value;
}

template <typename F>
auto rethrow_as_config_error(std::string_view key, F&& parse) {
  try {
    return parse();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(fmt::format("{}: {}", key, e.what()));
  }
}

bool is_integer_valued(double v) { return std::floor(v) == v; }

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::SweepN: return "sweep-n";
    case ExperimentKind::SweepBeta: return "sweep-beta";
    case ExperimentKind::GammaCurve: return "gamma";
    case ExperimentKind::Eigen: return "eigen";
    case ExperimentKind::MlpSweep: return "mlp";
    case ExperimentKind::Verify: return "verify";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view text) {
  for (auto kind : {ExperimentKind::SweepN, ExperimentKind::SweepBeta, ExperimentKind::GammaCurve,
                    ExperimentKind::Eigen, ExperimentKind::MlpSweep, ExperimentKind::Verify}) {
    if (text == to_string(kind)) return kind;
  }
  throw ConfigError(fmt::format(
      "unknown experiment '{}' (expected sweep-n, sweep-beta, gamma, eigen, mlp or verify)", text));
}

std::string_view to_string(LrRule rule) {
  return rule == LrRule::Fixed ? "fixed" : "kernel_scaled";
}

LrRule parse_lr_rule(std::string_view text) {
  if (text == "fixed") return LrRule::Fixed;
  if (text == "kernel_scaled") return LrRule::KernelScaled;
  throw ConfigError(fmt::format("unknown lr_rule '{}' (expected fixed or kernel_scaled)", text));
}

std::vector<double> parse_grid(std::string_view text) {
  text = trim(text);
  std::vector<double> grid;
  if (text.starts_with("geom:")) {
    const auto parts = split(text.substr(5), ':');
    if (parts.size() != 3) throw ConfigError("grid: expected geom:start:stop:ratio");
    const double start = parse_double("grid", parts[0]);
    const double stop = parse_double("grid", parts[1]);
    const double ratio = parse_double("grid", parts[2]);
    if (!(start > 0.0) || !(ratio > 1.0) || stop < start) {
      throw ConfigError("grid: geom needs 0 < start <= stop and ratio > 1");
    }
    // Multiply rather than exponentiate so integer grids stay exact.
    for (double v = start; v <= stop * (1.0 + 1e-12); v *= ratio) grid.push_back(v);
    return grid;
  }
  if (text.starts_with("log:")) {
    const auto parts = split(text.substr(4), ':');
    if (parts.size() != 3) throw ConfigError("grid: expected log:start:stop:count");
    const double start = parse_double("grid", parts[0]);
    const double stop = parse_double("grid", parts[1]);
    const int count = parse_int<int>("grid", parts[2]);
    if (!(start > 0.0) || !(stop > start) || count < 2) {
      throw ConfigError("grid: log needs 0 < start < stop and count >= 2");
    }
    const double a = std::log10(start);
    const double b = std::log10(stop);
    for (int i = 0; i < count; ++i) {
      grid.push_back(i == 0 ? start
                     : i == count - 1
                         ? stop
                         : std::pow(10.0, a + (b - a) * i / static_cast<double>(count - 1)));
    }
    return grid;
  }
  for (auto part : split(text, ',')) {
    if (part.empty()) throw ConfigError("grid: empty entry");
    grid.push_back(parse_double("grid", part));
  }
  return grid;
}

ExperimentConfig defaults_for(ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  switch (kind) {
    case ExperimentKind::SweepN:
    case ExperimentKind::Verify:
      break;
    case ExperimentKind::SweepBeta:
      c.grid = parse_grid("log:0.01:100:20");
      c.n = 256;
      break;
    case ExperimentKind::GammaCurve:
      c.kernel = {KernelFamily::Ntk, 2, 1.0, 100};
      c.grid = parse_grid("geom:16:1024:2");
      break;
    case ExperimentKind::Eigen:
      c.kernel = {KernelFamily::Nngp, 2, 0.1, 100};
      c.grid = parse_grid("geom:32:2048:2");
      c.repeats = 4;
      break;
    case ExperimentKind::MlpSweep:
      c.grid = {0.01, 0.1, 1, 3, 10, 30};
      c.n = 512;
      c.repeats = 1;
      break;
  }
  return c;
}

void apply_setting(ExperimentConfig& c, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  rethrow_as_config_error(key, [&] {
    if (key == "experiment") c.experiment = parse_experiment_kind(value);
    else if (key == "family") c.kernel.family = parse_kernel_family(value);
    else if (key == "depth") c.kernel.depth = parse_int<int>(key, value);
    else if (key == "beta") c.kernel.output_bias = parse_double(key, value);
    else if (key == "dim") c.spheres.dim = parse_int<int>(key, value);
    else if (key == "r1") c.spheres.r1 = parse_double(key, value);
    else if (key == "r2") c.spheres.r2 = parse_double(key, value);
    else if (key == "q") c.spheres.q = parse_double(key, value);
    else if (key == "seed") c.spheres.seed = parse_int<std::uint64_t>(key, value);
    else if (key == "balance") c.spheres.balance = parse_balance(value);
    else if (key == "grid") c.grid = parse_grid(value);
    else if (key == "repeats") c.repeats = parse_int<int>(key, value);
    else if (key == "out") c.output_dir = std::string(value);
    else if (key == "n") c.n = parse_int<Index>(key, value);
    else if (key == "test_size") c.test_size = parse_int<Index>(key, value);
    else if (key == "eigen_modes") {
      c.eigen_modes.clear();
      for (auto part : split(value, ',')) c.eigen_modes.push_back(parse_eigen_mode(part));
    } else if (key == "eigen_top") c.eigen_top = parse_int<Index>(key, value);
    else if (key == "width") c.mlp_width = parse_int<int>(key, value);
    else if (key == "hidden_layers") c.mlp_hidden_layers = parse_int<int>(key, value);
    else if (key == "lr") c.lr = parse_double(key, value);
    else if (key == "lr_rule") c.lr_rule = parse_lr_rule(value);
    else if (key == "max_steps") c.max_steps = parse_int<std::int64_t>(key, value);
    else if (key == "loss_tol") c.loss_tol = parse_double(key, value);
    else if (key == "record_every") c.record_every = parse_int<std::int64_t>(key, value);
    else if (key == "workers") c.workers = parse_int<int>(key, value);
    else throw ConfigError(fmt::format("unknown key '{}'", key));
    return 0;
  });
}

void apply_config_stream(ExperimentConfig& config, std::istream& in, std::string_view source) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("{}:{}: expected 'key = value'", source, line_no));
    }
    try {
      apply_setting(config, view.substr(0, eq), view.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}:{}: {}", source, line_no, e.what()));
    }
  }
}

void apply_config_file(ExperimentConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
  apply_config_stream(config, in, path.string());
}

void apply_environment(ExperimentConfig& config) {
  if (const char* seed = std::getenv("SPHERELAB_SEED"); seed != nullptr && *seed != '\0') {
    apply_setting(config, "seed", seed);
  }
}

void ExperimentConfig::validate() {
  rethrow_as_config_error("kernel", [&] {
    kernel.input_dim = spheres.dim;
    kernel.validate();
    return 0;
  });
  rethrow_as_config_error("spheres", [&] {
    spheres.validate();
    return 0;
  });
  if (grid.empty()) throw ConfigError("grid must not be empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw ConfigError("grid must be strictly increasing");
  }
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  const bool grid_is_n = experiment == ExperimentKind::SweepN ||
                         experiment == ExperimentKind::GammaCurve ||
                         experiment == ExperimentKind::Eigen;
  const auto check_n = [&](double v, std::string_view what) {
    if (!is_integer_valued(v) || v < 2) throw ConfigError(fmt::format("{} must be integers >= 2", what));
    if (spheres.balance == Balance::ExactBalanced && std::fmod(v, 2.0) != 0.0) {
      throw ConfigError(fmt::format("{} must be even under balance = exact", what));
    }
  };
  if (grid_is_n) {
    for (double v : grid) check_n(v, "grid values (sample sizes)");
  } else if (experiment != ExperimentKind::Verify) {
    for (double v : grid) {
      if (v < 0.0) throw ConfigError("grid values (bias magnitudes) must be >= 0");
    }
    check_n(static_cast<double>(n), "n");
  }
  if (test_size < 2) throw ConfigError("test_size must be >= 2");
  if (spheres.balance == Balance::ExactBalanced && test_size % 2 != 0) {
    throw ConfigError("test_size must be even under balance = exact");
  }
  if (eigen_modes.empty()) throw ConfigError("eigen_modes must not be empty");
  if (eigen_top < 1) throw ConfigError("eigen_top must be >= 1");
  if (mlp_width < 1) throw ConfigError("width must be >= 1");
  if (mlp_hidden_layers < 0) throw ConfigError("hidden_layers must be >= 0");
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (max_steps < 0) throw ConfigError("max_steps must be >= 0");
  if (!(loss_tol >= 0.0)) throw ConfigError("loss_tol must be >= 0");
  if (record_every < 1) throw ConfigError("record_every must be >= 1");
  if (workers < 0) throw ConfigError("workers must be >= 0");
}

std::string canonical_text(const ExperimentConfig& c) {
  std::string grid;
  for (std::size_t i = 0; i < c.grid.size(); ++i) {
    grid += fmt::format("{}{}", i == 0 ? "" : ",", c.grid[i]);
  }
  std::string modes;
  for (std::size_t i = 0; i < c.eigen_modes.size(); ++i) {
    modes += fmt::format("{}{}", i == 0 ? "" : ",", to_string(c.eigen_modes[i]));
  }
  std::string text;
  const auto add = [&](std::string_view key, const auto& value) {
    text += fmt::format("{} = {}\n", key, value);
  };
  add("experiment", to_string(c.experiment));
  add("family", to_string(c.kernel.family));
  add("depth", c.kernel.depth);
  add("beta", c.kernel.output_bias);
  add("dim", c.spheres.dim);
  add("r1", c.spheres.r1);
  add("r2", c.spheres.r2);
  add("q", c.spheres.q);
  add("seed", c.spheres.seed);
  add("balance", to_string(c.spheres.balance));
  add("grid", grid);
  add("repeats", c.repeats);
  add("n", c.n);
  add("test_size", c.test_size);
  add("eigen_modes", modes);
  add("eigen_top", c.eigen_top);
  add("width", c.mlp_width);
  add("hidden_layers", c.mlp_hidden_layers);
  add("lr", c.lr);
  add("lr_rule", to_string(c.lr_rule));
  add("max_steps", c.max_steps);
  add("loss_tol", c.loss_tol);
  add("record_every", c.record_every);
  return text;
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_text(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash_hex(const ExperimentConfig& config) {
  return fmt::format("{:016x}", config_hash(config));
}

}  // namespace spherelab
