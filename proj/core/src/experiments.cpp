#include "spherelab/experiments.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <thread>

#include "spherelab/expected.hpp"
#include "spherelab/mlp.hpp"
#include "spherelab/random.hpp"
#include "spherelab/svg.hpp"

namespace spherelab {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Calls cell(i) for i in [0, count) on a bounded pool of threads. Cells must
/// not throw; each one writes only its own slot of the caller's result vector.
template <typename F>
void run_cells(Index count, int workers, F&& cell) {
  Index threads = workers > 0 ? workers : std::max(1U, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (Index i = 0; i < count; ++i) cell(i);
    return;
  }
  std::atomic<Index> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (Index t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (Index i = next++; i < count; i = next++) cell(i);
    });
  }
}

SpheresConfig spheres_with_seed(const ExperimentConfig& config, std::uint64_t seed) {
  SpheresConfig sc = config.spheres;
  sc.seed = seed;
  return sc;
}

struct CellData {
  SpheresDataset train;
  SpheresDataset test;
  SpheresDataset adversarial;
};

CellData sample_cell(const ExperimentConfig& config, std::uint64_t seed, Index n) {
  CellData d;
  d.train = sample(spheres_with_seed(config, seed), n);
  d.test = sample(spheres_with_seed(config, derive_seed(seed, 1)), config.test_size);
  d.adversarial = adversarial_set(d.train);
  return d;
}

CellStatus failed(const std::exception& e) { return {false, e.what()}; }

std::string status_text(const CellStatus& s) { return s.ok ? "ok" : "error: " + s.error; }

Index grid_n(double v) { return static_cast<Index>(std::llround(v)); }

Index count_failures(const auto& rows) {
  return static_cast<Index>(
      std::count_if(rows.begin(), rows.end(), [](const auto& r) { return !r.status.ok; }));
}

void mark_failed_sweep_row(SweepRow& row, const std::exception& e) {
  row.gamma = row.acc_train = row.acc_test = row.acc_adv = kNaN;
  row.gamma_direct = row.lemma4_residual = row.bias_gain = row.capacity_limit = kNaN;
  row.status = failed(e);
}

/// Mean of `value(row)` over successful rows, grouped by `key(row)` in grid order.
template <typename Row, typename Key, typename Value>
std::vector<double> grouped_mean(const std::vector<Row>& rows, const std::vector<double>& keys,
                                 Key key, Value value) {
  std::vector<double> out;
  for (double k : keys) {
    double sum = 0.0;
    int count = 0;
    for (const auto& row : rows) {
      if (row.status.ok && key(row) == k && std::isfinite(value(row))) {
        sum += value(row);
        ++count;
      }
    }
    out.push_back(count > 0 ? sum / count : kNaN);
  }
  return out;
}

/// x positions (log-interpolated) where the curve first rises through `level`.
std::vector<double> upward_crossings(const std::vector<double>& x, const std::vector<double>& y,
                                     double level) {
  std::vector<double> out;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(y[i - 1] < level) || !(y[i] >= level)) continue;
    const double t = (level - y[i - 1]) / (y[i] - y[i - 1]);
    out.push_back(std::exp(std::log(x[i - 1]) + t * (std::log(x[i]) - std::log(x[i - 1]))));
  }
  return out;
}

std::string kernel_label(const KernelSpec& spec) {
  return fmt::format("{} depth {}", to_string(spec.family), spec.depth);
}

}  // namespace

std::uint64_t repeat_seed(const ExperimentConfig& config, int repeat) {
  return derive_seed(config.spheres.seed, static_cast<std::uint64_t>(repeat));
}

SweepResult sweep_n(const ExperimentConfig& config) {
  SweepResult result{config, {}, 0};
  const auto& spec = config.kernel;
  const double beta = spec.output_bias;
  const Index cells = static_cast<Index>(config.grid.size()) * config.repeats;
  result.rows.resize(static_cast<std::size_t>(cells));
  run_cells(cells, config.workers, [&](Index i) {
    SweepRow& row = result.rows[static_cast<std::size_t>(i)];
    row.n = grid_n(config.grid[static_cast<std::size_t>(i / config.repeats)]);
    row.repeat = static_cast<int>(i % config.repeats);
    row.seed = repeat_seed(config, row.repeat);
    row.beta = beta;
    try {
      const PhaseReport thresholds =
          predict_regime(0.0, config.spheres.r1, config.spheres.r2, beta, config.spheres.q);
      row.thr_low = thresholds.threshold_low;
      row.thr_high = thresholds.threshold_high;
      const CellData d = sample_cell(config, row.seed, row.n);
      const Predictor p = Predictor::fit(spec, d.train);
      row.gamma = p.gamma();
      row.regime_pred =
          predict_regime(row.gamma, config.spheres.r1, config.spheres.r2, beta, config.spheres.q)
              .predicted_regime;
      row.acc_train = accuracy(p, d.train).value;
      row.acc_test = accuracy(p, d.test).value;
      const Accuracy adv = adversarial_accuracy(p, d.adversarial);
      row.acc_adv = adv.value;
      row.ties = adv.ties;
      row.jitter = p.jitter_used();
    } catch (const std::exception& e) {
      mark_failed_sweep_row(row, e);
    }
  });
  result.failures = count_failures(result.rows);
  return result;
}

SweepResult sweep_beta(const ExperimentConfig& config) {
  SweepResult result{config, {}, 0};
  const auto& sc = config.spheres;
  const Index betas = static_cast<Index>(config.grid.size());
  result.rows.resize(static_cast<std::size_t>(betas * config.repeats));
  run_cells(config.repeats, config.workers, [&](Index r) {
    const auto slot = [&](Index b) -> SweepRow& {
      return result.rows[static_cast<std::size_t>(b * config.repeats + r)];
    };
    const std::uint64_t seed = repeat_seed(config, static_cast<int>(r));
    for (Index b = 0; b < betas; ++b) {
      SweepRow& row = slot(b);
      row.n = config.n;
      row.beta = config.grid[static_cast<std::size_t>(b)];
      row.repeat = static_cast<int>(r);
      row.seed = seed;
    }
    try {
      const CellData d = sample_cell(config, seed, config.n);
      const KernelSpec c_spec = config.kernel.bias_free();
      const Predictor bias_free = Predictor::fit(c_spec, d.train);
      const Matrix c_test = cross_gram(c_spec, d.test.X, d.train.X);
      const Matrix c_adv = cross_gram(c_spec, d.adversarial.X, d.train.X);
      const double capacity = bias_capacity_limit(bias_free);
      for (Index b = 0; b < betas; ++b) {
        SweepRow& row = slot(b);
        try {
          const double beta = row.beta;
          const Vector a = bias_shifted_alpha(bias_free, beta);
          const double shift = beta * beta * a.sum();
          const auto predictions = [&](const Matrix& cross) -> Vector {
            return (cross * a).array() + shift;
          };
          row.gamma = gamma_bias_isolated(bias_free, beta);
          const PhaseReport phase = predict_regime(row.gamma, sc.r1, sc.r2, beta, sc.q);
          row.thr_low = phase.threshold_low;
          row.thr_high = phase.threshold_high;
          row.regime_pred = phase.predicted_regime;
          row.acc_train = accuracy_of(predictions(bias_free.gram_matrix()), d.train.y).value;
          row.acc_test = accuracy_of(predictions(c_test), d.test.y).value;
          const Accuracy adv = accuracy_of(predictions(c_adv), d.adversarial.y);
          row.acc_adv = adv.value;
          row.ties = adv.ties;
          row.jitter = bias_free.jitter_used();
          row.bias_gain = beta * beta * row.gamma;
          row.capacity_limit = capacity;
          const Predictor direct = Predictor::fit(c_spec.with_bias(beta), d.train);
          row.gamma_direct = direct.gamma();
          row.lemma4_residual = std::abs(row.gamma_direct - row.gamma);
        } catch (const std::exception& e) {
          row.status = failed(e);
        }
      }
    } catch (const std::exception& e) {
      for (Index b = 0; b < betas; ++b) mark_failed_sweep_row(slot(b), e);
    }
  });
  result.failures = count_failures(result.rows);
  return result;
}

GammaResult gamma_curve(const ExperimentConfig& config) {
  GammaResult result{config, {}, {}, 0};
  const auto& sc = config.spheres;
  const auto& spec = config.kernel;
  const double beta = spec.output_bias;
  const ExpectedKernelConstants constants = expected_constants(spec, sc.dim);
  const double limit = expected_gamma_limit(sc.r1, sc.r2, beta);

  const Index cells = static_cast<Index>(config.grid.size()) * config.repeats;
  result.rows.resize(static_cast<std::size_t>(cells));
  run_cells(cells, config.workers, [&](Index i) {
    GammaRow& row = result.rows[static_cast<std::size_t>(i)];
    row.n = grid_n(config.grid[static_cast<std::size_t>(i / config.repeats)]);
    row.repeat = static_cast<int>(i % config.repeats);
    row.seed = repeat_seed(config, row.repeat);
    row.limit = limit;
    try {
      row.gamma_expected = expected_gamma_K(row.n / 2, constants, sc.r1, sc.r2, beta);
      const Predictor p =
          Predictor::fit(spec, sample(spheres_with_seed(config, row.seed), row.n));
      row.gamma_empirical = p.gamma();
      row.jitter = p.jitter_used();
    } catch (const std::exception& e) {
      row.gamma_empirical = row.gamma_expected = kNaN;
      row.status = failed(e);
    }
  });

  for (double v : config.grid) {
    ExpectedRow e;
    e.m = grid_n(v) / 2;
    e.alpha = constants.alpha;
    e.rho = constants.rho;
    e.limit = limit;
    e.gamma_c_formula = expected_gamma_C(e.m, constants, sc.r1, sc.r2);
    e.s_formula = expected_s_Cinv(e.m, constants, sc.r1, sc.r2);
    e.gamma_k_formula = expected_gamma_K(e.m, constants, sc.r1, sc.r2, beta);
    Vector y(2 * e.m);
    y.head(e.m).setOnes();
    y.tail(e.m).setConstant(-1.0);
    const Vector ones = Vector::Ones(2 * e.m);
    const Eigen::LLT<Matrix> c_factor(build_expected_gram(e.m, constants, sc.r1, sc.r2, 0.0));
    const Eigen::LLT<Matrix> k_factor(build_expected_gram(e.m, constants, sc.r1, sc.r2, beta));
    const bool c_ok = c_factor.info() == Eigen::Success;
    const bool k_ok = k_factor.info() == Eigen::Success;
    e.gamma_c_numeric = c_ok ? ones.dot(c_factor.solve(y)) : kNaN;
    e.s_numeric = c_ok ? ones.dot(c_factor.solve(ones)) : kNaN;
    e.gamma_k_numeric = k_ok ? ones.dot(k_factor.solve(y)) : kNaN;
    result.expected.push_back(e);
  }
  result.failures = count_failures(result.rows);
  return result;
}

EigenResult eigen_sweep(const ExperimentConfig& config) {
  EigenResult result{config, {}, 0};
  const Index modes = static_cast<Index>(config.eigen_modes.size());
  const Index cells = static_cast<Index>(config.grid.size()) * config.repeats;
  result.rows.resize(static_cast<std::size_t>(cells * modes));
  run_cells(cells, config.workers, [&](Index i) {
    const Index n = grid_n(config.grid[static_cast<std::size_t>(i / config.repeats)]);
    const int repeat = static_cast<int>(i % config.repeats);
    const std::uint64_t seed = repeat_seed(config, repeat);
    for (Index m = 0; m < modes; ++m) {
      EigenRow& row = result.rows[static_cast<std::size_t>(i * modes + m)];
      row.n = n;
      row.beta = config.kernel.output_bias;
      row.mode = config.eigen_modes[static_cast<std::size_t>(m)];
      row.repeat = repeat;
      row.seed = seed;
    }
    const auto fail_all = [&](const std::exception& e) {
      for (Index m = 0; m < modes; ++m) {
        EigenRow& row = result.rows[static_cast<std::size_t>(i * modes + m)];
        row.accuracy.acc_train = row.accuracy.acc_test = row.accuracy.acc_adv = kNaN;
        row.accuracy.parseval_residual = kNaN;
        row.status = failed(e);
      }
    };
    try {
      const CellData d = sample_cell(config, seed, n);
      const Predictor p = Predictor::fit(config.kernel, d.train);
      const SpectralDecomposition s = SpectralDecomposition::decompose(p);
      for (Index m = 0; m < modes; ++m) {
        EigenRow& row = result.rows[static_cast<std::size_t>(i * modes + m)];
        row.jitter = p.jitter_used();
        try {
          row.accuracy =
              eigen_experiment(s, {row.mode, config.eigen_top}, d.train, d.test, d.adversarial);
        } catch (const std::exception& e) {
          row.accuracy.acc_train = row.accuracy.acc_test = row.accuracy.acc_adv = kNaN;
          row.status = failed(e);
        }
      }
    } catch (const std::exception& e) {
      fail_all(e);
    }
  });
  result.failures = count_failures(result.rows);
  return result;
}

double effective_lr(const ExperimentConfig& config, double beta_init, const SpheresDataset& train) {
  if (config.lr_rule == LrRule::Fixed) return config.lr;
  const KernelSpec ntk{KernelFamily::Ntk, config.mlp_hidden_layers + 1, beta_init, config.spheres.dim};
  const Vector mu =
      Eigen::SelfAdjointEigenSolver<Matrix>(gram(ntk, train.X), Eigen::EigenvaluesOnly).eigenvalues();
  return config.lr * static_cast<double>(train.size()) / (2.0 * mu.maxCoeff());
}

MlpResult mlp_sweep(const ExperimentConfig& config) {
  MlpResult result{config, {}, 0};
  const Index cells = static_cast<Index>(config.grid.size()) * config.repeats;
  result.rows.resize(static_cast<std::size_t>(cells));
  run_cells(cells, config.workers, [&](Index i) {
    MlpRow& row = result.rows[static_cast<std::size_t>(i)];
    row.beta_init = config.grid[static_cast<std::size_t>(i / config.repeats)];
    row.repeat = static_cast<int>(i % config.repeats);
    row.seed = repeat_seed(config, row.repeat);
    try {
      const CellData d = sample_cell(config, row.seed, config.n);
      row.lr = effective_lr(config, row.beta_init, d.train);
      TrainConfig tc;
      tc.net.input_dim = config.spheres.dim;
      tc.net.width = config.mlp_width;
      tc.net.hidden_layers = config.mlp_hidden_layers;
      tc.net.beta_init = row.beta_init;
      tc.net.seed = derive_seed(row.seed, 2);
      tc.lr = row.lr;
      tc.max_steps = config.max_steps;
      tc.loss_tol = config.loss_tol;
      tc.record_every = config.record_every;
      TrainResult trained = train(tc, d.train);
      row.steps_run = trained.steps_run;
      row.final_loss = trained.final_loss;
      row.converged = trained.converged;
      row.output_bias = trained.params.output_bias();
      row.acc_train = classification_accuracy(trained.params, d.train);
      row.acc_test = classification_accuracy(trained.params, d.test);
      row.acc_adv = classification_accuracy(trained.params, d.adversarial);
      row.history = std::move(trained.history);
    } catch (const std::exception& e) {
      row.lr = row.final_loss = row.acc_train = row.acc_test = row.acc_adv = row.output_bias = kNaN;
      row.status = failed(e);
    }
  });
  result.failures = count_failures(result.rows);
  return result;
}

namespace {

const std::vector<std::string> kSweepColumns{
    "n",        "beta",      "depth",    "family",  "seed",    "gamma",  "thr_low", "thr_high",
    "regime_pred", "acc_train", "acc_test", "acc_adv", "jitter", "ties"};

std::vector<std::string> sweep_cells(const SweepRow& r, const ExperimentConfig& c) {
  return {fmt::format("{}", r.n),
          csv_number(r.beta),
          fmt::format("{}", c.kernel.depth),
          std::string(to_string(c.kernel.family)),
          fmt::format("{}", r.seed),
          csv_number(r.gamma),
          csv_number(r.thr_low),
          csv_number(r.thr_high),
          r.status.ok ? csv_number(regime_accuracy(r.regime_pred, c.spheres.q)) : "nan",
          csv_number(r.acc_train),
          csv_number(r.acc_test),
          csv_number(r.acc_adv),
          csv_number(r.jitter),
          fmt::format("{}", r.ties)};
}

}  // namespace

CsvTable sweep_n_table(const SweepResult& result) {
  auto header = kSweepColumns;
  header.insert(header.end(), {"status", "config_hash"});
  CsvTable table(header);
  const std::string hash = config_hash_hex(result.config);
  for (const auto& r : result.rows) {
    auto cells = sweep_cells(r, result.config);
    cells.insert(cells.end(), {status_text(r.status), hash});
    table.add_row(std::move(cells));
  }
  return table;
}

CsvTable sweep_beta_table(const SweepResult& result) {
  auto header = kSweepColumns;
  header.insert(header.end(), {"gamma_direct", "lemma4_residual", "bias_gain", "capacity_limit",
                               "status", "config_hash"});
  CsvTable table(header);
  const std::string hash = config_hash_hex(result.config);
  for (const auto& r : result.rows) {
    auto cells = sweep_cells(r, result.config);
    cells.insert(cells.end(),
                 {csv_number(r.gamma_direct), csv_number(r.lemma4_residual),
                  csv_number(r.bias_gain), csv_number(r.capacity_limit), status_text(r.status),
                  hash});
    table.add_row(std::move(cells));
  }
  return table;
}

CsvTable gamma_table(const GammaResult& result) {
  CsvTable table({"n", "family", "depth", "beta", "seed", "gamma_empirical", "gamma_expected",
                  "limit", "jitter", "status", "config_hash"});
  const auto& c = result.config;
  const std::string hash = config_hash_hex(c);
  for (const auto& r : result.rows) {
    table.add_row({fmt::format("{}", r.n), std::string(to_string(c.kernel.family)),
                   fmt::format("{}", c.kernel.depth), csv_number(c.kernel.output_bias),
                   fmt::format("{}", r.seed), csv_number(r.gamma_empirical),
                   csv_number(r.gamma_expected), csv_number(r.limit), csv_number(r.jitter),
                   status_text(r.status), hash});
  }
  return table;
}

CsvTable expected_table(const GammaResult& result) {
  CsvTable table({"m", "alpha", "rho", "gamma_c_formula", "gamma_c_numeric", "s_formula",
                  "s_numeric", "gamma_k_formula", "gamma_k_numeric", "limit", "seed", "jitter",
                  "config_hash"});
  const std::string hash = config_hash_hex(result.config);
  for (const auto& e : result.expected) {
    table.add_row({fmt::format("{}", e.m), csv_number(e.alpha), csv_number(e.rho),
                   csv_number(e.gamma_c_formula), csv_number(e.gamma_c_numeric),
                   csv_number(e.s_formula), csv_number(e.s_numeric), csv_number(e.gamma_k_formula),
                   csv_number(e.gamma_k_numeric), csv_number(e.limit),
                   fmt::format("{}", result.config.spheres.seed), "0", hash});
  }
  return table;
}

CsvTable eigen_table(const EigenResult& result) {
  CsvTable table({"n", "beta", "mode", "k_dominant", "acc_train", "acc_test", "acc_adv",
                  "parseval_residual", "seed", "jitter", "status", "config_hash"});
  const std::string hash = config_hash_hex(result.config);
  for (const auto& r : result.rows) {
    std::string mode(to_string(r.mode));
    if (r.mode == EigenMode::Top) mode += fmt::format("{}", result.config.eigen_top);
    table.add_row({fmt::format("{}", r.n), csv_number(r.beta), mode,
                   fmt::format("{}", r.accuracy.k_dominant), csv_number(r.accuracy.acc_train),
                   csv_number(r.accuracy.acc_test), csv_number(r.accuracy.acc_adv),
                   csv_number(r.accuracy.parseval_residual), fmt::format("{}", r.seed),
                   csv_number(r.jitter), status_text(r.status), hash});
  }
  return table;
}

CsvTable mlp_table(const MlpResult& result) {
  CsvTable table({"beta_init", "width", "depth", "lr", "steps_run", "final_loss", "acc_train",
                  "acc_test", "acc_adv", "seed", "converged", "output_bias", "jitter", "status",
                  "config_hash"});
  const auto& c = result.config;
  const std::string hash = config_hash_hex(c);
  for (const auto& r : result.rows) {
    table.add_row({csv_number(r.beta_init), fmt::format("{}", c.mlp_width),
                   fmt::format("{}", c.mlp_hidden_layers), csv_number(r.lr),
                   fmt::format("{}", r.steps_run), csv_number(r.final_loss),
                   csv_number(r.acc_train), csv_number(r.acc_test), csv_number(r.acc_adv),
                   fmt::format("{}", r.seed), r.converged ? "1" : "0", csv_number(r.output_bias),
                   "0", status_text(r.status), hash});
  }
  return table;
}

CsvTable mlp_history_table(const MlpResult& result) {
  CsvTable table({"beta_init", "seed", "step", "loss", "config_hash"});
  const std::string hash = config_hash_hex(result.config);
  for (const auto& r : result.rows) {
    for (const auto& [step, loss] : r.history) {
      table.add_row({csv_number(r.beta_init), fmt::format("{}", r.seed), fmt::format("{}", step),
                     csv_number(loss), hash});
    }
  }
  return table;
}

namespace {

struct Writer {
  std::filesystem::path dir;
  RunSummary summary;

  void csv(const std::string& name, const CsvTable& table) {
    table.write(dir / name);
    summary.files.push_back(dir / name);
  }
  void svg(const std::string& name, const LineChart& chart) {
    write_text_file(dir / name, render_svg(chart));
    summary.files.push_back(dir / name);
  }
};

void accuracy_series(LineChart& chart, const std::vector<double>& x, const auto& rows,
                     const auto& key) {
  chart.series.push_back({"train", x, grouped_mean(rows, x, key, [](const auto& r) { return r.acc_train; })});
  chart.series.push_back({"test", x, grouped_mean(rows, x, key, [](const auto& r) { return r.acc_test; })});
  chart.series.push_back({"adversarial", x, grouped_mean(rows, x, key, [](const auto& r) { return r.acc_adv; })});
  chart.y_min = -0.05;
  chart.y_max = 1.05;
}

void write_sweep_n(Writer& w, const SweepResult& r) {
  const auto& c = r.config;
  w.csv("sweep_n.csv", sweep_n_table(r));
  const auto key = [](const SweepRow& row) { return static_cast<double>(row.n); };
  const std::vector<double> gamma =
      grouped_mean(r.rows, c.grid, key, [](const SweepRow& row) { return row.gamma; });
  const PhaseReport thr = predict_regime(0.0, c.spheres.r1, c.spheres.r2, c.kernel.output_bias,
                                         c.spheres.q);

  LineChart acc;
  acc.title = fmt::format("Accuracy vs n ({}, beta {})", kernel_label(c.kernel), c.kernel.output_bias);
  acc.x_label = "training set size n";
  acc.y_label = fmt::format("mean accuracy over {} runs", c.repeats);
  acc.log_x = true;
  accuracy_series(acc, c.grid, r.rows, key);
  for (double x : upward_crossings(c.grid, gamma, thr.threshold_low)) acc.rules.push_back({x, "gamma = low", true});
  for (double x : upward_crossings(c.grid, gamma, thr.threshold_high)) acc.rules.push_back({x, "gamma = high", true});
  w.svg("sweep_n.svg", acc);

  LineChart g;
  g.title = "Capacity gamma_K(n)";
  g.x_label = "training set size n";
  g.y_label = "mean gamma";
  g.log_x = true;
  g.series.push_back({"gamma_K(n)", c.grid, gamma});
  if (std::isfinite(thr.threshold_low)) {
    g.rules.push_back({thr.threshold_low, "threshold low", false});
    g.rules.push_back({thr.threshold_high, "threshold high", false});
  }
  w.svg("sweep_n_gamma.svg", g);
}

void write_sweep_beta(Writer& w, const SweepResult& r) {
  const auto& c = r.config;
  w.csv("sweep_beta.csv", sweep_beta_table(r));
  const auto key = [](const SweepRow& row) { return row.beta; };
  const bool log_beta = c.grid.front() > 0.0;

  LineChart acc;
  acc.title = fmt::format("Accuracy vs output bias ({}, n = {})", kernel_label(c.kernel), c.n);
  acc.x_label = "output bias beta";
  acc.y_label = fmt::format("mean accuracy over {} runs", c.repeats);
  acc.log_x = log_beta;
  accuracy_series(acc, c.grid, r.rows, key);
  w.svg("sweep_beta.svg", acc);

  LineChart g;
  g.title = "Bias gain beta^2 gamma_K(n)";
  g.x_label = "output bias beta";
  g.y_label = "mean beta^2 gamma";
  g.log_x = log_beta;
  g.series.push_back({"beta^2 gamma", c.grid,
                      grouped_mean(r.rows, c.grid, key, [](const SweepRow& row) { return row.bias_gain; })});
  const auto limit = grouped_mean(r.rows, c.grid, key, [](const SweepRow& row) { return row.capacity_limit; });
  if (!limit.empty() && std::isfinite(limit.front())) g.rules.push_back({limit.front(), "capacity limit", false});
  const PhaseReport thr = predict_regime(0.0, c.spheres.r1, c.spheres.r2, 1.0, c.spheres.q);
  g.rules.push_back({thr.threshold_low, "r1/(r2-r1)", false});
  g.rules.push_back({thr.threshold_high, "r2/(r2-r1)", false});
  w.svg("sweep_beta_gain.svg", g);
}

void write_gamma(Writer& w, const GammaResult& r) {
  const auto& c = r.config;
  w.csv("gamma_curve.csv", gamma_table(r));
  w.csv("gamma_expected.csv", expected_table(r));
  const auto key = [](const GammaRow& row) { return static_cast<double>(row.n); };
  LineChart chart;
  chart.title = fmt::format("Empirical vs expected gamma ({}, beta {})", kernel_label(c.kernel),
                            c.kernel.output_bias);
  chart.x_label = "training set size n";
  chart.y_label = "gamma_K(n)";
  chart.log_x = true;
  chart.series.push_back({fmt::format("empirical (mean of {})", c.repeats), c.grid,
                          grouped_mean(r.rows, c.grid, key, [](const GammaRow& row) { return row.gamma_empirical; })});
  std::vector<double> expected;
  for (const auto& e : r.expected) expected.push_back(e.gamma_k_formula);
  chart.series.push_back({"expected kernel", c.grid, expected, true});
  if (!r.expected.empty() && std::isfinite(r.expected.front().limit)) {
    chart.rules.push_back({r.expected.front().limit, "large-n limit", false});
  }
  w.svg("gamma_curve.svg", chart);
}

void write_eigen(Writer& w, const EigenResult& r) {
  const auto& c = r.config;
  w.csv("eigen.csv", eigen_table(r));
  LineChart chart;
  chart.title = fmt::format("Restricted spectral predictors ({}, beta {})", kernel_label(c.kernel),
                            c.kernel.output_bias);
  chart.x_label = "training set size n";
  chart.y_label = fmt::format("mean accuracy over {} runs", c.repeats);
  chart.log_x = true;
  chart.y_min = -0.05;
  chart.y_max = 1.05;
  for (EigenMode mode : c.eigen_modes) {
    std::vector<EigenRow> subset;
    for (const auto& row : r.rows) {
      if (row.mode == mode) subset.push_back(row);
    }
    const auto key = [](const EigenRow& row) { return static_cast<double>(row.n); };
    chart.series.push_back({fmt::format("{} test", to_string(mode)), c.grid,
                            grouped_mean(subset, c.grid, key, [](const EigenRow& row) { return row.accuracy.acc_test; })});
    chart.series.push_back({fmt::format("{} adversarial", to_string(mode)), c.grid,
                            grouped_mean(subset, c.grid, key, [](const EigenRow& row) { return row.accuracy.acc_adv; }),
                            true});
  }
  w.svg("eigen.svg", chart);
}

void write_mlp(Writer& w, const MlpResult& r) {
  const auto& c = r.config;
  w.csv("mlp.csv", mlp_table(r));
  w.csv("mlp_history.csv", mlp_history_table(r));
  const auto key = [](const MlpRow& row) { return row.beta_init; };
  LineChart acc;
  acc.title = fmt::format("Finite network: width {}, {} hidden layers, n = {}", c.mlp_width,
                          c.mlp_hidden_layers, c.n);
  acc.x_label = "bias initialization beta";
  acc.y_label = fmt::format("mean accuracy over {} runs", c.repeats);
  acc.log_x = c.grid.front() > 0.0;
  accuracy_series(acc, c.grid, r.rows, key);
  w.svg("mlp.svg", acc);
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& config) {
  Writer w{config.output_dir, {}};
  switch (config.experiment) {
    case ExperimentKind::SweepN: {
      const auto r = sweep_n(config);
      write_sweep_n(w, r);
      w.summary.cells = static_cast<Index>(r.rows.size());
      w.summary.failures = r.failures;
      break;
    }
    case ExperimentKind::SweepBeta: {
      const auto r = sweep_beta(config);
      write_sweep_beta(w, r);
      w.summary.cells = static_cast<Index>(r.rows.size());
      w.summary.failures = r.failures;
      break;
    }
    case ExperimentKind::GammaCurve: {
      const auto r = gamma_curve(config);
      write_gamma(w, r);
      w.summary.cells = static_cast<Index>(r.rows.size());
      w.summary.failures = r.failures;
      break;
    }
    case ExperimentKind::Eigen: {
      const auto r = eigen_sweep(config);
      write_eigen(w, r);
      w.summary.cells = static_cast<Index>(r.rows.size());
      w.summary.failures = r.failures;
      break;
    }
    case ExperimentKind::MlpSweep: {
      const auto r = mlp_sweep(config);
      write_mlp(w, r);
      w.summary.cells = static_cast<Index>(r.rows.size());
      w.summary.failures = r.failures;
      break;
    }
    case ExperimentKind::Verify:
      throw std::invalid_argument("run_experiment does not run verification suites");
  }
  write_text_file(config.output_dir / "config.txt",
                  canonical_text(config) + fmt::format("# config_hash = {}\n", config_hash_hex(config)));
  w.summary.files.push_back(config.output_dir / "config.txt");
  return w.summary;
}

}  // namespace spherelab
