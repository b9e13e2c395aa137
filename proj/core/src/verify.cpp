#include "spherelab/verify.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

#include "spherelab/config.hpp"
#include "spherelab/expected.hpp"
#include "spherelab/experiments.hpp"
#include "spherelab/kernels.hpp"
#include "spherelab/mlp.hpp"
#include "spherelab/random.hpp"
#include "spherelab/regression.hpp"
#include "spherelab/spectral.hpp"
#include "spherelab/spheres.hpp"

namespace spherelab {
namespace {

constexpr int kMaxReportedFailures = 5;

class Checker {
 public:
  explicit Checker(SuiteResult& result) : result_(result) {}

  void check(bool ok, const std::function<std::string()>& message) {
    ++result_.checks;
    if (ok) return;
    result_.passed = false;
    if (result_.failure_count++ < kMaxReportedFailures) result_.failures.push_back(message());
  }

  void close(double value, double expected, double tol, std::string_view what) {
    check(std::abs(value - expected) <= tol, [&] {
      return fmt::format("{}: got {:.12g}, expected {:.12g} (tol {:.3g})", what, value, expected, tol);
    });
  }

 private:
  SuiteResult& result_;
};

struct Context {
  const VerifyOptions& options;
  Checker& check;
};

Vector random_point(Rng& rng, int dim, double radius) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.normal();
  return radius * v / v.norm();
}

bool nondecreasing_within_one(const std::vector<double>& values, double eps = 1e-12) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t j = i + 2; j < values.size(); ++j) {
      if (values[j] < values[i] - eps) return false;
    }
  }
  return true;
}

void suite_theorem1(Context& ctx) {
  Rng rng(derive_seed(ctx.options.seed, 1));
  for (auto family : {KernelFamily::Nngp, KernelFamily::Ntk}) {
    for (int depth = 1; depth <= 6; ++depth) {
      for (double beta : {0.0, 0.5, 1.0}) {
        const KernelSpec spec{family, depth, beta, 10};
        for (int t = 0; t < 40; ++t) {
          const Vector x = random_point(rng, 10, 0.2 + 2.0 * rng.uniform());
          const Vector y = random_point(rng, 10, 0.2 + 2.0 * rng.uniform());
          const double a = std::exp(4.0 * rng.uniform() - 2.0);
          const double k = kernel_value(spec, as_point(x), as_point(y));
          const double res = semi_homogeneity_residual(spec, as_point(x), as_point(y), a);
          ctx.check.check(std::abs(res) <= 1e-9 * std::max(1.0, std::abs(k)), [&] {
            return fmt::format("{} depth {} beta {} alpha {:.4g}: residual {:.3g}", to_string(family),
                               depth, beta, a, res);
          });
        }
      }
    }
  }
}

void suite_kernels(Context& ctx) {
  Rng rng(derive_seed(ctx.options.seed, 2));
  // Arc-cosine closed forms against Monte-Carlo averages.
  constexpr int kSamples = 200'000;
  for (int t = 0; t < 10; ++t) {
    const double s1 = 0.5 + 2.0 * rng.uniform();
    const double s2 = 0.5 + 2.0 * rng.uniform();
    const double corr = 2.0 * rng.uniform() - 1.0;
    const BivariateGaussianCov cov{s1 * s1, s2 * s2, corr * s1 * s2};
    double sum = 0, sum2 = 0, dsum = 0, dsum2 = 0;
    for (int i = 0; i < kSamples; ++i) {
      const double g1 = rng.normal();
      const double g2 = rng.normal();
      const double z1 = s1 * g1;
      const double z2 = s2 * (corr * g1 + std::sqrt(1.0 - corr * corr) * g2);
      const double v = std::max(z1, 0.0) * std::max(z2, 0.0);
      const double dv = (z1 > 0 && z2 > 0) ? 1.0 : 0.0;
      sum += v;
      sum2 += v * v;
      dsum += dv;
      dsum2 += dv * dv;
    }
    const auto stderr_of = [](double s, double s2) {
      const double mean = s / kSamples;
      return std::sqrt(std::max(s2 / kSamples - mean * mean, 0.0) / kSamples);
    };
    ctx.check.close(relu_arc_expectation(cov), sum / kSamples, 4.0 * stderr_of(sum, sum2) + 1e-12,
                    "relu_arc_expectation vs Monte Carlo");
    ctx.check.close(relu_arc_derivative_expectation(cov), dsum / kSamples,
                    4.0 * stderr_of(dsum, dsum2) + 1e-12, "relu_arc_derivative_expectation vs Monte Carlo");
  }
  // Symmetry, rotation invariance and positive semidefiniteness.
  const int dim = 12;
  PointMatrix X(48, dim);
  for (Index i = 0; i < X.rows(); ++i) X.row(i) = random_point(rng, dim, 0.5 + rng.uniform()).transpose();
  Matrix q = Matrix::NullaryExpr(dim, dim, [&] { return rng.normal(); });
  q = Eigen::HouseholderQR<Matrix>(q).householderQ();
  for (auto family : {KernelFamily::Nngp, KernelFamily::Ntk}) {
    for (int depth : {1, 3, 5}) {
      const KernelSpec spec{family, depth, 0.5, dim};
      const Matrix g = gram(spec, X);
      ctx.check.check(g == g.transpose(), [&] { return fmt::format("{} depth {}: gram not symmetric", to_string(family), depth); });
      const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(g, Eigen::EigenvaluesOnly).eigenvalues()(0);
      ctx.check.check(min_eig >= -1e-10 * g.trace(), [&] {
        return fmt::format("{} depth {}: smallest gram eigenvalue {:.3g}", to_string(family), depth, min_eig);
      });
      for (Index i = 0; i + 1 < 10; ++i) {
        const Vector a = X.row(i).transpose();
        const Vector b = X.row(i + 1).transpose();
        const Vector qa = q * a;
        const Vector qb = q * b;
        const double k = kernel_value(spec, as_point(a), as_point(b));
        ctx.check.close(kernel_value(spec, as_point(qa), as_point(qb)), k, 1e-12 * std::max(1.0, std::abs(k)),
                        "kernel under a rotation of both inputs");
        ctx.check.check(k == kernel_value(spec, as_point(b), as_point(a)), [] { return std::string("kernel not symmetric"); });
      }
    }
  }
}

void suite_spheres(Context& ctx) {
  SpheresConfig c;
  c.seed = derive_seed(ctx.options.seed, 3);
  const SpheresDataset d = sample(c, 512);
  for (Index i = 0; i < d.size(); ++i) {
    const double r = d.y(i) > 0 ? c.r1 : c.r2;
    ctx.check.close(d.X.row(i).norm(), r, 1e-12 * r, "sample norm");
  }
  ctx.check.check(d.y.head(256).minCoeff() == 1.0 && d.y.tail(256).maxCoeff() == -1.0,
                  [] { return std::string("balanced rows not ordered inner first"); });
  const SpheresDataset adv = adversarial_set(d);
  const SpheresDataset back = adversarial_set(adv);
  ctx.check.check((back.X - d.X).cwiseAbs().maxCoeff() <= 1e-12 && back.y == d.y,
                  [] { return std::string("adversarial_set is not an involution"); });
  ctx.check.check(adv.y.sum() == 0.0, [] { return std::string("adversarial set not balanced"); });
  SpheresConfig small = c;
  small.dim = 3;
  const SpheresDataset many = sample(small, 100'000);
  Vector mean = Vector::Zero(3);
  for (Index i = 0; i < many.size(); ++i) mean += many.X.row(i).transpose() / many.X.row(i).norm();
  mean /= static_cast<double>(many.size());
  ctx.check.check(mean.norm() <= 0.02, [&] { return fmt::format("mean direction norm {:.4f}", mean.norm()); });
}

void suite_corollary(Context& ctx) {
  SpheresConfig c;
  c.seed = derive_seed(ctx.options.seed, 4);
  const SpheresDataset train = sample(c, 128);
  SpheresConfig fresh_config = c;
  fresh_config.seed = derive_seed(c.seed, 1);
  const SpheresDataset fresh = sample(fresh_config, 50);
  for (double beta : {0.1, 1.0}) {
    const Predictor p = Predictor::fit({KernelFamily::Ntk, 3, beta, c.dim}, train);
    for (const SpheresDataset* set : {&train, &fresh}) {
      for (Index i = 0; i < set->size(); ++i) {
        const auto [direct, formula] = projection_prediction_identity(p, set->point(i));
        ctx.check.close(formula, direct, 1e-8 * std::max(1.0, std::abs(direct)),
                        fmt::format("projection identity at beta {}", beta));
      }
    }
  }
}

ExperimentConfig small_sweep_config(const VerifyOptions& options) {
  ExperimentConfig c;
  c.experiment = ExperimentKind::SweepN;
  c.kernel = {KernelFamily::Ntk, 3, 1.0, 100};
  c.grid = {4, 8, 16, 32, 64, 128, 256};
  c.repeats = 2;
  c.test_size = 200;
  c.spheres.seed = derive_seed(options.seed, 5);
  c.workers = options.workers;
  c.validate();
  return c;
}

void suite_theorem3(Context& ctx) {
  const PhaseReport thr = predict_regime(0.0, 1.0, 1.11, 1.0, 0.5);
  ctx.check.close(thr.threshold_low, 1.0 / 0.11, 1e-9, "threshold low");
  ctx.check.close(thr.threshold_high, 1.11 / 0.11, 1e-9, "threshold high");
  const SweepResult r = sweep_n(small_sweep_config(ctx.options));
  ctx.check.check(r.failures == 0, [&] { return fmt::format("{} failed cells", r.failures); });
  for (const auto& row : r.rows) {
    if (!row.status.ok) continue;
    const bool quantized = row.acc_adv == 0.0 || row.acc_adv == 0.5 || row.acc_adv == 1.0;
    ctx.check.check(quantized && row.ties == 0, [&] {
      return fmt::format("n {}: adversarial accuracy {} ({} ties)", row.n, row.acc_adv, row.ties);
    });
    PhaseReport report = predict_regime(row.gamma, 1.0, 1.11, 1.0, 0.5);
    if (report.margin() >= 1e-6) {
      ctx.check.check(row.acc_adv == regime_accuracy(report.predicted_regime, 0.5), [&] {
        return fmt::format("n {} gamma {:.6g}: predicted {}, measured {}", row.n, row.gamma,
                           to_string(report.predicted_regime), row.acc_adv);
      });
    }
  }
}

void suite_lemma4(Context& ctx) {
  SpheresConfig c;
  c.seed = derive_seed(ctx.options.seed, 6);
  for (Index n : {8, 32, 128, 256}) {
    const SpheresDataset d = sample(c, n);
    const KernelSpec spec{KernelFamily::Ntk, 3, 0.0, c.dim};
    const Predictor bias_free = Predictor::fit(spec, d);
    for (double beta : {0.1, 1.0, 3.0}) {
      const double direct = Predictor::fit(spec.with_bias(beta), d).gamma();
      ctx.check.close(gamma_bias_isolated(bias_free, beta), direct, 1e-8 * std::abs(direct),
                      fmt::format("bias isolation at n {} beta {}", n, beta));
    }
  }
}

void suite_theorem5(Context& ctx) {
  const double r1 = 1.0, r2 = 1.11;
  for (auto family : {KernelFamily::Nngp, KernelFamily::Ntk}) {
    const KernelSpec spec{family, 2, 1.0, 100};
    const auto k = expected_constants(spec, 100);
    double previous = -std::numeric_limits<double>::infinity();
    for (Index m = 1; m <= 256; m *= 2) {
      const double formula = expected_gamma_K(m, k, r1, r2, 1.0);
      Vector y(2 * m);
      y.head(m).setOnes();
      y.tail(m).setConstant(-1.0);
      const Matrix g = build_expected_gram(m, k, r1, r2, 1.0);
      const double numeric = Vector::Ones(2 * m).dot(g.llt().solve(y));
      ctx.check.close(formula, numeric, 1e-8 * std::abs(numeric), fmt::format("expected gamma at m {}", m));
      ctx.check.check(formula >= previous, [&] { return fmt::format("expected gamma decreases at m {}", m); });
      previous = formula;
    }
    const double limit = expected_gamma_limit(r1, r2, 1.0);
    ctx.check.close(expected_gamma_K(1'000'000, k, r1, r2, 1.0), limit, 0.01 * limit, "large-m limit");
  }
}

void suite_bias(Context& ctx) {
  SpheresConfig c;
  c.seed = derive_seed(ctx.options.seed, 7);
  const SpheresDataset d = sample(c, 128);
  const Predictor bias_free = Predictor::fit({KernelFamily::Ntk, 3, 0.0, c.dim}, d);
  double previous = -std::numeric_limits<double>::infinity();
  for (double beta : parse_grid("log:0.01:100:20")) {
    const double g = beta * beta * gamma_bias_isolated(bias_free, beta);
    ctx.check.check(g > previous, [&] { return fmt::format("beta^2 gamma not increasing at beta {:.4g}", beta); });
    previous = g;
  }
  const double limit = bias_capacity_limit(bias_free);
  const double far = 1e8 * gamma_bias_isolated(bias_free, 1e4);
  ctx.check.close(far, limit, 0.01 * std::abs(limit), "beta^2 gamma at beta 1e4 vs capacity limit");
}

void suite_lemma7(Context& ctx) {
  SpheresConfig c;
  c.seed = derive_seed(ctx.options.seed, 8);
  const SpheresDataset d = sample(c, 96);
  const Predictor p = Predictor::fit({KernelFamily::Nngp, 2, 0.1, c.dim}, d);
  const SpectralDecomposition s = SpectralDecomposition::decompose(p);
  ctx.check.close(s.parseval_residual(), 0.0, 1e-8, "Parseval residual");
  ctx.check.check(s.eigen_residual() <= 1e-8, [&] { return fmt::format("eigen residual {:.3g}", s.eigen_residual()); });
  std::vector<Index> all(static_cast<std::size_t>(s.size()));
  for (Index k = 0; k < s.size(); ++k) all[static_cast<std::size_t>(k)] = k;
  for (Index j = 0; j < 5; ++j) {
    const Vector column = s.kernel_column_at(d.point(j));
    for (Index k = 0; k < 5; ++k) {
      ctx.check.close(s.eigenfunction_from_column(k, column), s.eigenvectors()(j, k), 1e-8,
                      "Nystrom extension at a training point");
    }
  }
  const auto dominant = std::vector<Index>{s.dominant_index()};
  const auto rest = select_components(s, {EigenMode::AllButDominant, 0});
  Rng rng(derive_seed(c.seed, 1));
  for (int t = 0; t < 20; ++t) {
    const Vector x = random_point(rng, c.dim, rng.uniform() < 0.5 ? c.r1 : c.r2);
    const Vector column = s.kernel_column_at(as_point(x));
    const double f = p.predict(as_point(x));
    const double full = s.restricted_predict_from_column(all, column).value;
    ctx.check.close(full, f, 1e-6 * std::max(1.0, std::abs(f)), "full spectral sum");
    const double split = s.restricted_predict_from_column(dominant, column).value +
                         s.restricted_predict_from_column(rest, column).value;
    ctx.check.close(split, f, 1e-6 * std::max(1.0, std::abs(f)), "clean plus noisy parts");
  }
}

void suite_mlp(Context& ctx) {
  SpheresConfig c;
  c.dim = 5;
  c.seed = derive_seed(ctx.options.seed, 9);
  const SpheresDataset d = sample(c, 6);
  MlpConfig net{5, 16, 2, 0.7, derive_seed(c.seed, 1)};
  MlpParams p = MlpParams::initialize(net);
  const MlpGradient g = grad(p, d);
  constexpr double h = 1e-4;
  Rng rng(derive_seed(c.seed, 2));
  for (int t = 0; t < 20; ++t) {
    const std::size_t layer = static_cast<std::size_t>(rng.next_u64() % p.weights.size());
    auto& w = p.weights[layer];
    const Index i = static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(w.rows()));
    const Index j = static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(w.cols()));
    const double saved = w(i, j);
    w(i, j) = saved + h;
    const double up = mse_loss(p, d);
    w(i, j) = saved - h;
    const double down = mse_loss(p, d);
    w(i, j) = saved;
    const double fd = (up - down) / (2 * h);
    const double analytic = g.weights[layer](i, j);
    ctx.check.close(analytic, fd, 1e-5 * std::max(std::abs(fd), 1e-3), "weight gradient vs central difference");
  }
  const double saved = p.bias_param;
  p.bias_param = saved + h;
  const double up = mse_loss(p, d);
  p.bias_param = saved - h;
  const double down = mse_loss(p, d);
  p.bias_param = saved;
  const double fd = (up - down) / (2 * h);
  ctx.check.close(g.bias_param, fd, 1e-5 * std::max(std::abs(fd), 1e-3), "bias gradient vs central difference");

  TrainConfig tc;
  tc.net = {5, 32, 2, 0.5, derive_seed(c.seed, 3)};
  tc.lr = 0.5;
  tc.max_steps = 300;
  const TrainResult a = train(tc, d);
  const TrainResult b = train(tc, d);
  bool same = a.params.bias_param == b.params.bias_param;
  for (std::size_t l = 0; l < a.params.weights.size(); ++l) same = same && a.params.weights[l] == b.params.weights[l];
  ctx.check.check(same, [] { return std::string("training is not deterministic"); });
  ctx.check.check(a.final_loss < a.history.front().second, [] { return std::string("training did not reduce the loss"); });
}

void suite_determinism(Context& ctx) {
  ExperimentConfig c = small_sweep_config(ctx.options);
  c.grid = {8, 16, 32};
  const std::string first = sweep_n_table(sweep_n(c)).str();
  const std::string second = sweep_n_table(sweep_n(c)).str();
  ctx.check.check(first == second, [] { return std::string("sweep-n CSV differs between identical runs"); });
}

void suite_figure6(Context& ctx) {
  ExperimentConfig c;
  c.experiment = ExperimentKind::MlpSweep;
  c.n = 512;
  c.grid = {0.01, 0.1, 1, 3, 10, 30};
  c.repeats = 1;
  c.test_size = 500;
  c.max_steps = 3000;
  c.spheres.seed = derive_seed(ctx.options.seed, 10);
  c.workers = ctx.options.workers;
  c.validate();
  const MlpResult r = mlp_sweep(c);
  std::vector<double> adv;
  for (const auto& row : r.rows) adv.push_back(row.acc_adv);
  ctx.check.check(r.failures == 0, [&] { return fmt::format("{} failed training runs", r.failures); });
  ctx.check.check(adv.front() <= 0.05, [&] { return fmt::format("adversarial accuracy {} at the smallest bias", adv.front()); });
  ctx.check.check(std::any_of(adv.begin(), adv.end(), [](double a) { return a == 1.0; }),
                  [] { return std::string("no bias value reaches adversarial accuracy 1"); });
  ctx.check.check(nondecreasing_within_one(adv), [] { return std::string("adversarial accuracy not non-decreasing in beta"); });
}

struct Suite {
  SuiteInfo info;
  void (*run)(Context&);
};

const std::vector<Suite>& registry() {
  static const std::vector<Suite> suites{
      {{"theorem1", "semi-homogeneity of NNGP and NTK", false}, suite_theorem1},
      {{"kernels", "arc-cosine closed forms, symmetry, PSD, rotation invariance", false}, suite_kernels},
      {{"spheres", "sampling, projection involution, uniformity", false}, suite_spheres},
      {{"corollary", "prediction at projected points", false}, suite_corollary},
      {{"theorem3", "quantized adversarial accuracy and regimes", false}, suite_theorem3},
      {{"lemma4", "bias isolation of gamma", false}, suite_lemma4},
      {{"theorem5", "expected-kernel capacity", false}, suite_theorem5},
      {{"bias", "bias gain monotone, capacity limit", false}, suite_bias},
      {{"lemma7", "spectral decomposition of the predictor", false}, suite_lemma7},
      {{"mlp", "finite network gradient and determinism", false}, suite_mlp},
      {{"determinism", "byte-identical CSV on rerun", false}, suite_determinism},
      {{"figure6", "finite network bias sweep (slow)", true}, suite_figure6},
  };
  return suites;
}

class FaultGuard {
 public:
  explicit FaultGuard(bool enabled) : enabled_(enabled) {
    if (enabled_) testing::set_corollary_fault(true);
  }
  ~FaultGuard() {
    if (enabled_) testing::set_corollary_fault(false);
  }
  FaultGuard(const FaultGuard&) = delete;
  FaultGuard& operator=(const FaultGuard&) = delete;

 private:
  bool enabled_;
};

}  // namespace

std::vector<SuiteInfo> verify_suites() {
  std::vector<SuiteInfo> out;
  for (const auto& s : registry()) out.push_back(s.info);
  return out;
}

std::vector<SuiteResult> run_verify(const VerifyOptions& options) {
  for (const auto& name : options.only) {
    const bool known = std::any_of(registry().begin(), registry().end(),
                                   [&](const Suite& s) { return s.info.name == name; });
    if (!known) throw std::invalid_argument(fmt::format("unknown verify suite '{}'", name));
  }
  const FaultGuard fault(options.inject_corollary_fault);
  std::vector<SuiteResult> results;
  for (const auto& suite : registry()) {
    const bool selected = options.only.empty()
                              ? (!suite.info.slow || options.include_slow)
                              : std::find(options.only.begin(), options.only.end(), suite.info.name) !=
                                    options.only.end();
    if (!selected) continue;
    SuiteResult result;
    result.name = suite.info.name;
    result.title = suite.info.title;
    Checker checker(result);
    Context ctx{options, checker};
    const auto start = std::chrono::steady_clock::now();
    try {
      suite.run(ctx);
    } catch (const std::exception& e) {
      checker.check(false, [&] { return fmt::format("aborted: {}", e.what()); });
    }
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    results.push_back(std::move(result));
  }
  return results;
}

std::string format_scoreboard(const std::vector<SuiteResult>& results) {
  std::string out;
  int passed = 0;
  for (const auto& r : results) {
    if (r.passed) ++passed;
    out += fmt::format("[{}] {:<12} {:>6} checks {:>7.2f}s  {}\n", r.passed ? "PASS" : "FAIL", r.name,
                       r.checks, r.seconds, r.title);
    for (const auto& f : r.failures) out += fmt::format("         - {}\n", f);
    if (r.failure_count > static_cast<int>(r.failures.size())) {
      out += fmt::format("         ... {} more\n", r.failure_count - static_cast<int>(r.failures.size()));
    }
  }
  out += fmt::format("{}/{} suites passed\n", passed, results.size());
  return out;
}

}  // namespace spherelab
