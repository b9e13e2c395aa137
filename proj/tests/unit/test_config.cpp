#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "spherelab/config.hpp"

using namespace spherelab;

TEST_CASE("grid syntax") {
  CHECK(parse_grid("4,8,16") == std::vector<double>{4, 8, 16});
  CHECK(parse_grid(" 0.5 , 2 ") == std::vector<double>{0.5, 2});
  CHECK(parse_grid("geom:4:1024:2") == std::vector<double>{4, 8, 16, 32, 64, 128, 256, 512, 1024});
  CHECK(parse_grid("geom:16:100:2") == std::vector<double>{16, 32, 64});
  const auto log_grid = parse_grid("log:0.01:100:20");
  REQUIRE(log_grid.size() == 20);
  CHECK(log_grid.front() == doctest::Approx(0.01));
  CHECK(log_grid.back() == doctest::Approx(100.0));
  CHECK(log_grid[1] / log_grid[0] == doctest::Approx(std::pow(1e4, 1.0 / 19.0)));
  for (const char* bad : {"", "4,,8", "geom:4:2:2", "geom:4:64:1", "log:0:1:5", "log:1:10:1", "a,b", "lin:1:2:3"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_grid(bad), ConfigError);
  }
}

TEST_CASE("settings and validation") {
  ExperimentConfig config = defaults_for(ExperimentKind::SweepN);
  apply_setting(config, "family", "nngp");
  apply_setting(config, "depth", "5");
  apply_setting(config, "dim", "20");
  apply_setting(config, "balance", "bernoulli");
  apply_setting(config, "q", "0.3");
  apply_setting(config, "grid", "5,7");
  config.validate();
  CHECK(config.kernel.family == KernelFamily::Nngp);
  CHECK(config.kernel.depth == 5);
  CHECK(config.kernel.input_dim == 20);
  CHECK(config.spheres.q == 0.3);

  CHECK_THROWS_AS(apply_setting(config, "colour", "blue"), ConfigError);
  CHECK_THROWS_AS(apply_setting(config, "depth", "three"), ConfigError);
  CHECK_THROWS_AS(apply_setting(config, "depth", "3.5"), ConfigError);
  CHECK_THROWS_AS(apply_setting(config, "family", "rbf"), ConfigError);

  ExperimentConfig repeats = defaults_for(ExperimentKind::SweepN);
  repeats.repeats = 0;
  CHECK_THROWS_AS(repeats.validate(), ConfigError);

  ExperimentConfig odd = defaults_for(ExperimentKind::SweepN);
  odd.grid = {4, 7};
  CHECK_THROWS_AS(odd.validate(), ConfigError);

  ExperimentConfig unsorted = defaults_for(ExperimentKind::SweepN);
  unsorted.grid = {8, 4};
  CHECK_THROWS_AS(unsorted.validate(), ConfigError);

  ExperimentConfig empty = defaults_for(ExperimentKind::SweepN);
  empty.grid.clear();
  CHECK_THROWS_AS(empty.validate(), ConfigError);

  ExperimentConfig negative = defaults_for(ExperimentKind::SweepBeta);
  negative.grid = {-1.0, 1.0};
  CHECK_THROWS_AS(negative.validate(), ConfigError);

  ExperimentConfig radii = defaults_for(ExperimentKind::SweepN);
  radii.spheres.r2 = 0.5;
  CHECK_THROWS_AS(radii.validate(), ConfigError);
}

TEST_CASE("config files") {
  ExperimentConfig config = defaults_for(ExperimentKind::SweepN);
  std::istringstream text(
      "# bias sweep\n"
      "experiment = sweep-beta\n"
      "\n"
      "beta = 0.5   # trailing comment\n"
      "grid = log:0.1:10:3\n");
  apply_config_stream(config, text, "test.cfg");
  CHECK(config.experiment == ExperimentKind::SweepBeta);
  CHECK(config.kernel.output_bias == 0.5);
  CHECK(config.grid.size() == 3);

  std::istringstream broken("depth = 2\nnonsense\n");
  try {
    apply_config_stream(config, broken, "bad.cfg");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("bad.cfg:2") != std::string::npos);
  }
  CHECK_THROWS_AS(apply_config_file(config, "/nonexistent/spherelab.cfg"), ConfigError);
}

TEST_CASE("per-experiment defaults") {
  CHECK(defaults_for(ExperimentKind::SweepN).grid.back() == 1024);
  CHECK(defaults_for(ExperimentKind::SweepBeta).grid.size() == 20);
  CHECK(defaults_for(ExperimentKind::MlpSweep).n == 512);
  CHECK(defaults_for(ExperimentKind::MlpSweep).mlp_width == 1000);
  CHECK(defaults_for(ExperimentKind::Eigen).kernel.output_bias == doctest::Approx(0.1));
  for (auto kind : {ExperimentKind::SweepN, ExperimentKind::SweepBeta, ExperimentKind::GammaCurve,
                    ExperimentKind::Eigen, ExperimentKind::MlpSweep}) {
    ExperimentConfig config = defaults_for(kind);
    CHECK_NOTHROW(config.validate());
    CHECK(parse_experiment_kind(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(parse_experiment_kind("sweep-q"), ConfigError);
}

TEST_CASE("environment seed override") {
  ExperimentConfig config = defaults_for(ExperimentKind::SweepN);
  config.spheres.seed = 1;
  ::setenv("SPHERELAB_SEED", "987654321", 1);
  apply_environment(config);
  CHECK(config.spheres.seed == 987654321u);
  ::setenv("SPHERELAB_SEED", "12abc", 1);
  CHECK_THROWS_AS(apply_environment(config), ConfigError);
  ::unsetenv("SPHERELAB_SEED");
  apply_environment(config);
  CHECK(config.spheres.seed == 987654321u);
}

TEST_CASE("config hash covers results, not plumbing") {
  ExperimentConfig a = defaults_for(ExperimentKind::SweepN);
  ExperimentConfig b = a;
  b.output_dir = "elsewhere";
  b.workers = 3;
  CHECK(config_hash(a) == config_hash(b));
  CHECK(canonical_text(a) == canonical_text(b));
  b.spheres.seed += 1;
  CHECK(config_hash(a) != config_hash(b));
  const std::string hex = config_hash_hex(a);
  CHECK(hex.size() == 16);
  CHECK(hex.find_first_not_of("0123456789abcdef") == std::string::npos);

  // canonical_text round-trips through the config reader.
  ExperimentConfig c = defaults_for(ExperimentKind::SweepN);
  apply_setting(c, "lr", "0.3");
  apply_setting(c, "grid", "log:0.01:100:7");
  std::istringstream text(canonical_text(c));
  ExperimentConfig d = defaults_for(ExperimentKind::SweepN);
  apply_config_stream(d, text);
  CHECK(canonical_text(d) == canonical_text(c));
}
