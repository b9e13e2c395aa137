#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace spherelab {

struct VerifyOptions {
  /// Suite names to run; empty runs every suite of the selected profile.
  std::vector<std::string> only;
  /// Also run suites marked slow (the finite-width training sweep).
  bool include_slow = false;
  std::uint64_t seed = 20240601;
  /// Enables the sign fault in projection_prediction_identity for the whole run.
  bool inject_corollary_fault = false;
  int workers = 0;
};

struct SuiteInfo {
  std::string name;
  std::string title;
  bool slow = false;
};

struct SuiteResult {
  std::string name;
  std::string title;
  bool passed = true;
  int checks = 0;
  /// First few failure messages.
  std::vector<std::string> failures;
  int failure_count = 0;
  double seconds = 0.0;
};

std::vector<SuiteInfo> verify_suites();

/// Runs the selected suites in registry order. Throws std::invalid_argument
/// for an unknown name in `only`.
std::vector<SuiteResult> run_verify(const VerifyOptions& options);

/// One line per suite plus a total line.
std::string format_scoreboard(const std::vector<SuiteResult>& results);

}  // namespace spherelab
