#pragma once

#include <cstdint>
#include <iosfwd>
#include <string_view>

#include "spherelab/types.hpp"

namespace spherelab {

enum class Balance {
  /// Exactly n/2 points per sphere, all +1 (inner) rows first. Requires q = 1/2.
  ExactBalanced,
  /// Each point lands on the inner sphere independently with probability q.
  Bernoulli,
};

std::string_view to_string(Balance balance);
Balance parse_balance(std::string_view text);

/// Two concentric spheres in R^dim; the inner one (radius r1) carries label +1.
struct SpheresConfig {
  int dim = 100;
  double r1 = 1.0;
  double r2 = 1.11;
  double q = 0.5;
  std::uint64_t seed = 0;
  Balance balance = Balance::ExactBalanced;

  void validate() const;
};

struct SpheresDataset {
  PointMatrix X;
  Vector y;
  SpheresConfig config;
  /// Set on projected sets, whose labels deliberately disagree with the radii.
  bool adversarial = false;

  Index size() const { return X.rows(); }
  Point point(Index i) const { return row_of(X, i); }

  /// Radius/label consistency (skipped for adversarial sets) and the
  /// ExactBalanced ordering. Throws std::logic_error on violation.
  void check_invariants() const;
};

SpheresDataset sample(const SpheresConfig& config, Index n);

/// Radial map onto the other sphere: x -> (r2/r1) x on the inner sphere,
/// (r1/r2) x on the outer one. Throws if x lies on neither sphere.
Vector project(Point x, const SpheresConfig& config);

/// (P(x_i), -y_i) for every row. Applying it twice recovers the input.
SpheresDataset adversarial_set(const SpheresDataset& data);

/// Header `# d,r1,r2,q,seed,adversarial`, a `#` line with those values, then
/// one row per point: coordinates followed by the label.
void save_csv(const SpheresDataset& data, std::ostream& out);
SpheresDataset load_csv(std::istream& in);

}  // namespace spherelab
