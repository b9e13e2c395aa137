#pragma once

#include <cstdint>
#include <random>

namespace spherelab {

/// Seedable generator used for every random draw in the library.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Uniform and Gaussian variates are derived from raw engine output
/// with the formulas in random.cpp rather than the standard distributions,
/// whose algorithms are implementation-defined. Given a seed, every build on
/// every standard library therefore produces the same stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Standard normal variate (Marsaglia polar method).
  double normal();

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finalizer; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Child seed for stream `stream` of a parent seed.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream);

}  // namespace spherelab
