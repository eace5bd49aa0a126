#pragma once

#include <cstdint>
#include <random>

namespace signforge {

// Seedable generator shared by every stochastic routine.
//
// Draws come from std::mt19937_64, whose output sequence is fixed by the
// C++ standard. Uniform and normal variates are derived here rather than via
// <random> distributions (whose algorithms are implementation-defined), so a
// given seed yields the same stream on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 42) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Independent child stream, deterministic in the parent state.
  Rng split() { return Rng(next_u64()); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace signforge
