#pragma once

#include <cstdint>
#include <random>

namespace ntm {

/// Portable random source: std::mt19937_64 (whose output sequence is fixed by
/// the C++ standard) plus hand-written distributions, since the standard
/// distributions are implementation-defined.
///
/// Independent streams are derived from (seed, stream index) through
/// std::seed_seq, so instance i of a run never depends on how many draws
/// instance i-1 consumed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform integer in [lo, hi] by rejection sampling (no modulo bias).
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);
  /// Uniform double in [0, 1) from the top 53 bits of one draw.
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ntm
