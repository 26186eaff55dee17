#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace chanlearn {

/// Deterministic random stream with hand-rolled distributions.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard, and every distribution below is implemented here rather than
/// taken from <random>, so a (seed, call sequence) pair produces identical
/// draws on every platform and toolchain. Independent substreams are derived
/// by hashing a master seed with an index path; generating samples k and k+1
/// from their own substreams gives the same bits no matter how the work is
/// scheduled.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Substream for (master, index).
  static RandomStream derive(std::uint64_t master, std::uint64_t index);

  /// Substream for a nested path, e.g. derive(seed, {kTagEpoch, epoch}).
  static RandomStream derive(std::uint64_t master,
                             std::initializer_list<std::uint64_t> path);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform();

  /// Uniform on the open interval (0, 1).
  double uniform_open();

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);

  /// Uniform integer on [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

  /// Standard normal via the polar method.
  double normal();

  /// Gamma(shape, 1) by Marsaglia-Tsang squeeze rejection; exact in
  /// distribution for any shape > 0.
  double gamma(double shape);

  /// Beta(alpha, beta) as the gamma ratio g_a / (g_a + g_b).
  double beta(double alpha, double beta);

 private:
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

/// SplitMix64 finalizer; bijective 64-bit mixer used for seed derivation.
std::uint64_t mix64(std::uint64_t z);

/// Collapse (master, path...) into a single substream seed.
std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> path);

}  // namespace chanlearn
