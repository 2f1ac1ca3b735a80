// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <limits>

namespace wet {

/// Counter-based generator: output i is splitmix64(key + i * golden).
///
/// Every trial owns independent substreams derived from
/// (seed, trial, stream), so results do not depend on how trials are
/// scheduled across threads. Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  /// Well-known substream identifiers used by the simulator.
  enum Stream : std::uint64_t {
    kChannel = 0,
    kTraining = 1,
    kMeasurement = 2,
    kRandomBeam = 3,
  };

  explicit CounterRng(std::uint64_t seed, std::uint64_t trial = 0, std::uint64_t stream = 0)
      : key_(mix(mix(seed ^ 0x6a09e667f3bcc908ULL) + mix(trial + 0x3c6ef372fe94f82bULL) +
                 0x9e3779b97f4a7c15ULL * (stream + 1))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + 0x9e3779b97f4a7c15ULL * counter_++); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1]; safe as a logarithm argument.
  double uniformPositive() { return (static_cast<double>((*this)() >> 11) + 1.0) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate is cached.
  double gaussian();

  /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
  std::complex<double> complexGaussian(double variance = 1.0);

  std::uint64_t counter() const { return counter_; }

 private:
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool hasSpare_ = false;
};

}  // namespace wet
