#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ghostdet {

/// Name written into manifests so a dataset can be regenerated bit-exactly.
inline constexpr std::string_view kRngAlgorithm = "splitmix64-substream+mt19937_64";

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed for the `index`-th substream of `master`. Independent of the order in
/// which substreams are requested.
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// Seeded random stream with platform-independent output.
///
/// std::*_distribution results are implementation-defined, so the helpers
/// below map raw engine words to values themselves.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng substream(std::uint64_t master, std::uint64_t index) {
    return Rng(substream_seed(master, index));
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [lo, hi], inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Standard normal via Box-Muller.
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ghostdet
