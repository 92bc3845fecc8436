#pragma once

#include <cstdint>
#include <limits>

namespace delocal {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based generator: output k of stream (seed, stream) is a pure
/// function of (seed, stream, k). Two engines built from the same triple
/// produce identical sequences regardless of what other streams were drawn,
/// which is what makes per-index disorder reproducible in any order.
class CounterEngine {
 public:
  using result_type = std::uint64_t;

  constexpr CounterEngine(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_(splitmix64(seed ^ splitmix64(stream ^ 0xD1B54A32D192ED03ULL))) {}

  constexpr result_type operator()() noexcept {
    return splitmix64(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Uniform double in [0, 1) built from the top 53 bits.
inline double uniform01(CounterEngine& engine) noexcept {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace delocal
