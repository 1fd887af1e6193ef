#pragma once

#include <cstdint>
#include <string_view>

namespace vmt {

/// Counter-based deterministic generator. A stream is keyed by (seed, labels);
/// draws are pure functions of (key, counter), so any sub-stream can be
/// replayed independently of evaluation order.
class Rng {
 public:
  explicit Rng(uint64_t seed) : key_(mix(seed ^ 0x9e3779b97f4a7c15ull)) {}

  /// Derive a sub-stream for a named purpose (stable across runs).
  Rng stream(std::string_view label) const {
    uint64_t h = key_;
    for (char ch : label) h = mix(h ^ uint64_t(uint8_t(ch)));
    return Rng(FromKey{}, h);
  }
  Rng stream(uint64_t index) const { return Rng(FromKey{}, mix(key_ ^ mix(index))); }

  uint64_t next_u64() { return mix(key_ ^ mix(++counter_)); }
  /// Uniform in [0, 1).
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

 private:
  struct FromKey {};
  Rng(FromKey, uint64_t key) : key_(key) {}

  static uint64_t mix(uint64_t z) {  // splitmix64 finalizer
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  uint64_t key_ = 0;
  uint64_t counter_ = 0;
};

}  // namespace vmt
