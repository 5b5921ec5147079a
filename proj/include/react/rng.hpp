#pragma once

#include <cstdint>
#include <random>

namespace react {

// Seeded generator used everywhere randomness appears. Uniform doubles are
// produced from the raw 64-bit stream directly so that sequences are
// reproducible across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n) {
    std::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
    return dist(engine_);
  }

  bool coin() { return (engine_() >> 63) != 0; }

  double normal() { return normal_(engine_); }

  // Derives an independent child stream; used to give each instance or
  // worker its own generator.
  Rng split() { return Rng(mix(engine_())); }

  static std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  static std::uint64_t combine(std::uint64_t seed, std::uint64_t stream) {
    return mix(mix(seed) ^ (stream * 0xd1b54a32d192ed03ULL));
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace react
