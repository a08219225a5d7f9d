#pragma once

#include <cstdint>

namespace mv3d {

// Deterministic 64-bit generator, splitmix64:
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
// The algorithm is pinned by known-answer vectors in the test suite; every
// stochastic operation in the library takes a seed or a generator handle.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform in [0, n); n > 0.
  std::uint64_t uniform_int(std::uint64_t n) { return next() % n; }

  // Standard normal via Box-Muller; consumes two uniforms per pair and caches
  // the spare, so the stream is deterministic.
  double normal();

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Per-item seed derivation: hash(master, index) through the splitmix64
// finalizer, so parallel consumers of item streams never share state.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace mv3d
