#pragma once

#include <cstdint>
#include <random>

namespace nckrm {

// All randomness in the toolkit flows through this wrapper so that every
// sampled object is a deterministic function of an explicit 64-bit seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double gauss() { return normal_(engine_); }
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * unit_(engine_);
  }
  std::uint64_t raw() { return engine_(); }

  // Derives an independent stream, e.g. one per Monte-Carlo task.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 finalizer
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

}  // namespace nckrm
