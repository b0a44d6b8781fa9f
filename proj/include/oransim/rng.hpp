#pragma once

#include <cmath>
#include <cstdint>

namespace oransim {

// splitmix64 finalizer; all seeding and keyed draws funnel through this.
inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
  return mix64(mix64(mix64(mix64(base) ^ a) ^ b) ^ c);
}

// Sequential xoshiro-style stream built on splitmix64 state advance.
// Distribution transforms are hand-rolled so that traces are reproducible
// across standard libraries.
class RngStream {
 public:
  RngStream() : state_(0x853c49e6748fea9bULL) {}
  explicit RngStream(uint64_t seed) : state_(mix64(seed ^ 0x2545f4914f6cdd1dULL)) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  uint64_t uniform_int(uint64_t n) { return next_u64() % n; }

  // unit-mean exponential
  double exponential() { return -std::log1p(-uniform()); }

  // standard normal (Box-Muller, cosine branch)
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    // avoid log(0)
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  uint64_t state() const { return state_; }

 private:
  uint64_t state_;
};

// Stateless keyed generator: a pure function of (seed, key parts). Used for
// per-(step, user, du, rb) fading so draws are independent of evaluation
// order and need no storage.
class KeyedRng {
 public:
  KeyedRng() = default;
  explicit KeyedRng(uint64_t seed) : seed_(seed) {}

  double uniform(uint64_t a, uint64_t b, uint64_t c, uint64_t d) const {
    uint64_t h = derive_seed(seed_ ^ 0x6a09e667f3bcc909ULL, a, b, c);
    h = mix64(h ^ d);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
  }

  // unit-mean exponential keyed draw
  double exponential(uint64_t a, uint64_t b, uint64_t c, uint64_t d) const {
    return -std::log1p(-uniform(a, b, c, d));
  }

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_ = 0;
};

}  // namespace oransim
