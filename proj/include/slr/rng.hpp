#pragma once

// Self-contained RNG (splitmix64 seeding + xoshiro256++) so that streams are
// reproducible bit-for-bit regardless of the standard library. Replicate
// streams are derived from a master seed by hashing (seed, stream, index),
// which keeps results independent of worker scheduling.

#include <cmath>
#include <cstdint>

namespace slr {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  // Deterministic child stream: same (master, stream, index) -> same draws.
  static Rng child(std::uint64_t master, std::uint64_t stream,
                   std::uint64_t index) {
    std::uint64_t sm = master;
    std::uint64_t a = splitmix64(sm);
    sm ^= stream * 0x9e3779b97f4a7c15ULL;
    std::uint64_t b = splitmix64(sm);
    sm ^= index * 0xd1342543de82ef95ULL;
    std::uint64_t c = splitmix64(sm);
    return Rng(a ^ (b + c));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Marsaglia polar method; one spare cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, q;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      q = u * u + v * v;
    } while (q >= 1.0 || q == 0.0);
    double f = std::sqrt(-2.0 * std::log(q) / q);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  int bernoulli(double p) { return uniform() < p ? 1 : 0; }

  // Uniform integer in [0, n)
  std::uint64_t uniform_int(std::uint64_t n) {
    // rejection to avoid modulo bias
    std::uint64_t threshold = (0ULL - n) % n;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  int sign() { return (next_u64() & 1ULL) ? 1 : -1; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace slr
