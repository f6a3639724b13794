#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace normbench::engine {

// Deterministic splitmix64 stream. std::mt19937 would also be portable, but
// the standard <random> distributions are not bit-stable across toolchains,
// so all bounded/real draws are implemented here.
class Rng {
public:
  Rng() : state_(0x9e3779b97f4a7c15ULL) {}
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform integer in [0, n), n >= 1. Rejection sampling keeps it unbiased.
  uint64_t uniform_int(uint64_t n) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  // Uniform double in [0, 1).
  double uniform_real() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform_real();
    double u2 = uniform_real();
    while (u1 <= 0.0) u1 = uniform_real();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Derive an independent child stream; used to give each subsystem of a run
  // its own sequence from one master seed.
  Rng fork(uint64_t stream_id) const {
    Rng child(state_ ^ (0x2545f4914f6cdd1dULL * (stream_id + 1)));
    child.next_u64();
    return child;
  }

  uint64_t state() const { return state_; }

  bool operator==(const Rng& other) const = default;

private:
  uint64_t state_;
};

// FNV-1a, used to derive stable per-string seeds (e.g. one noise draw per
// distinct sentence).
inline uint64_t hash_string(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t hash_combine(uint64_t a, uint64_t b) {
  return a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
}

}  // namespace normbench::engine
