#pragma once

#include <cmath>
#include <cstdint>

#include "outlab/errors.hpp"

namespace outlab {

namespace detail {

// SplitMix64 finalizer: a bijective hash of the 64-bit state.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ull;

}

// Counter-based generator: the state walks an arithmetic sequence and every
// output is a hash of the state, so a stream is a pure function of its seed.
// No shared state anywhere; thread scheduling cannot change any draw.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += detail::golden_gamma;
    return detail::mix64(state_);
  }

  // [0, 1), 53 mantissa bits
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform on [-b, b]
  double uniform_symmetric(double b) { return (2.0 * uniform01() - 1.0) * b; }

  // N(0,1) real, Box-Muller; the second member of each pair is cached
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0,1]
    double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // standard complex gaussian, E g = 0, E |g|^2 = 1
  Complex gaussian_complex() {
    double re = gaussian();
    double im = gaussian();
    return {re * 0.70710678118654752440, im * 0.70710678118654752440};
  }

  double rademacher() { return (next_u64() >> 63) ? -1.0 : 1.0; }

  bool bernoulli(double p) { return uniform01() < p; }

private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Derives one independent stream per (trial, tag). Streams depend only on
// these indices and the master seed, never on draw order elsewhere, which is
// what makes runs bit-identical under any worker count.
struct SeedPolicy {
  std::uint64_t master_seed = 0;

  Rng stream(std::uint64_t trial, std::uint64_t tag = 0) const {
    std::uint64_t s = detail::mix64(master_seed ^ detail::mix64(detail::golden_gamma * (trial + 1)));
    s = detail::mix64(s ^ 0xD1B54A32D192ED03ull * (tag + 1));
    return Rng(s);
  }
};

}
