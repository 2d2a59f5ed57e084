#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace atk {

// Small deterministic generator (splitmix64). The standard <random>
// distributions are implementation-defined, so every draw we make goes
// through this class to keep outputs bit-identical across toolchains.
class rng {
 public:
  explicit rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1), 53 random bits
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in [lo, hi)
  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // unbiased uniform integer in [0, n)
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // standard normal via Box-Muller; caches the second deviate
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Derives an independent seed from a base seed plus integer ids. Used to
// hand every grid cell / generator its own stream so execution order and
// thread count cannot change results.
inline std::uint64_t mix_seed(std::uint64_t seed) {
  rng g(seed);
  return g.next_u64();
}

template <class... Ids>
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t id, Ids... rest) {
  rng g(seed ^ (id + 0x9E3779B97F4A7C15ull));
  return mix_seed(g.next_u64(), static_cast<std::uint64_t>(rest)...);
}

// Named sub-stream, e.g. stream_seed(seed, "sample-order").
inline std::uint64_t stream_seed(std::uint64_t seed, std::string_view name) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return mix_seed(seed, h);
}

}  // namespace atk
