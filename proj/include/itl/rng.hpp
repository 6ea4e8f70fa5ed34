/**
 * @file rng.hpp
 * @brief Counter-based splittable random streams.
 *
 * Every stochastic operation in the toolkit draws from an RngStream keyed by
 * (seed, a, b, c). Streams are stateless functions of (key, counter), so any
 * draw is reproducible regardless of evaluation order or thread count.
 */
#ifndef ITL_RNG_HPP
#define ITL_RNG_HPP

#include <cmath>
#include <cstdint>

#include "itl/common.hpp"

namespace itl {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0,
            std::uint64_t c = 0) {
    key_ = detail::splitmix64(seed);
    key_ = detail::splitmix64(key_ ^ (a + 0x51ed270b0a1c2ff3ULL));
    key_ = detail::splitmix64(key_ ^ (b + 0xa24baed4963ee407ULL));
    key_ = detail::splitmix64(key_ ^ (c + 0x9fb21c651e98df25ULL));
  }

  std::uint64_t next_u64() { return detail::splitmix64(key_ ^ counter_++); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (fixed algorithm, unlike std::normal_distribution).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * constants::kPi * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace itl

#endif  // ITL_RNG_HPP
