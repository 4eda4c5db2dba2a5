#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace npquant {

// Counter-seeded xoshiro256++ with splitmix64 key expansion. Every Monte-Carlo
// work item (trial, grid node, replication, ...) derives its own stream from
// (seed, ids...), so results do not depend on thread count or loop order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) { seed_state(seed); }

  Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
    std::uint64_t key = seed;
    for (std::uint64_t id : ids) key = mix(key ^ (id + 0x9e3779b97f4a7c15ULL));
    seed_state(key);
  }

  static Rng substream(std::uint64_t seed, std::uint64_t a) { return Rng(seed, {a}); }
  static Rng substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return Rng(seed, {a, b});
  }
  static Rng substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return Rng(seed, {a, b, c});
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

  // uniform on [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal, Box-Muller (second value cached)
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    // modulo with rejection of the biased tail
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  void seed_state(std::uint64_t key) {
    std::uint64_t z = key;
    for (auto& s : s_) {
      z += 0x9e3779b97f4a7c15ULL;
      s = mix(z);
    }
    have_spare_ = false;
    spare_ = 0.0;
  }

  std::uint64_t s_[4]{};
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace npquant
