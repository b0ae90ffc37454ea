#pragma once

#include <cstdint>
#include <string_view>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

namespace trafficforge {

/// Engine used everywhere; Boost's distributions are header code, so draws are
/// identical across platforms and standard libraries.
using Rng = boost::random::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stable 64-bit hash for seed derivation. Not for security.
class SeedHash {
 public:
  explicit SeedHash(std::uint64_t seed = 0) : state_(splitmix64(seed)) {}

  SeedHash& add(std::uint64_t v) {
    state_ = splitmix64(state_ ^ splitmix64(v));
    return *this;
  }
  SeedHash& add(std::int64_t v) { return add(static_cast<std::uint64_t>(v)); }
  SeedHash& add(int v) { return add(static_cast<std::uint64_t>(static_cast<std::int64_t>(v))); }
  SeedHash& add(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return add(h ^ s.size());
  }

  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_;
};

inline double uniform(Rng& rng, double lo, double hi) {
  return boost::random::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double gaussian(Rng& rng, double mean, double stddev) {
  if (stddev == 0.0) return mean;
  return boost::random::normal_distribution<double>(mean, stddev)(rng);
}

/// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return boost::random::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

/// Fisher-Yates with uniform_index, stable across standard libraries.
template <typename Vec>
void stable_shuffle(Vec& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace trafficforge
