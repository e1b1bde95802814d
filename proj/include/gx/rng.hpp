#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

namespace gx {

// All randomness flows through this wrapper. The engine (mt19937_64) and the
// distributions below are pinned by the standard / by this file, so a given
// seed yields the same stream on any platform. Never use std::*_distribution
// here: their output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed), seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return gen_(); }

  // [0,1), 53-bit resolution
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // [0,n), unbiased via rejection
  std::uint64_t uniform_u64(std::uint64_t n) {
    std::uint64_t bound = (0 - n) % n;  // 2^64 mod n
    std::uint64_t x = next_u64();
    while (x < bound) x = next_u64();
    return x % n;
  }

  int uniform_int(int n) { return static_cast<int>(uniform_u64(static_cast<std::uint64_t>(n))); }

  double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // standard normal via Box-Muller, second value cached
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0,1]
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_u64(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  std::uint64_t seed_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

// Stable substream derivation: one master seed fans out into independent
// named streams (e.g. "SLOT",3 or "EVAL",7,2,0) without coupling their
// consumption.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                                 std::initializer_list<std::uint64_t> idx = {}) {
  std::uint64_t h = detail::mix64(base);
  for (char c : tag) h = detail::mix64(h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
  for (std::uint64_t i : idx) h = detail::mix64(h ^ i);
  return h;
}

}  // namespace gx
