#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace coresketch {

// Counter-based splittable PRNG. Every random decision in the library flows
// from a (seed, tag) pair, so identical seeds reproduce identical results
// bit-for-bit regardless of platform or call interleaving.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : key_(mix(seed ^ kGolden)), counter_(0) {}

  // Derive an independent stream for a sub-operation.
  RngStream derive(std::string_view tag) const {
    std::uint64_t h = key_;
    for (char c : tag) h = mix(h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
    return RngStream(h, 0);
  }
  RngStream derive(std::uint64_t salt) const { return RngStream(mix(key_ ^ mix(salt)), 0); }

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGolden); }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; explicit so results do not depend on the
  // standard library's distribution implementation.
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = next_double();
    } while (u1 <= 0.0);
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) {
    // 128-bit multiply avoids modulo bias.
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  RngStream(std::uint64_t key, std::uint64_t counter) : key_(key), counter_(counter) {}

  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace coresketch
