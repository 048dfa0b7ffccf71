#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace swem {

namespace detail {

// SplitMix64 finalizer. Full-avalanche mixing of a 64-bit word.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_label(std::string_view label) {
  // FNV-1a.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace detail

// Counter-based pseudo-random generator. The i-th output of a stream is a
// pure function of (key, i), so streams can be split into independent child
// streams by deriving a new key. Every stochastic operation in the library
// takes one of these by reference; nothing reads global RNG state.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(std::uint64_t seed) : key_(detail::mix64(seed ^ 0x5851F42D4C957F2DULL)) {}

  // Derives an independent child stream. Children with distinct labels (or
  // the same label on distinct parents) do not collide in practice.
  Rng split(std::uint64_t stream) const {
    Rng child;
    child.key_ = detail::mix64(key_ ^ detail::mix64(stream + 0x632BE59BD9B4E019ULL));
    child.counter_ = 0;
    return child;
  }
  Rng split(std::string_view label) const { return split(detail::hash_label(label)); }
  Rng split(std::string_view label, std::uint64_t stream) const {
    return split(detail::hash_label(label)).split(stream);
  }

  std::uint64_t next_u64() { return detail::mix64(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

  // Uniform on [0, 1), 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer on [0, n). n must be positive. Lemire multiply-shift
  // with rejection, so the draw is exactly uniform.
  int uniform_int(int n) {
    const auto un = static_cast<std::uint64_t>(n);
    const std::uint64_t threshold = (0ULL - un) % un;
    while (true) {
      const std::uint64_t x = next_u64();
      const unsigned __int128 m = static_cast<unsigned __int128>(x) * un;
      if (static_cast<std::uint64_t>(m) >= threshold) {
        return static_cast<int>(static_cast<std::uint64_t>(m >> 64));
      }
    }
  }

  // Standard normal via Box-Muller. Caches the spare deviate, so draws stay
  // reproducible per stream.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(static_cast<int>(i)));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace swem
