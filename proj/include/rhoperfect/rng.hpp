#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string_view>
#include <vector>

namespace rhoperfect::rng {

inline constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

// Substream key derivation. Streams for distinct labels/indices are
// independent, which keeps parallel per-item work order-independent.
constexpr std::uint64_t derive(std::uint64_t key, std::uint64_t index) noexcept {
  return mix64(mix64(key + kGamma) ^ mix64(index + 0x632BE59BD9B4E019ull));
}

constexpr std::uint64_t derive(std::uint64_t key, std::string_view label) noexcept {
  return mix64(mix64(key + kGamma) ^ fnv1a64(label));
}

// Counter-based generator (SplitMix64): output i is a pure function of
// (key, i), so identical seeds replay identically on any platform. The
// standard library distributions are implementation-defined and are not used.
class Stream {
 public:
  explicit constexpr Stream(std::uint64_t key) noexcept
      : state_(mix64(key ^ 0x8E9D5AAD46C4BE4Cull)) {}

  std::uint64_t next_u64() noexcept {
    state_ += kGamma;
    return mix64(state_);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_unit() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double next_uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * next_unit();
  }

  // Unbiased integer in [0, n) via rejection; n >= 1.
  std::uint64_t next_below(std::uint64_t n) noexcept {
    std::uint64_t x = 0;
    std::uint64_t r = 0;
    do {
      x = next_u64();
      r = x % n;
    } while (x - r > std::numeric_limits<std::uint64_t>::max() - (n - 1));
    return r;
  }

  int next_int_inclusive(int lo, int hi) noexcept {
    return lo + static_cast<int>(next_below(
                    static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // Standard normal via Box-Muller (cosine branch only).
  double next_gaussian() noexcept {
    double u1 = next_unit();
    if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  std::uint64_t state_;
};

// Fisher-Yates.
template <typename T>
void shuffle(std::vector<T>& v, Stream& s) {
  for (std::size_t i = v.size(); i > 1; --i) {
    using std::swap;
    swap(v[i - 1], v[s.next_below(i)]);
  }
}

}  // namespace rhoperfect::rng
