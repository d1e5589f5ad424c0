#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace rsoinv {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

/// 64-bit FNV-1a over raw bytes. Pass a previous digest as `seed` to chain.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t seed = kFnvOffset);
std::uint64_t fnv1a64(std::string_view text, std::uint64_t seed = kFnvOffset);

/// 16 lowercase hex digits, zero padded.
std::string to_hex64(std::uint64_t v);
/// Inverse of to_hex64; throws InputError on malformed text.
std::uint64_t from_hex64(std::string_view text);

/// SplitMix64 finalizer: a bijective avalanche mix of a 64-bit word.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: the output depends only on (key, counter), never
/// on call order, so parallel consumers reproduce the same stream.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(mix64(key)) {}

  std::uint64_t bits(std::uint64_t counter) const { return mix64(key_ ^ mix64(counter)); }

  /// Uniform in the open interval (0, 1).
  double uniform(std::uint64_t counter) const {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal deviate for a given index (Box-Muller on two counters).
  double normal(std::uint64_t index) const;

 private:
  std::uint64_t key_;
};

/// Sequential SplitMix64 stream for shuffles and test data.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = state_;
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(z);
  }
  /// Uniform integer in [0, bound) without modulo bias.
  std::uint64_t below(std::uint64_t bound);
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double normal();

 private:
  std::uint64_t state_;
};

}  // namespace rsoinv
