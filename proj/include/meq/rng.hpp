#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace meq {

/// Counter-based pseudo-random stream.
///
/// Each draw hashes (key + counter * gamma) with the SplitMix64 finalizer, so
/// a stream is fully described by two 64-bit words and can be checkpointed and
/// resumed exactly. Streams derived via split() are statistically independent
/// of the parent and of siblings with different labels.
class RngStream {
 public:
  RngStream() : RngStream(0) {}
  explicit RngStream(std::uint64_t seed) : key_(mix64(seed ^ kKeyTweak)), counter_(0) {}

  /// Derive an independent child stream. Does not advance this stream.
  RngStream split(std::string_view label) const {
    return from_state(mix64(key_ ^ fnv1a(label)), 0);
  }

  std::uint64_t next_u64() { return mix64(key_ + kGamma * ++counter_); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be >= 1.
  std::uint64_t uniform_index(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  /// Standard normal via Box-Muller. Consumes two draws, returns one value,
  /// keeps no cached state so the stream stays resumable from (key, counter).
  double normal() {
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  static RngStream from_state(std::uint64_t key, std::uint64_t counter) {
    RngStream s;
    s.key_ = key;
    s.counter_ = counter;
    return s;
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
  static constexpr std::uint64_t kKeyTweak = 0x5851F42D4C957F2Dull;
  static constexpr double kPi = 3.14159265358979323846;

  static std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (const char c : s) {
      h ^= static_cast<std::uint8_t>(c);
      h *= 0x100000001B3ull;
    }
    return h;
  }

  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace meq
