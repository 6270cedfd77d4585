#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace uoi {

/// Identifies which random process a stream feeds.
enum class StreamKind : std::uint32_t {
  weight = 1,
  increment = 2,
  channel = 3,
  backoff = 4,
  policy = 5,
  plant = 6,
};

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// Counter-based random stream.
///
/// The i-th variate is a pure function of (key, i), so a slot-indexed draw
/// can be repeated or looked ahead without disturbing anything else. Every
/// (seed, replication, terminal, kind) tuple owns its own key, which is what
/// lets competing schedulers see identical randomness.
class Stream {
 public:
  Stream() = default;
  Stream(std::uint64_t seed, std::uint64_t replication, std::uint64_t terminal, StreamKind kind)
      : key_(make_key(seed, replication, terminal, kind)) {}

  static constexpr std::uint64_t make_key(std::uint64_t seed, std::uint64_t replication,
                                          std::uint64_t terminal, StreamKind kind) {
    std::uint64_t k = mix64(seed + kGolden);
    k = mix64(k ^ (replication + 1) * 0xd1342543de82ef95ULL);
    k = mix64(k ^ (terminal + 1) * 0xaf251af3b0f025b5ULL);
    k = mix64(k ^ static_cast<std::uint64_t>(kind) * 0x2545f4914f6cdd1dULL);
    return k;
  }

  /// Raw 64 bits at position `index`.
  std::uint64_t bits(std::uint64_t index) {
    ++draws_;
    return mix64(key_ + kGolden * (index + 1));
  }

  /// Uniform on the open interval (0, 1).
  double uniform(std::uint64_t index) { return to_unit(bits(index)); }

  /// Standard normal at position `index` (Box-Muller, cosine branch).
  double normal(std::uint64_t index) {
    ++draws_;
    const double u1 = to_unit(mix64(key_ + kGolden * (2 * index + 1)));
    const double u2 = to_unit(mix64(key_ ^ mix64(kGolden * (2 * index + 2))));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer on {0, ..., n-1}.
  std::uint64_t below(std::uint64_t index, std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform(index) * static_cast<double>(n)) % n;
  }

  double next_uniform() { return uniform(cursor_++); }

  std::uint64_t draws() const { return draws_; }
  std::uint64_t key() const { return key_; }

 private:
  static double to_unit(std::uint64_t x) {
    return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t key_ = 0;
  std::uint64_t cursor_ = 0;
  std::uint64_t draws_ = 0;
};

}  // namespace uoi
