#pragma once

// Counter-based random numbers (Philox4x32-10). Every variate is a pure
// function of (seed, stream, counter), so paths can be generated in any order
// or on any thread and still come out bit-identical.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace heatgauge {

namespace detail {

inline void philox_round(std::array<std::uint32_t, 4>& c, std::array<std::uint32_t, 2> k) {
  constexpr std::uint64_t m0 = 0xD2511F53u;
  constexpr std::uint64_t m1 = 0xCD9E8D57u;
  const std::uint64_t p0 = m0 * c[0];
  const std::uint64_t p1 = m1 * c[2];
  const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
  const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace detail

/// Philox4x32 with 10 rounds.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                               std::array<std::uint32_t, 2> key) {
  for (int r = 0; r < 10; ++r) {
    detail::philox_round(counter, key);
    key[0] += 0x9E3779B9u;
    key[1] += 0xBB67AE85u;
  }
  return counter;
}

/// Uniform in the open interval (0,1) from the top 53 bits.
inline double to_unit_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Block of random bits keyed by (seed, stream, counter).
inline std::array<std::uint64_t, 2> random_block(std::uint64_t seed, std::uint64_t stream,
                                                 std::uint64_t counter) {
  const auto out = philox4x32(
      {static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32),
       static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)},
      {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  return {(static_cast<std::uint64_t>(out[0]) << 32) | out[1],
          (static_cast<std::uint64_t>(out[2]) << 32) | out[3]};
}

/// Two independent standard normals (Box-Muller) from one block.
inline std::pair<double, double> normal_pair(std::uint64_t seed, std::uint64_t stream,
                                             std::uint64_t counter) {
  const auto b = random_block(seed, stream, counter);
  const double radius = std::sqrt(-2.0 * std::log(to_unit_open(b[0])));
  const double angle = 2.0 * std::numbers::pi * to_unit_open(b[1]);
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

namespace detail {

/// Layer table of the 128-layer ziggurat for exp(-x^2/2) (Marsaglia and
/// Tsang). x[0] is the pseudo-width of the base strip, x[1] = r, x[128] = 0.
struct ZigguratTable {
  static constexpr double r = 3.442619855899;
  static constexpr double v = 9.91256303526217e-3;
  std::array<double, 129> x{};
  std::array<double, 129> f{};

  ZigguratTable() {
    const auto pdf = [](double u) { return std::exp(-0.5 * u * u); };
    x[0] = v / pdf(r);
    x[1] = r;
    for (int i = 1; i < 127; ++i) x[i + 1] = std::sqrt(-2.0 * std::log(v / x[i] + pdf(x[i])));
    x[128] = 0.0;
    for (int i = 0; i < 129; ++i) f[i] = pdf(x[i]);
  }
};

inline const ZigguratTable& ziggurat_table() {
  static const ZigguratTable table;
  return table;
}

}  // namespace detail

/// Stream of 64-bit words for one (seed, stream, step) cell; word pairs come
/// from Philox blocks with counter (j, step, stream). Requires step < 2^32.
class CellBits {
 public:
  CellBits(std::uint64_t seed, std::uint64_t stream, std::uint64_t step)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        step_(static_cast<std::uint32_t>(step)),
        stream_(stream) {}

  std::uint64_t next() {
    if (used_ == 2) {
      const auto out = philox4x32({j_++, step_, static_cast<std::uint32_t>(stream_),
                                   static_cast<std::uint32_t>(stream_ >> 32)},
                                  key_);
      buf_ = {(static_cast<std::uint64_t>(out[0]) << 32) | out[1],
              (static_cast<std::uint64_t>(out[2]) << 32) | out[3]};
      used_ = 0;
    }
    return buf_[used_++];
  }

  double uniform() { return to_unit_open(next()); }

  /// Standard normal by the ziggurat method; one word on the fast path.
  double normal() {
    const auto& z = detail::ziggurat_table();
    for (;;) {
      const std::uint64_t w = next();
      const unsigned i = static_cast<unsigned>(w & 127u);
      const double sign = (w & 128u) ? -1.0 : 1.0;
      const double u = to_unit_open(w);
      const double x = u * z.x[i];
      if (x < z.x[i + 1]) return sign * x;
      if (i == 0) {
        double a = 0.0, b = 0.0;
        do {
          a = -std::log(uniform()) / detail::ZigguratTable::r;
          b = -std::log(uniform());
        } while (2.0 * b < a * a);
        return sign * (detail::ZigguratTable::r + a);
      }
      const double y = z.f[i] + uniform() * (z.f[i + 1] - z.f[i]);
      if (y < std::exp(-0.5 * x * x)) return sign * x;
    }
  }

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint32_t step_;
  std::uint64_t stream_;
  std::uint32_t j_ = 0;
  std::array<std::uint64_t, 2> buf_{};
  int used_ = 2;
};

/// Sequential view over one stream; convenient where a single logical
/// sequence is needed (random instance generation).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  std::uint64_t next_u64() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const auto b = random_block(seed_, stream_, counter_++);
    spare_ = b[1];
    have_spare_ = true;
    return b[0];
  }

  double uniform() { return to_unit_open(next_u64()); }

  double normal() {
    const double radius = std::sqrt(-2.0 * std::log(uniform()));
    return radius * std::cos(2.0 * std::numbers::pi * uniform());
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * n) % n; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::uint64_t spare_ = 0;
  bool have_spare_ = false;
};

}  // namespace heatgauge
