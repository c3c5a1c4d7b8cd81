#pragma once

// Counter-based random streams.
//
// Every random number in the library is a pure function of
//   key     = 64-bit root seed (split into two 32-bit words),
//   counter = (index_lo, index_hi, replicate, domain).
// `domain` names the consumer (field modes, torus noise, path increments, ...),
// `replicate` the independent copy, `index` the position inside that copy.
// Results therefore do not depend on thread scheduling or on how many draws
// other replicates made.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace dynkin {

/// Philox4x32-10 block function (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter generate(Counter ctr, Key key) noexcept {
    ctr = single_round(ctr, key);
#pragma GCC unroll 9
    for (int round = 1; round < 10; ++round) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
      ctr = single_round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static constexpr Counter single_round(const Counter& c, const Key& k) noexcept {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

enum class StreamDomain : std::uint32_t {
  field_modes = 1,
  heat_modes = 2,
  torus_noise = 3,
  path_increments = 4,
  exit_times = 5,
  property_tests = 100,
};

namespace detail {

// 53-bit uniform in [0, 1).
constexpr double to_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// 53-bit uniform in (0, 1]; safe as a log argument.
constexpr double to_unit_open_left(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

}  // namespace detail

/// Random-access view of one (seed, domain, replicate) stream.
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, StreamDomain domain, std::uint32_t replicate) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        replicate_(replicate),
        domain_(static_cast<std::uint32_t>(domain)) {}

  constexpr Philox4x32::Counter block(std::uint64_t index) const noexcept {
    return Philox4x32::generate({static_cast<std::uint32_t>(index),
                                 static_cast<std::uint32_t>(index >> 32), replicate_, domain_},
                                key_);
  }

  /// Two independent uniforms: first in (0,1], second in [0,1).
  std::array<double, 2> uniform_pair(std::uint64_t index) const noexcept {
    const auto b = block(index);
    return {detail::to_unit_open_left(b[0], b[1]), detail::to_unit(b[2], b[3])};
  }

  /// Two independent standard normals (Box–Muller on one block).
  std::array<double, 2> normal_pair(std::uint64_t index) const noexcept {
    const auto u = uniform_pair(index);
    const double radius = std::sqrt(-2.0 * std::log(u[0]));
    const double angle = 2.0 * std::numbers::pi * u[1];
    return {radius * std::cos(angle), radius * std::sin(angle)};
  }

 private:
  Philox4x32::Key key_;
  std::uint32_t replicate_;
  std::uint32_t domain_;
};

/// Sequential reader over a CounterRng; the position is part of the state so a
/// stream can be resumed exactly.
class RngStream {
 public:
  constexpr RngStream(std::uint64_t seed, StreamDomain domain, std::uint32_t replicate) noexcept
      : rng_(seed, domain, replicate) {}

  std::uint64_t position() const noexcept { return next_block_; }

  double uniform() noexcept {
    if (!has_spare_uniform_) {
      const auto u = rng_.uniform_pair(next_block_++);
      spare_uniform_ = u[1];
      has_spare_uniform_ = true;
      return u[0];
    }
    has_spare_uniform_ = false;
    // The spare lies in [0,1); map to (0,1] so every draw is log-safe.
    return 1.0 - spare_uniform_;
  }

  double normal() noexcept {
    if (has_spare_normal_) {
      has_spare_normal_ = false;
      return spare_normal_;
    }
    const auto z = rng_.normal_pair(next_block_++);
    spare_normal_ = z[1];
    has_spare_normal_ = true;
    return z[0];
  }

  /// Standard exponential (mean one).
  double exponential() noexcept { return -std::log(uniform()); }

 private:
  CounterRng rng_;
  std::uint64_t next_block_ = 0;
  double spare_uniform_ = 0.0;
  double spare_normal_ = 0.0;
  bool has_spare_uniform_ = false;
  bool has_spare_normal_ = false;
};

}  // namespace dynkin
