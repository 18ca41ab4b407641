#pragma once

// Counter-based random numbers. Every draw is a pure function of
// (key, counter), so replications can run on any thread in any order and
// still reproduce the same sample.

#include <array>
#include <cstdint>

#include "oliva/numeric.hpp"

namespace oliva {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed of replication `rep` in a study with `base_seed`, for design `dgp`.
inline constexpr std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t rep,
                                           std::uint64_t dgp) {
  return splitmix64(splitmix64(splitmix64(base_seed) ^ rep) ^ (dgp * 0xD1B54A32D192ED03ULL));
}

// Philox4x32-10 block function (Salmon et al., SC'11).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter encrypt(Counter c, Key k) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        k[0] += 0x9E3779B9u;
        k[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
    return c;
  }
};

// Uniform and normal variates addressed by (index, lane).
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  // Two uniforms in (0, 1) with 53-bit resolution.
  std::array<double, 2> uniforms(std::uint64_t index, std::uint32_t lane) const {
    const auto w = Philox4x32::encrypt(
        {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), lane, 0u},
        key_);
    return {to_unit(w[0], w[1]), to_unit(w[2], w[3])};
  }

  // Two independent standard normals by inverse CDF.
  std::array<double, 2> normals(std::uint64_t index, std::uint32_t lane) const {
    const auto u = uniforms(index, lane);
    return {normal_quantile(u[0]), normal_quantile(u[1])};
  }

 private:
  static double to_unit(std::uint32_t a, std::uint32_t b) {
    const std::uint64_t bits = (std::uint64_t{a >> 5} << 26) | (b >> 6);
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  Philox4x32::Key key_;
};

}  // namespace oliva
