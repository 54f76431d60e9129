#pragma once

// Counter-based random numbers.
//
// Philox4x32-10 maps (key, counter) to four 32-bit words with no hidden state,
// so draw i of stream s under seed k is the same no matter which thread or in
// which order it is requested.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace chaoskit {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

// Uniform in the open interval (0, 1). 52 bits, so (bits + 1/2) 2^-52 is
// exactly representable and never rounds up to 1.
inline double uniform_open(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 12;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Independent child seed for (stream, index) under a base seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ splitmix64(stream)) + index);
}

namespace stream_id {
inline constexpr std::uint32_t kGaussianSample = 0;
inline constexpr std::uint32_t kTensorEntries = 1;
}  // namespace stream_id

/// Fills `out` with standard normals for draw `index` of `stream` under
/// `seed`. Each Philox block yields one Box-Muller pair.
inline void fill_normals(std::span<double> out, std::uint64_t seed,
                         std::uint32_t stream, std::uint64_t index) {
  const PhiloxKey key{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32)};
  for (std::size_t pos = 0; pos < out.size(); pos += 2) {
    const auto block = static_cast<std::uint32_t>(pos / 2);
    const PhiloxCounter words = philox4x32_10(
        {block, static_cast<std::uint32_t>(index),
         static_cast<std::uint32_t>(index >> 32), stream},
        key);
    const double u1 = uniform_open(words[0], words[1]);
    const double u2 = uniform_open(words[2], words[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    out[pos] = radius * std::cos(angle);
    if (pos + 1 < out.size()) out[pos + 1] = radius * std::sin(angle);
  }
}

}  // namespace chaoskit
