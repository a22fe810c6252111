#pragma once

// Counter-based random numbers. Every random quantity in the toolkit is a
// pure function of (key, counter), so a weight or an oriented edge state can
// be queried in any order, from any thread, over any region size.

#include <array>
#include <cstdint>
#include <string_view>

namespace fpp {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return splitmix64(h ^ splitmix64(v));
}

inline constexpr std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return splitmix64(h);
}

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

// Philox4x32-10 (Salmon et al., Random123).
inline constexpr PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53U;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57U;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9U;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85U;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
           static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
           static_cast<std::uint32_t>(p0)};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

// Keyed stream: one 64-bit key, 4x32-bit counters, uniform doubles in [0,1).
class CounterRng {
 public:
  constexpr CounterRng() = default;
  constexpr explicit CounterRng(std::uint64_t key)
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {}

  constexpr std::uint64_t bits(std::uint32_t c0, std::uint32_t c1, std::uint32_t c2,
                               std::uint32_t c3 = 0) const {
    const PhiloxCounter out = philox4x32_10({c0, c1, c2, c3}, key_);
    return (std::uint64_t{out[0]} << 32) | out[1];
  }

  // 53 random bits mapped to [0,1).
  constexpr double uniform(std::uint32_t c0, std::uint32_t c1, std::uint32_t c2,
                           std::uint32_t c3 = 0) const {
    return static_cast<double>(bits(c0, c1, c2, c3) >> 11) * 0x1.0p-53;
  }

 private:
  PhiloxKey key_{0, 0};
};

// Stream key for a (seed, replicate, domain) triple.
inline constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t replicate,
                                          std::uint64_t domain) {
  return hash_combine(hash_combine(splitmix64(seed), replicate), domain);
}

// Per-task seed derived from the master seed. Partial reruns reproduce the
// exact environments of a full run because nothing depends on task order.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                                 std::int64_t n, std::int64_t replicate) {
  std::uint64_t h = hash_combine(splitmix64(master), hash_string(stream));
  h = hash_combine(h, static_cast<std::uint64_t>(n));
  return hash_combine(h, static_cast<std::uint64_t>(replicate));
}

}  // namespace fpp
