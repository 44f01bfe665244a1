#pragma once

// Counter-based seeding: every (root seed, stream, lane) triple maps to an
// independent Mersenne Twister state, so path i is reproducible regardless of
// which worker generates it.

#include <cstdint>
#include <random>

namespace pbdg {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t root, std::uint64_t stream,
                                    std::uint64_t lane = 0) {
  return splitmix64(splitmix64(splitmix64(root) ^ stream) ^ (lane * 0xd1b54a32d192ed03ULL));
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t root, std::uint64_t stream,
                          std::uint64_t lane = 0) {
  return Engine(substream_seed(root, stream, lane));
}

// Lanes used by the generators; distinct lanes give independent draws for
// the same path index.
namespace lane {
inline constexpr std::uint64_t kDiffusion = 0;
inline constexpr std::uint64_t kJumps = 1;
inline constexpr std::uint64_t kOracle = 2;
inline constexpr std::uint64_t kStopping = 3;
inline constexpr std::uint64_t kShape = 4;
}  // namespace lane

}  // namespace pbdg
