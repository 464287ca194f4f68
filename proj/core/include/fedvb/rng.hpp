#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace fedvb {

/// Stateless 64-bit mixer (splitmix64). Used to derive independent engine
/// seeds from a master seed plus stream coordinates.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Hash-chains a master seed with a list of stream coordinates
/// (tag, round, client id, ...). Every RNG consumer in the simulator gets
/// its seed through this, so results do not depend on scheduling order.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> words) {
    std::uint64_t h = splitmix64(master);
    for (std::uint64_t w : words) {
        h = splitmix64(h ^ splitmix64(w));
    }
    return h;
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
    return std::mt19937_64(seed);
}

// Stream tags keeping the per-purpose RNG streams disjoint.
namespace stream {
inline constexpr std::uint64_t kDataset = 0xD5;
inline constexpr std::uint64_t kPartition = 0xFA;
inline constexpr std::uint64_t kInit = 0x11;
inline constexpr std::uint64_t kActiveClients = 0xAC;
inline constexpr std::uint64_t kClientUpdate = 0xC1;
inline constexpr std::uint64_t kAggregation = 0xA6;
inline constexpr std::uint64_t kEval = 0xE7;
}  // namespace stream

}  // namespace fedvb
