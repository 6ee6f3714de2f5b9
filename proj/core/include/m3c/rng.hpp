#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace m3c {

// Deterministic seed derivation. Every stream of randomness in the library is
// keyed by a master seed plus a path of stream identifiers, so that replicate
// runs, grid-search candidates and solver restarts are independent yet fully
// reproducible.

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    return splitmix64(splitmix64(a) ^ (0x9e3779b97f4a7c15ULL + b));
}

inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = splitmix64(master);
    for (std::uint64_t p : path) s = mix_seed(s, p);
    return s;
}

// FNV-1a, used to fold method tags and file names into seed paths.
constexpr std::uint64_t hash_tag(std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
    return std::mt19937_64(splitmix64(seed));
}

}  // namespace m3c
