#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace causalad {

using Rng = std::mt19937_64;

/// FNV-1a over the bytes of `text`. Stable across platforms, unlike std::hash.
constexpr std::uint64_t fnv1a(std::string_view text, std::uint64_t hash = 0xcbf29ce484222325ULL) {
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

/// Per-stage seed derived from the master seed and a stage name.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view stage) {
    std::uint64_t h = fnv1a(stage);
    h ^= master + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    // splitmix64 finalizer
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
    return h ^ (h >> 31);
}

}  // namespace causalad
