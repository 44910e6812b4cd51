#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace qsynth {

using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

/// Per-stage seed: splitmix64(splitmix64(master ^ splitmix64(index)) ^ fnv1a(stage)).
/// Any (master, index, stage) triple reproduces its stream independently of
/// the order in which other stages were run.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                    std::string_view stage) noexcept {
    const std::uint64_t a = detail::splitmix64(master ^ detail::splitmix64(index));
    return detail::splitmix64(a ^ detail::fnv1a(stage));
}

}  // namespace qsynth
