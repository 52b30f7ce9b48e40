#pragma once

#include <cstdint>
#include <random>

namespace fedego {

using Rng = std::mt19937_64;

/// Purpose tags for seed-derived streams. Each (seed, purpose, index) triple
/// yields an independent generator, so the order in which clients run never
/// affects what they draw.
enum class StreamKind : std::uint64_t {
    partition = 1,
    model_init = 2,
    client_train = 3,
    server_train = 4,
    evaluation = 5,
    synthetic_graph = 6,
    theorem_check = 7,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, StreamKind kind, std::uint64_t index = 0) {
    return mix64(mix64(mix64(seed) ^ static_cast<std::uint64_t>(kind)) ^ index);
}

inline Rng make_stream(std::uint64_t seed, StreamKind kind, std::uint64_t index = 0) {
    return Rng(derive_seed(seed, kind, index));
}

}  // namespace fedego
