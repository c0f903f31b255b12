#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <unordered_set>
#include <vector>

namespace crisp::detail {

// splitmix64 finalizer; used to derive independent RNG streams from one user seed.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Stream ids, kept in one place so no two consumers share a stream.
enum class SeedStream : std::uint64_t {
    cev_sample = 1,
    rotation = 2,
    training_sample = 3,
    kmeans_base = 1000, // + half index
    simulation_base = 1'000'000, // + chunk index
};

constexpr std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream, std::uint64_t offset = 0) {
    return mix_seed(seed, static_cast<std::uint64_t>(stream) + offset);
}

// Floyd's sampling of `count` distinct values from [0, n), returned ascending.
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count,
                                                           std::mt19937_64& rng) {
    std::vector<std::size_t> picked;
    if (count >= n) {
        picked.resize(n);
        for (std::size_t i = 0; i < n; ++i) picked[i] = i;
        return picked;
    }
    std::unordered_set<std::size_t> chosen;
    chosen.reserve(count * 2);
    picked.reserve(count);
    for (std::size_t j = n - count; j < n; ++j) {
        std::uniform_int_distribution<std::size_t> dist(0, j);
        const std::size_t t = dist(rng);
        const std::size_t pick = chosen.insert(t).second ? t : j;
        if (pick == j) chosen.insert(j);
        picked.push_back(pick);
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

} // namespace crisp::detail
