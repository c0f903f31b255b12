#pragma once

// Synthetic corpora for tests, smoke benchmarks and the CLI `synth` command.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "crisp/dataset.hpp"
#include "crisp/errors.hpp"

namespace crisp::synthetic {

/// i.i.d. N(0, 1) coordinates: every covariance eigenvalue equal.
inline DatasetMatrix isotropic(std::size_t n, std::size_t d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> normal(0.0f, 1.0f);
    DatasetMatrix out(n, d);
    for (float& v : out.data) v = normal(rng);
    return out;
}

/// Variance only in the first `active` coordinates; the rest are exactly zero.
inline DatasetMatrix axis_aligned(std::size_t n, std::size_t d, std::size_t active, std::uint64_t seed) {
    if (active > d) throw ArgumentError("axis_aligned: active > d");
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> normal(0.0f, 1.0f);
    DatasetMatrix out(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = out.row(i);
        for (std::size_t j = 0; j < active; ++j) row[j] = normal(rng);
    }
    return out;
}

/// Clustered points on a random low-rank subspace plus small isotropic noise:
/// x = mix^T (center_c + z) + noise, latent scales decaying geometrically.
/// Produces the spectral concentration (high CEV) typical of image and text features.
inline DatasetMatrix correlated(std::size_t n, std::size_t d, std::size_t rank, std::uint64_t seed,
                                std::size_t clusters = 32, float noise = 0.05f) {
    if (rank == 0 || rank > d) throw ArgumentError("correlated: rank must be in [1, d]");
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> normal(0.0f, 1.0f);

    std::vector<float> mix(rank * d);
    for (float& v : mix) v = normal(rng) / std::sqrt(static_cast<float>(rank));
    std::vector<float> scale(rank);
    for (std::size_t r = 0; r < rank; ++r) scale[r] = std::pow(0.85f, static_cast<float>(r));
    std::vector<float> centers(std::max<std::size_t>(clusters, 1) * rank);
    for (float& v : centers) v = 2.0f * normal(rng);

    std::uniform_int_distribution<std::size_t> pick(0, std::max<std::size_t>(clusters, 1) - 1);
    DatasetMatrix out(n, d);
    std::vector<float> latent(rank);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = clusters == 0 ? 0 : pick(rng);
        for (std::size_t r = 0; r < rank; ++r) {
            const float center = clusters == 0 ? 0.0f : centers[c * rank + r];
            latent[r] = scale[r] * (center + normal(rng));
        }
        auto row = out.row(i);
        for (std::size_t j = 0; j < d; ++j) row[j] = noise * normal(rng);
        for (std::size_t r = 0; r < rank; ++r) {
            const float z = latent[r];
            const float* m = mix.data() + r * d;
            for (std::size_t j = 0; j < d; ++j) row[j] += z * m[j];
        }
    }
    return out;
}

/// Queries drawn as small perturbations of random corpus rows.
inline DatasetMatrix perturbed_queries(const DatasetMatrix& data, std::size_t count, float sigma,
                                       std::uint64_t seed) {
    if (data.n == 0) throw ArgumentError("perturbed_queries: empty dataset");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, data.n - 1);
    std::normal_distribution<float> normal(0.0f, sigma);
    DatasetMatrix out(count, data.d);
    for (std::size_t i = 0; i < count; ++i) {
        const auto src = data.row(pick(rng));
        auto dst = out.row(i);
        for (std::size_t j = 0; j < data.d; ++j) dst[j] = src[j] + normal(rng);
    }
    return out;
}

inline DatasetMatrix generate(const std::string& kind, std::size_t n, std::size_t d, std::uint64_t seed,
                              std::size_t rank) {
    if (kind == "isotropic") return isotropic(n, d, seed);
    if (kind == "axis") return axis_aligned(n, d, std::min(rank, d), seed);
    if (kind == "correlated") return correlated(n, d, std::min(rank, d), seed);
    throw ArgumentError("unknown synthetic kind '" + kind + "' (expected isotropic|axis|correlated)");
}

} // namespace crisp::synthetic
