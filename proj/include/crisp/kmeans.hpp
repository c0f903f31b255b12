#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "crisp/dataset.hpp"
#include "crisp/distance.hpp"
#include "crisp/errors.hpp"

namespace crisp {

inline constexpr std::size_t kDefaultKMeansIterations = 20;

struct KMeansResult {
    DatasetMatrix centroids;               // k x dim
    std::vector<std::uint32_t> labels;     // final assignment of every training point
    std::vector<double> objective_history; // objective after each assignment step
};

/// Index of the nearest centroid; ties go to the lowest index.
inline std::size_t nearest_centroid(std::span<const float> x, const DatasetMatrix& centroids,
                                    double* best_distance = nullptr) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.n; ++c) {
        const double dist = l2_sqr(x, centroids.row(c));
        if (dist < best_d) {
            best_d = dist;
            best = c;
        }
    }
    if (best_distance) *best_distance = best_d;
    return best;
}

namespace detail {

inline DatasetMatrix kmeans_plus_plus(const DatasetMatrix& points, std::size_t k,
                                      std::mt19937_64& rng) {
    DatasetMatrix centroids(k, points.d);
    std::uniform_int_distribution<std::size_t> uniform(0, points.n - 1);
    std::size_t first = uniform(rng);
    std::copy_n(points.row(first).begin(), points.d, centroids.row(0).begin());

    std::vector<double> min_dist(points.n);
    for (std::size_t i = 0; i < points.n; ++i) min_dist[i] = l2_sqr(points.row(i), centroids.row(0));

    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (double v : min_dist) total += v;
        std::size_t pick;
        if (total <= 0.0) {
            // Fewer distinct points than k: duplicate an existing point.
            pick = uniform(rng);
        } else {
            std::uniform_real_distribution<double> unit(0.0, total);
            double target = unit(rng);
            pick = points.n - 1;
            for (std::size_t i = 0; i < points.n; ++i) {
                target -= min_dist[i];
                if (target < 0.0 && min_dist[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
            // Guard against rounding landing on an already-covered point.
            while (min_dist[pick] <= 0.0 && pick > 0) --pick;
        }
        std::copy_n(points.row(pick).begin(), points.d, centroids.row(c).begin());
        for (std::size_t i = 0; i < points.n; ++i) {
            min_dist[i] = std::min(min_dist[i], l2_sqr(points.row(i), centroids.row(c)));
        }
    }
    return centroids;
}

// Returns the objective; fills labels and per-point distances. Reports whether any label moved.
inline double assign_points(const DatasetMatrix& points, const DatasetMatrix& centroids,
                            std::vector<std::uint32_t>& labels, std::vector<double>& dist,
                            bool& changed) {
    bool any_change = false;
#pragma omp parallel for schedule(static) reduction(|| : any_change)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(points.n); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        double d = 0.0;
        const auto label = static_cast<std::uint32_t>(nearest_centroid(points.row(idx), centroids, &d));
        if (label != labels[idx]) any_change = true;
        labels[idx] = label;
        dist[idx] = d;
    }
    changed = any_change;
    double objective = 0.0;
    for (double v : dist) objective += v;
    return objective;
}

} // namespace detail

/// Lloyd's algorithm with k-means++ seeding. Runs at most `iterations` update
/// steps and stops early once no assignment changes. Empty clusters are
/// re-seeded with the point currently farthest from its centroid.
inline KMeansResult kmeans(const DatasetMatrix& points, std::size_t k,
                           std::size_t iterations = kDefaultKMeansIterations,
                           std::uint64_t seed = 0) {
    if (points.n == 0) throw ArgumentError("kmeans: no points");
    if (k == 0) throw ArgumentError("kmeans: k must be >= 1");

    std::mt19937_64 rng(seed);
    KMeansResult result;
    result.centroids = detail::kmeans_plus_plus(points, k, rng);

    const std::size_t dim = points.d;
    std::vector<std::uint32_t> labels(points.n, std::numeric_limits<std::uint32_t>::max());
    std::vector<double> dist(points.n, 0.0);
    bool changed = true;
    result.objective_history.push_back(
        detail::assign_points(points, result.centroids, labels, dist, changed));

    std::vector<double> sums(k * dim);
    std::vector<std::size_t> counts(k);
    for (std::size_t iter = 0; iter < iterations; ++iter) {
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < points.n; ++i) {
            const auto x = points.row(i);
            double* s = sums.data() + labels[i] * dim;
            for (std::size_t j = 0; j < dim; ++j) s[j] += x[j];
            ++counts[labels[i]];
        }

        std::vector<std::size_t> by_distance; // lazily built for empty-cluster reseeding
        std::size_t next_far = 0;
        for (std::size_t c = 0; c < k; ++c) {
            auto centroid = result.centroids.row(c);
            if (counts[c] > 0) {
                const double inv = 1.0 / static_cast<double>(counts[c]);
                for (std::size_t j = 0; j < dim; ++j) {
                    centroid[j] = static_cast<float>(sums[c * dim + j] * inv);
                }
                continue;
            }
            if (by_distance.empty()) {
                by_distance.resize(points.n);
                for (std::size_t i = 0; i < points.n; ++i) by_distance[i] = i;
                std::stable_sort(by_distance.begin(), by_distance.end(),
                                 [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
            }
            const std::size_t far = by_distance[std::min(next_far++, points.n - 1)];
            std::copy_n(points.row(far).begin(), dim, centroid.begin());
        }

        result.objective_history.push_back(
            detail::assign_points(points, result.centroids, labels, dist, changed));
        if (!changed) break;
    }
    result.labels = std::move(labels);
    return result;
}

} // namespace crisp
