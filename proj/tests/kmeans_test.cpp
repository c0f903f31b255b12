#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "crisp/kmeans.hpp"
#include "test_util.hpp"

using namespace crisp;

TEST(KMeans, DistinctPointsBecomeCentroids) {
    DatasetMatrix points(4, 2, {0, 0, 10, 0, 0, 10, 10, 10});
    const auto r = kmeans(points, 4, 20, 3);
    std::set<std::pair<float, float>> got, want;
    for (std::size_t c = 0; c < 4; ++c) got.insert({r.centroids.row(c)[0], r.centroids.row(c)[1]});
    for (std::size_t i = 0; i < 4; ++i) want.insert({points.row(i)[0], points.row(i)[1]});
    EXPECT_EQ(got, want);
    EXPECT_DOUBLE_EQ(r.objective_history.back(), 0.0);
}

TEST(KMeans, SingleCentroidIsMean) {
    const auto points = crisp::testing::uniform_data(500, 3, 4);
    const auto r = kmeans(points, 1, 20, 1);
    for (std::size_t j = 0; j < 3; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < points.n; ++i) mean += points.row(i)[j];
        mean /= double(points.n);
        EXPECT_NEAR(r.centroids.row(0)[j], mean, 1e-5);
    }
}

TEST(KMeans, SeparatedBlobs) {
    const float sep = 20.0f;
    std::mt19937_64 rng(5);
    std::normal_distribution<float> g(0.0f, 1.0f);
    DatasetMatrix points(400, 2);
    for (std::size_t i = 0; i < points.n; ++i) {
        const float cx = i % 2 == 0 ? 0.0f : sep;
        points.row(i)[0] = cx + g(rng);
        points.row(i)[1] = g(rng);
    }
    // Blob means recomputed from the generated points (the known truth).
    double m0[2] = {0, 0}, m1[2] = {0, 0};
    for (std::size_t i = 0; i < points.n; ++i) {
        double* m = i % 2 == 0 ? m0 : m1;
        m[0] += points.row(i)[0] / 200.0;
        m[1] += points.row(i)[1] / 200.0;
    }
    const auto r = kmeans(points, 2, 20, 6);
    for (const double* m : {m0, m1}) {
        double best = 1e30;
        for (std::size_t c = 0; c < 2; ++c) {
            best = std::min(best, std::hypot(r.centroids.row(c)[0] - m[0], r.centroids.row(c)[1] - m[1]));
        }
        EXPECT_LT(best, 0.1 * sep);
    }
}

TEST(KMeans, FewerDistinctPointsThanK) {
    DatasetMatrix points(6, 1, {1, 1, 1, 5, 5, 5});
    const auto r = kmeans(points, 4, 10, 2);
    for (std::size_t c = 0; c < 4; ++c) {
        const float v = r.centroids.row(c)[0];
        EXPECT_TRUE(v == 1.0f || v == 5.0f) << v;
    }
    EXPECT_DOUBLE_EQ(r.objective_history.back(), 0.0);
}

TEST(KMeans, ObjectiveNonIncreasing) {
    for (std::uint64_t seed : {1, 2, 3, 4}) {
        const auto points = crisp::testing::uniform_data(600, 4, seed);
        const auto r = kmeans(points, 12, 30, seed);
        for (std::size_t i = 1; i < r.objective_history.size(); ++i) {
            EXPECT_LE(r.objective_history[i], r.objective_history[i - 1] * (1 + 1e-9)) << "iter " << i;
        }
    }
}

TEST(KMeans, Deterministic) {
    const auto points = crisp::testing::uniform_data(300, 5, 9);
    EXPECT_EQ(kmeans(points, 7, 20, 42).centroids, kmeans(points, 7, 20, 42).centroids);
}

TEST(KMeans, Errors) {
    EXPECT_THROW(kmeans(DatasetMatrix{}, 2), ArgumentError);
    EXPECT_THROW(kmeans(DatasetMatrix(3, 1, {1, 2, 3}), 0), ArgumentError);
}

TEST(NearestCentroid, TieGoesToLowestIndex) {
    DatasetMatrix c(2, 1, {-1, 1});
    const std::vector<float> x = {0.0f};
    EXPECT_EQ(nearest_centroid(x, c), 0u);
}
