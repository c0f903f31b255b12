#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crisp/errors.hpp"

namespace crisp {

/// Row-major N x D float32 vector store.
struct DatasetMatrix {
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<float> data;

    DatasetMatrix() = default;
    DatasetMatrix(std::size_t rows, std::size_t dim)
        : n(rows), d(dim), data(rows * dim, 0.0f) {}
    DatasetMatrix(std::size_t rows, std::size_t dim, std::vector<float> values)
        : n(rows), d(dim), data(std::move(values)) {
        if (data.size() != n * d) {
            throw ArgumentError("DatasetMatrix: data length " + std::to_string(data.size()) +
                                " != n*d = " + std::to_string(n * d));
        }
    }

    std::span<float> row(std::size_t i) { return {data.data() + i * d, d}; }
    std::span<const float> row(std::size_t i) const { return {data.data() + i * d, d}; }

    bool empty() const { return n == 0; }

    bool all_finite() const {
        for (float v : data) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    friend bool operator==(const DatasetMatrix&, const DatasetMatrix&) = default;
};

/// Exact neighbor lists, q rows of k ids, each row ascending by true distance.
struct GroundTruth {
    std::size_t q = 0;
    std::size_t k = 0;
    std::vector<std::int32_t> ids;

    std::span<const std::int32_t> row(std::size_t i) const { return {ids.data() + i * k, k}; }
    std::span<std::int32_t> row(std::size_t i) { return {ids.data() + i * k, k}; }

    friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

} // namespace crisp
