#pragma once

// Multi-sequence enumeration of inverted multi-index cells: given the query's
// sorted partial distances to the left and right codebooks, emits (i, j) cells
// in non-decreasing order of d_left[i] + d_right[j].

#include <algorithm>
#include <cstdint>
#include <optional>
#include <queue>
#include <span>
#include <vector>

#include "crisp/dataset.hpp"
#include "crisp/distance.hpp"
#include "crisp/errors.hpp"

namespace crisp {

struct PartialDistance {
    double distance = 0.0;
    std::uint32_t id = 0;

    friend bool operator==(const PartialDistance&, const PartialDistance&) = default;
};

/// Squared distances from a query half to every centroid, ascending, ties by centroid id.
inline std::vector<PartialDistance> sorted_partial_distances(std::span<const float> q_half,
                                                             const DatasetMatrix& centroids) {
    if (q_half.size() != centroids.d) throw ArgumentError("sorted_partial_distances: dimension mismatch");
    std::vector<PartialDistance> out(centroids.n);
    for (std::size_t c = 0; c < centroids.n; ++c) {
        out[c] = {l2_sqr(q_half, centroids.row(c)), static_cast<std::uint32_t>(c)};
    }
    std::sort(out.begin(), out.end(), [](const PartialDistance& a, const PartialDistance& b) {
        return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
    });
    return out;
}

struct EmittedCell {
    std::size_t cell = 0; // left_id * K + right_id
    double cost = 0.0;
    std::size_t rank = 0; // 1-based visit order
    std::size_t i = 0;    // position in the sorted left list
    std::size_t j = 0;    // position in the sorted right list
};

class CellCursor {
public:
    CellCursor() = default;
    CellCursor(std::vector<PartialDistance> left, std::vector<PartialDistance> right) {
        reset(std::move(left), std::move(right));
    }

    void reset(std::vector<PartialDistance> left, std::vector<PartialDistance> right) {
        if (left.empty() || left.size() != right.size()) {
            throw ArgumentError("CellCursor: left/right lists must be non-empty and equal length");
        }
        left_ = std::move(left);
        right_ = std::move(right);
        k_ = left_.size();
        visited_.assign(k_ * k_, 0);
        frontier_ = {};
        rank_ = 0;
        push(0, 0);
    }

    bool exhausted() const { return frontier_.empty(); }
    std::size_t rank() const { return rank_; }
    std::size_t k() const { return k_; }

    std::optional<EmittedCell> next() {
        if (frontier_.empty()) return std::nullopt;
        const Entry top = frontier_.top();
        frontier_.pop();
        ++rank_;
        if (top.i + 1 < k_) push(top.i + 1, top.j);
        if (top.j + 1 < k_) push(top.i, top.j + 1);
        return EmittedCell{static_cast<std::size_t>(left_[top.i].id) * k_ + right_[top.j].id,
                           top.cost, rank_, top.i, top.j};
    }

private:
    struct Entry {
        double cost;
        std::size_t i;
        std::size_t j;
    };
    struct Later {
        bool operator()(const Entry& a, const Entry& b) const {
            if (a.cost != b.cost) return a.cost > b.cost;
            if (a.i != b.i) return a.i > b.i;
            return a.j > b.j;
        }
    };

    void push(std::size_t i, std::size_t j) {
        auto& seen = visited_[i * k_ + j];
        if (seen) return;
        seen = 1;
        frontier_.push({left_[i].distance + right_[j].distance, i, j});
    }

    std::vector<PartialDistance> left_;
    std::vector<PartialDistance> right_;
    std::size_t k_ = 0;
    std::vector<std::uint8_t> visited_;
    std::priority_queue<Entry, std::vector<Entry>, Later> frontier_;
    std::size_t rank_ = 0;
};

} // namespace crisp
