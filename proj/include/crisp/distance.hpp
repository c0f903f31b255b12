#pragma once

#include <cassert>
#include <cstdint>
#include <span>

namespace crisp {

/// Squared L2 with float64 accumulation.
inline double l2_sqr(std::span<const float> a, std::span<const float> b) {
    assert(a.size() == b.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        sum += diff * diff;
    }
    return sum;
}

struct Neighbor {
    std::int32_t id = -1;
    double distance = 0.0; // squared L2

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Total order used everywhere results are ranked: distance, then id.
inline bool closer(const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.id < b.id;
}

} // namespace crisp
