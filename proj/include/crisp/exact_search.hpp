#pragma once

#include <algorithm>
#include <cstdint>
#include <queue>
#include <span>
#include <unordered_set>
#include <vector>

#include "crisp/dataset.hpp"
#include "crisp/distance.hpp"
#include "crisp/errors.hpp"

namespace crisp {

namespace detail {

// Bounded max-heap keeping the k best neighbors under `closer`.
class TopK {
public:
    explicit TopK(std::size_t k) : k_(k) { heap_.reserve(k + 1); }

    std::size_t size() const { return heap_.size(); }
    bool full() const { return heap_.size() >= k_; }
    const Neighbor& worst() const { return heap_.front(); }

    // Returns true when the candidate entered the top-k.
    bool push(const Neighbor& candidate) {
        if (k_ == 0) return false;
        if (!full()) {
            heap_.push_back(candidate);
            std::push_heap(heap_.begin(), heap_.end(), closer);
            return true;
        }
        if (!closer(candidate, heap_.front())) return false;
        std::pop_heap(heap_.begin(), heap_.end(), closer);
        heap_.back() = candidate;
        std::push_heap(heap_.begin(), heap_.end(), closer);
        return true;
    }

    std::vector<Neighbor> sorted() && {
        std::sort_heap(heap_.begin(), heap_.end(), closer);
        return std::move(heap_);
    }

private:
    std::size_t k_;
    std::vector<Neighbor> heap_;
};

} // namespace detail

/// Exact k nearest neighbors of a single query, ascending by (distance, id).
inline std::vector<Neighbor> exact_knn(const DatasetMatrix& data, std::span<const float> query,
                                       std::size_t k) {
    if (query.size() != data.d) throw ArgumentError("exact_knn: query dimension mismatch");
    if (k > data.n) throw ArgumentError("exact_knn: k > N");
    detail::TopK top(k);
    for (std::size_t i = 0; i < data.n; ++i) {
        top.push({static_cast<std::int32_t>(i), l2_sqr(query, data.row(i))});
    }
    return std::move(top).sorted();
}

inline GroundTruth brute_force_knn(const DatasetMatrix& data, const DatasetMatrix& queries,
                                   std::size_t k) {
    if (queries.n > 0 && queries.d != data.d) {
        throw ArgumentError("brute_force_knn: query dimension " + std::to_string(queries.d) +
                            " != data dimension " + std::to_string(data.d));
    }
    if (k > data.n) throw ArgumentError("brute_force_knn: k > N");

    GroundTruth gt;
    gt.q = queries.n;
    gt.k = k;
    gt.ids.resize(gt.q * k);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::int64_t qi = 0; qi < static_cast<std::int64_t>(queries.n); ++qi) {
        const auto best = exact_knn(data, queries.row(static_cast<std::size_t>(qi)), k);
        auto out = gt.row(static_cast<std::size_t>(qi));
        for (std::size_t j = 0; j < k; ++j) out[j] = best[j].id;
    }
    return gt;
}

/// Mean over queries of |result_row ∩ gt_row[0..k)| / k. Result rows may be short.
inline double recall_at_k(const std::vector<std::vector<std::int32_t>>& results,
                          const GroundTruth& gt, std::size_t k) {
    if (k == 0 || k > gt.k) throw ArgumentError("recall_at_k: k must be in [1, gt.k]");
    if (results.size() > gt.q) throw ArgumentError("recall_at_k: more result rows than gt rows");
    if (results.empty()) return 0.0;

    double total = 0.0;
    for (std::size_t qi = 0; qi < results.size(); ++qi) {
        const auto truth = gt.row(qi).first(k);
        std::unordered_set<std::int32_t> wanted(truth.begin(), truth.end());
        std::size_t hits = 0;
        std::unordered_set<std::int32_t> seen;
        for (std::int32_t id : results[qi]) {
            if (wanted.contains(id) && seen.insert(id).second) ++hits;
        }
        total += static_cast<double>(hits) / static_cast<double>(k);
    }
    return total / static_cast<double>(results.size());
}

} // namespace crisp
