#pragma once

// Dual-mode query execution.
//
//   1. Per subspace, walk cells in multi-sequence order and add a collision
//      weight to every id in each activated cell until the retrieval budget
//      is spent. Optimized mode doubles the weight of the first k cells.
//   2. Keep ids whose score reaches tau = ceil(min_collision_ratio * M),
//      topping up with the best-scoring ids when fewer than k survive.
//   3. Guaranteed mode verifies every candidate with exact L2. Optimized
//      mode orders candidates by Hamming distance of sign codes, verifies
//      with ADSampling and stops after patience_factor * k consecutive
//      candidates that leave the top-k unchanged.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "crisp/binary_code.hpp"
#include "crisp/dataset.hpp"
#include "crisp/distance.hpp"
#include "crisp/errors.hpp"
#include "crisp/exact_search.hpp"
#include "crisp/index.hpp"
#include "crisp/multi_sequence.hpp"
#include "crisp/preprocessing.hpp"

namespace crisp {

enum class SearchMode : std::uint8_t { guaranteed = 0, optimized = 1 };

inline constexpr double kDefaultPatienceFactor = 40.0;
inline constexpr double kDefaultEps0 = 2.1;
inline constexpr std::size_t kDefaultAdStride = 32;

struct SearchConfig {
    SearchMode mode = SearchMode::guaranteed;
    std::size_t k = 10;
    double budget_ratio = 0.05;
    double min_collision_ratio = 0.5;
    double patience_factor = kDefaultPatienceFactor; // infinity disables early termination
    double eps0 = kDefaultEps0;
    std::size_t ad_stride = kDefaultAdStride;

    void validate() const {
        if (k < 1) throw ArgumentError("k must be >= 1");
        if (!(budget_ratio > 0.0 && budget_ratio <= 1.0)) throw ArgumentError("budget_ratio must be in (0, 1]");
        if (!(min_collision_ratio > 0.0 && min_collision_ratio <= 1.0)) {
            throw ArgumentError("min_collision_ratio must be in (0, 1]");
        }
        if (!(patience_factor > 0.0)) throw ArgumentError("patience_factor must be > 0");
        if (!(eps0 >= 0.0)) throw ArgumentError("eps0 must be >= 0");
        if (ad_stride < 1) throw ArgumentError("ad_stride must be >= 1");
    }
};

inline const char* to_string(SearchMode mode) {
    return mode == SearchMode::guaranteed ? "guaranteed" : "optimized";
}

inline SearchMode parse_mode(const std::string& text) {
    if (text == "guaranteed" || text == "0") return SearchMode::guaranteed;
    if (text == "optimized" || text == "1") return SearchMode::optimized;
    throw ArgumentError("unknown mode '" + text + "' (expected guaranteed|optimized)");
}

/// ceil(ratio * count) that ignores float noise such as 0.3 * 10 = 3.0000000000000004.
inline std::size_t ceil_fraction(double ratio, std::size_t count) {
    const double x = ratio * static_cast<double>(count);
    const double nearest = std::round(x);
    if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, x)) return static_cast<std::size_t>(nearest);
    return static_cast<std::size_t>(std::ceil(x));
}

/// Ids streamed per subspace before the traversal stops.
inline std::size_t retrieval_budget(const SearchConfig& config, std::size_t n) {
    return std::max<std::size_t>(1, ceil_fraction(config.budget_ratio, n));
}

/// Minimum accumulated score a candidate needs (tau).
inline std::size_t collision_threshold(const SearchConfig& config, std::size_t m) {
    return std::max<std::size_t>(1, ceil_fraction(config.min_collision_ratio, m));
}

/// Per-query collision accumulator. Only touched slots are cleared on reset.
class ScoreScratch {
public:
    ScoreScratch() = default;
    explicit ScoreScratch(std::size_t n) : scores_(n, 0) {}

    void ensure(std::size_t n) {
        if (scores_.size() != n) {
            scores_.assign(n, 0);
            touched_.clear();
        }
    }

    void reset() {
        for (std::int32_t id : touched_) scores_[static_cast<std::size_t>(id)] = 0;
        touched_.clear();
    }

    void add(std::int32_t id, std::uint32_t weight) {
        auto& slot = scores_[static_cast<std::size_t>(id)];
        if (slot == 0) touched_.push_back(id);
        slot += weight;
    }

    std::uint32_t score(std::int32_t id) const { return scores_[static_cast<std::size_t>(id)]; }
    std::span<const std::int32_t> touched() const { return touched_; }
    std::size_t size() const { return scores_.size(); }

private:
    std::vector<std::uint32_t> scores_;
    std::vector<std::int32_t> touched_;
};

/// Cursor over one subspace's cells for a (rotated, padded) query.
inline CellCursor make_cursor(const CrispIndex& index, std::span<const float> query, std::size_t subspace) {
    const auto& books = index.codebooks;
    const std::size_t sub_dim = books.dims_per_subspace;
    const auto q_sub = query.subspan(subspace * sub_dim, sub_dim);
    return CellCursor(sorted_partial_distances(q_sub.first(books.half_dim()), books.left[subspace]),
                      sorted_partial_distances(q_sub.subspan(books.half_dim()), books.right[subspace]));
}

/// Walks cells until `budget` ids have been streamed; returns the count streamed.
inline std::size_t accumulate_subspace(CellCursor& cursor, const CsrPostingIndex& postings,
                                       std::size_t subspace, ScoreScratch& scratch,
                                       const SearchConfig& config, std::size_t budget) {
    std::size_t retrieved = 0;
    while (retrieved < budget) {
        const auto cell = cursor.next();
        if (!cell) break;
        const std::uint32_t weight =
            (config.mode == SearchMode::optimized && cell->rank <= config.k) ? 2u : 1u;
        for (std::int32_t id : postings.cell(subspace, cell->cell)) {
            scratch.add(id, weight);
            ++retrieved;
        }
    }
    return retrieved;
}

/// Touched ids scoring at least tau, ordered by (score desc, id asc). When fewer
/// than k qualify, the best-scoring touched ids fill up to min(k, touched).
inline std::vector<std::int32_t> filter_candidates(const ScoreScratch& scratch, const SearchConfig& config,
                                                   std::size_t m) {
    const std::size_t tau = collision_threshold(config, m);
    std::vector<std::int32_t> candidates;
    for (std::int32_t id : scratch.touched()) {
        if (scratch.score(id) >= tau) candidates.push_back(id);
    }
    auto by_score = [&](std::int32_t a, std::int32_t b) {
        const auto sa = scratch.score(a);
        const auto sb = scratch.score(b);
        return sa != sb ? sa > sb : a < b;
    };
    if (candidates.size() < config.k) {
        candidates.assign(scratch.touched().begin(), scratch.touched().end());
        const std::size_t keep = std::min(config.k, candidates.size());
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                          candidates.end(), by_score);
        candidates.resize(keep);
        return candidates;
    }
    std::sort(candidates.begin(), candidates.end(), by_score);
    return candidates;
}

/// Stable ascending sort by Hamming distance between sign codes.
inline void hamming_rerank(std::vector<std::int32_t>& candidates, std::span<const std::uint64_t> query_code,
                           const BinaryCodes& codes) {
    std::vector<std::pair<std::uint32_t, std::int32_t>> keyed(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto id = candidates[i];
        keyed[i] = {hamming_distance(query_code, codes.row(static_cast<std::size_t>(id))), id};
    }
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 0; i < keyed.size(); ++i) candidates[i] = keyed[i].second;
}

struct AdsamplingResult {
    bool pruned = false;
    double distance = 0.0; // exact squared distance, or the partial sum at the prune point
    std::size_t dims_scanned = 0;
};

/// Pruning bound for a partial sum over t of d dimensions.
inline double adsampling_threshold(double r_k_sq, std::size_t t, std::size_t d, double eps0) {
    const double tt = static_cast<double>(t);
    const double margin = 1.0 + eps0 / std::sqrt(tt);
    return r_k_sq * (tt / static_cast<double>(d)) * margin * margin;
}

/// Accumulates squared differences in dimension order, checking the relative
/// error bound every `ad_stride` dimensions. Never prunes while r_k_sq is infinite.
inline AdsamplingResult adsampling_verify(std::span<const float> q, std::span<const float> x, double r_k_sq,
                                          const SearchConfig& config) {
    const std::size_t d = q.size();
    const bool can_prune = std::isfinite(r_k_sq);
    const std::size_t stride = config.ad_stride;
    double partial = 0.0;
    std::size_t t = 0;
    while (t < d) {
        const std::size_t stop = std::min(d, t + stride);
        for (; t < stop; ++t) {
            const double diff = static_cast<double>(q[t]) - static_cast<double>(x[t]);
            partial += diff * diff;
        }
        if (can_prune && t < d && partial > adsampling_threshold(r_k_sq, t, d, config.eps0)) {
            return {true, partial, t};
        }
    }
    return {false, partial, d};
}

struct SearchStats {
    std::size_t retrieved = 0;   // ids streamed over all subspaces
    std::size_t touched = 0;     // distinct ids with a nonzero score
    std::size_t candidates = 0;  // |C| after filtering
    std::size_t verified = 0;    // candidates examined before returning
    std::size_t pruned = 0;      // ADSampling rejections
    std::size_t full_distances = 0;
    bool early_terminated = false;

    SearchStats& operator+=(const SearchStats& o) {
        retrieved += o.retrieved;
        touched += o.touched;
        candidates += o.candidates;
        verified += o.verified;
        pruned += o.pruned;
        full_distances += o.full_distances;
        early_terminated = early_terminated || o.early_terminated;
        return *this;
    }
};

/// Query mapped into the index's stored space.
struct PreparedQuery {
    std::vector<float> vec;          // rotated, zero-padded to padded_d
    std::vector<std::uint64_t> code; // sign code of vec
};

inline PreparedQuery prepare_query(const CrispIndex& index, std::span<const float> query) {
    if (query.size() != index.d) {
        throw ArgumentError("query dimension " + std::to_string(query.size()) + " != index dimension " +
                            std::to_string(index.d));
    }
    PreparedQuery prepared;
    prepared.vec = rotate_query(query, index.rotation);
    prepared.vec.resize(index.padded_d, 0.0f);
    prepared.code = binarize(prepared.vec);
    return prepared;
}

/// Reusable per-worker state.
struct SearchWorkspace {
    ScoreScratch scratch;
};

/// Stage 1: collision scoring over all subspaces, then threshold filtering.
inline std::vector<std::int32_t> collect_candidates(const CrispIndex& index, const PreparedQuery& query,
                                                    const SearchConfig& config, SearchWorkspace& ws,
                                                    SearchStats* stats = nullptr) {
    ws.scratch.ensure(index.n);
    ws.scratch.reset();
    const std::size_t budget = retrieval_budget(config, index.n);
    std::size_t retrieved = 0;
    for (std::size_t s = 0; s < index.subspaces(); ++s) {
        auto cursor = make_cursor(index, query.vec, s);
        retrieved += accumulate_subspace(cursor, index.postings, s, ws.scratch, config, budget);
    }
    auto candidates = filter_candidates(ws.scratch, config, index.subspaces());
    if (stats) {
        stats->retrieved += retrieved;
        stats->touched += ws.scratch.touched().size();
        stats->candidates += candidates.size();
    }
    return candidates;
}

/// Stages 2-3: mode-specific ordering and verification of a candidate list.
inline std::vector<Neighbor> verify_candidates(const CrispIndex& index, const PreparedQuery& query,
                                               std::vector<std::int32_t> candidates, const SearchConfig& config,
                                               SearchStats* stats = nullptr) {
    // Padding columns are zero on both sides, so only the first d dimensions matter.
    const auto q = std::span<const float>(query.vec).first(index.d);
    auto row = [&](std::int32_t id) { return index.data.row(static_cast<std::size_t>(id)).first(index.d); };
    detail::TopK top(config.k);
    SearchStats local;

    if (config.mode == SearchMode::guaranteed) {
        for (std::int32_t id : candidates) {
            top.push({id, l2_sqr(q, row(id))});
        }
        local.verified = local.full_distances = candidates.size();
    } else {
        hamming_rerank(candidates, query.code, index.codes);
        const double patience_limit = config.patience_factor * static_cast<double>(config.k);
        double stale = 0.0;
        for (std::int32_t id : candidates) {
            const double r_k_sq = top.full() ? top.worst().distance : std::numeric_limits<double>::infinity();
            const auto verdict = adsampling_verify(q, row(id), r_k_sq, config);
            ++local.verified;
            bool improved = false;
            if (verdict.pruned) {
                ++local.pruned;
            } else {
                ++local.full_distances;
                improved = top.push({id, verdict.distance});
            }
            stale = improved ? 0.0 : stale + 1.0;
            if (stale >= patience_limit) {
                local.early_terminated = local.verified < candidates.size();
                break;
            }
        }
    }
    if (stats) *stats += local;
    return std::move(top).sorted();
}

/// Top-k (id, squared distance) pairs ascending by distance, ties by id.
inline std::vector<Neighbor> search(const CrispIndex& index, std::span<const float> query, const SearchConfig& config,
                                    SearchWorkspace& ws, SearchStats* stats = nullptr) {
    config.validate();
    if (config.k > index.n) throw ArgumentError("k=" + std::to_string(config.k) + " exceeds N=" + std::to_string(index.n));
    const auto prepared = prepare_query(index, query);
    auto candidates = collect_candidates(index, prepared, config, ws, stats);
    return verify_candidates(index, prepared, std::move(candidates), config, stats);
}

inline std::vector<Neighbor> search(const CrispIndex& index, std::span<const float> query, const SearchConfig& config,
                                    SearchStats* stats = nullptr) {
    SearchWorkspace ws;
    return search(index, query, config, ws, stats);
}

/// One result list per query row; queries run independently across workers.
inline std::vector<std::vector<Neighbor>> search_batch(const CrispIndex& index, const DatasetMatrix& queries,
                                                       const SearchConfig& config, SearchStats* stats = nullptr,
                                                       bool parallel = false) {
    config.validate();
    if (config.k > index.n) throw ArgumentError("k=" + std::to_string(config.k) + " exceeds N=" + std::to_string(index.n));
    if (queries.n > 0 && queries.d != index.d) throw ArgumentError("query dimension != index dimension");
    std::vector<std::vector<Neighbor>> results(queries.n);
    std::vector<SearchStats> per_query(queries.n);
#pragma omp parallel if (parallel)
    {
        SearchWorkspace ws;
#pragma omp for schedule(dynamic, 1)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(queries.n); ++i) {
            const auto qi = static_cast<std::size_t>(i);
            results[qi] = search(index, queries.row(qi), config, ws, &per_query[qi]);
        }
    }
    if (stats) {
        for (const auto& s : per_query) *stats += s;
    }
    return results;
}

inline std::vector<std::vector<std::int32_t>> result_ids(const std::vector<std::vector<Neighbor>>& results) {
    std::vector<std::vector<std::int32_t>> ids(results.size());
    for (std::size_t i = 0; i < results.size(); ++i) {
        for (const auto& nb : results[i]) ids[i].push_back(nb.id);
    }
    return ids;
}

} // namespace crisp
