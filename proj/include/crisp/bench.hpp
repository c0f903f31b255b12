#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "crisp/dataset.hpp"
#include "crisp/errors.hpp"
#include "crisp/exact_search.hpp"
#include "crisp/index.hpp"
#include "crisp/search.hpp"

namespace crisp {

struct BenchReport {
    SearchConfig config;
    std::size_t subspaces = 0;
    std::size_t centroids = 0;
    std::uint64_t seed = 0;
    bool parallel = false;
    std::size_t queries = 0;
    double recall = 0.0;
    double qps = 0.0;
    double mean_latency_ms = 0.0;
    double median_latency_ms = 0.0;
    double build_seconds = 0.0;
    std::size_t logical_bytes = 0;
    double mean_candidates = 0.0;
    double mean_verified = 0.0;
};

/// Rows not dominated in (recall, qps): a row is dropped if another has
/// recall >= and qps >, or recall > and qps >=. Input order is preserved.
inline std::vector<BenchReport> pareto_front(const std::vector<BenchReport>& rows) {
    std::vector<BenchReport> front;
    for (const auto& a : rows) {
        const bool dominated = std::any_of(rows.begin(), rows.end(), [&](const BenchReport& b) {
            return (b.recall >= a.recall && b.qps > a.qps) || (b.recall > a.recall && b.qps >= a.qps);
        });
        if (!dominated) front.push_back(a);
    }
    return front;
}

struct BenchRun {
    BenchReport report;
    std::vector<std::vector<Neighbor>> results;
};

/// Times the query batch. Serial mode also records per-query latency; parallel
/// mode reports only batch throughput.
inline BenchRun run_benchmark(const CrispIndex& index, const DatasetMatrix& queries, const GroundTruth* gt,
                              const SearchConfig& config, bool parallel = false) {
    using clock = std::chrono::steady_clock;
    config.validate();
    if (config.k > index.n) throw ArgumentError("k=" + std::to_string(config.k) + " exceeds N=" + std::to_string(index.n));
    if (gt && gt->k < config.k) throw ArgumentError("ground truth has fewer than k neighbors per query");

    BenchRun run;
    auto& rep = run.report;
    rep.config = config;
    rep.subspaces = index.subspaces();
    rep.centroids = index.centroids();
    rep.seed = index.rotation.seed;
    rep.parallel = parallel;
    rep.queries = queries.n;
    rep.logical_bytes = index_logical_bytes(index);

    SearchStats stats;
    std::vector<double> latencies;
    const auto start = clock::now();
    if (parallel) {
        run.results = search_batch(index, queries, config, &stats, true);
    } else {
        if (queries.n > 0 && queries.d != index.d) throw ArgumentError("query dimension != index dimension");
        SearchWorkspace ws;
        run.results.resize(queries.n);
        latencies.reserve(queries.n);
        for (std::size_t i = 0; i < queries.n; ++i) {
            const auto t0 = clock::now();
            run.results[i] = search(index, queries.row(i), config, ws, &stats);
            latencies.push_back(std::chrono::duration<double, std::milli>(clock::now() - t0).count());
        }
    }
    const double seconds = std::chrono::duration<double>(clock::now() - start).count();

    const double q = static_cast<double>(std::max<std::size_t>(queries.n, 1));
    rep.qps = seconds > 0.0 ? static_cast<double>(queries.n) / seconds : 0.0;
    rep.mean_candidates = static_cast<double>(stats.candidates) / q;
    rep.mean_verified = static_cast<double>(stats.verified) / q;
    if (!latencies.empty()) {
        double sum = 0.0;
        for (double v : latencies) sum += v;
        rep.mean_latency_ms = sum / static_cast<double>(latencies.size());
        auto sorted = latencies;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t mid = sorted.size() / 2;
        rep.median_latency_ms = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    } else {
        rep.mean_latency_ms = rep.median_latency_ms = queries.n > 0 ? 1000.0 * seconds / q : 0.0;
    }
    if (gt && queries.n > 0) rep.recall = recall_at_k(result_ids(run.results), *gt, config.k);
    return run;
}

inline void write_bench_csv_header(std::ostream& out) {
    out << "mode,k,budget_ratio,min_collision_ratio,patience_factor,eps0,ad_stride,subspaces,centroids,seed,"
           "parallel,queries,recall,qps,mean_latency_ms,median_latency_ms,build_seconds,logical_bytes,"
           "mean_candidates,mean_verified\n";
}

inline void write_bench_csv_row(std::ostream& out, const BenchReport& r) {
    const auto& c = r.config;
    out << to_string(c.mode) << ',' << c.k << ',' << c.budget_ratio << ',' << c.min_collision_ratio << ','
        << c.patience_factor << ',' << c.eps0 << ',' << c.ad_stride << ',' << r.subspaces << ',' << r.centroids
        << ',' << r.seed << ',' << (r.parallel ? "parallel" : "serial") << ',' << r.queries << ',' << r.recall
        << ',' << r.qps << ',' << r.mean_latency_ms << ',' << r.median_latency_ms << ',' << r.build_seconds << ','
        << r.logical_bytes << ',' << r.mean_candidates << ',' << r.mean_verified << '\n';
}

} // namespace crisp
