#include <gtest/gtest.h>

#include <sstream>

#include "crisp/bench.hpp"
#include "crisp/synthetic.hpp"

using namespace crisp;

namespace {

BenchReport row(double recall, double qps) {
    BenchReport r;
    r.recall = recall;
    r.qps = qps;
    return r;
}

std::vector<std::pair<double, double>> points(const std::vector<BenchReport>& rows) {
    std::vector<std::pair<double, double>> out;
    for (const auto& r : rows) out.emplace_back(r.recall, r.qps);
    return out;
}

} // namespace

TEST(ParetoFront, DropsDominatedRows) {
    const auto front = pareto_front({row(0.9, 100), row(0.8, 90), row(0.95, 50), row(0.7, 200)});
    EXPECT_EQ(points(front), (std::vector<std::pair<double, double>>{{0.9, 100}, {0.95, 50}, {0.7, 200}}));
}

TEST(ParetoFront, EqualRecallKeepsFaster) {
    const auto front = pareto_front({row(0.9, 100), row(0.9, 120)});
    EXPECT_EQ(points(front), (std::vector<std::pair<double, double>>{{0.9, 120}}));
}

TEST(ParetoFront, IdenticalRowsBothSurvive) {
    EXPECT_EQ(pareto_front({row(0.5, 10), row(0.5, 10)}).size(), 2u);
    EXPECT_TRUE(pareto_front({}).empty());
}

TEST(ParetoFront, NoSurvivorIsDominated) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<BenchReport> rows;
    for (int i = 0; i < 200; ++i) rows.push_back(row(std::round(u(rng) * 20) / 20, std::round(u(rng) * 50)));
    const auto front = pareto_front(rows);
    ASSERT_FALSE(front.empty());
    for (const auto& a : front) {
        for (const auto& b : rows) {
            EXPECT_FALSE((b.recall >= a.recall && b.qps > a.qps) || (b.recall > a.recall && b.qps >= a.qps));
        }
    }
    // Every dropped row is dominated by something on the front.
    for (const auto& a : rows) {
        bool on_front = false, covered = false;
        for (const auto& b : front) {
            on_front = on_front || (b.recall == a.recall && b.qps == a.qps);
            covered = covered || (b.recall >= a.recall && b.qps >= a.qps);
        }
        EXPECT_TRUE(on_front || covered);
    }
}

TEST(RunBenchmark, ReportsRecallAndCounts) {
    auto data = synthetic::isotropic(1000, 16, 1);
    const auto queries = synthetic::perturbed_queries(data, 25, 0.2f, 2);
    const auto gt = brute_force_knn(data, queries, 10);
    BuildParams params;
    params.subspaces = 2;
    params.centroids = 8;
    const auto index = build_index(std::move(data), params);
    SearchConfig cfg;
    cfg.budget_ratio = 1.0;
    cfg.min_collision_ratio = 0.5;
    for (bool parallel : {false, true}) {
        const auto run = run_benchmark(index, queries, &gt, cfg, parallel);
        EXPECT_DOUBLE_EQ(run.report.recall, 1.0);
        EXPECT_EQ(run.report.queries, 25u);
        EXPECT_EQ(run.results.size(), 25u);
        EXPECT_GT(run.report.qps, 0.0);
        EXPECT_GE(run.report.mean_latency_ms, 0.0);
        EXPECT_EQ(run.report.logical_bytes, index_logical_bytes(index));
        EXPECT_GE(run.report.mean_candidates, run.report.mean_verified);
        EXPECT_GE(run.report.mean_verified, 10.0);
    }
    cfg.k = 20;
    EXPECT_THROW(run_benchmark(index, queries, &gt, cfg), ArgumentError);
}

TEST(BenchCsv, HeaderAndRowHaveSameArity) {
    std::ostringstream out;
    write_bench_csv_header(out);
    write_bench_csv_row(out, row(0.5, 10));
    std::istringstream in(out.str());
    std::string header, line;
    std::getline(in, header);
    std::getline(in, line);
    EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(line.begin(), line.end(), ','));
    EXPECT_EQ(line.rfind("guaranteed,10,", 0), 0u);
}
