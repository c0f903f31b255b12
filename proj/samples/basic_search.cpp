// Builds an index over a synthetic corpus and compares both query modes
// against exact search.

#include <iostream>

#include "crisp/crisp.hpp"

int main() {
    auto data = crisp::synthetic::correlated(5000, 64, 8, /*seed=*/7);
    const auto queries = crisp::synthetic::perturbed_queries(data, 50, 0.05f, /*seed=*/8);
    const auto gt = crisp::brute_force_knn(data, queries, 10);

    crisp::BuildParams params;
    params.subspaces = 8;
    params.centroids = 16;
    const auto index = crisp::build_index(std::move(data), params);
    std::cout << "cev=" << index.rotation.cev << " rotated=" << std::boolalpha << index.rotation.applied << '\n';

    for (auto mode : {crisp::SearchMode::guaranteed, crisp::SearchMode::optimized}) {
        crisp::SearchConfig cfg;
        cfg.mode = mode;
        cfg.k = 10;
        cfg.budget_ratio = 0.05;
        cfg.min_collision_ratio = 0.25;
        const auto run = crisp::run_benchmark(index, queries, &gt, cfg);
        std::cout << crisp::to_string(mode) << ": recall@10=" << run.report.recall
                  << " mean candidates=" << run.report.mean_candidates << '\n';
    }
}
