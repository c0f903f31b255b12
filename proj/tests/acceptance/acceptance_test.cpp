// Acceptance suite: one test per criterion, each checked against its runtime
// limit. Prints a single PASS/FAIL line per criterion after the gtest output.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>

#include "crisp/crisp.hpp"
#include "test_util.hpp"

using namespace crisp;
using crisp::testing::TempDir;

namespace {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void within_limit(const Stopwatch& watch, double limit) {
    const double s = watch.seconds();
    EXPECT_LT(s, limit) << "runtime " << s << " s exceeds " << limit << " s";
    ::testing::Test::RecordProperty("seconds", std::to_string(s));
}

BuildParams params(std::size_t m, std::size_t k, std::uint64_t seed) {
    BuildParams p;
    p.subspaces = m;
    p.centroids = k;
    p.seed = seed;
    return p;
}

std::vector<PartialDistance> random_list(std::size_t k, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::vector<PartialDistance> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = {std::round(u(rng) * 4) / 4, static_cast<std::uint32_t>(i)};
    std::stable_sort(out.begin(), out.end(), [](auto& a, auto& b) { return a.distance < b.distance; });
    return out;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + CRISP_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

class CriterionPrinter : public ::testing::EmptyTestEventListener {
public:
    void OnTestEnd(const ::testing::TestInfo& info) override {
        std::string name = info.name();
        const auto cut = name.find('_');
        const std::string id = name.substr(0, cut);
        std::string title = cut == std::string::npos ? "" : name.substr(cut + 1);
        for (char& c : title)
            if (c == '_') c = ' ';
        std::ostringstream line;
        line << id << ' ' << (info.result()->Passed() ? "PASS" : "FAIL") << "  " << title << "  ("
             << std::fixed << std::setprecision(2) << double(info.result()->elapsed_time()) / 1000.0 << " s)";
        lines_.push_back(line.str());
    }
    void OnTestProgramEnd(const ::testing::UnitTest&) override {
        std::cout << "\n==== acceptance summary ====\n";
        for (const auto& l : lines_) std::cout << l << '\n';
        std::cout.flush();
    }

private:
    std::vector<std::string> lines_;
};

} // namespace

TEST(Acceptance, AC01_Oracle_equivalence_in_exact_mode) {
    Stopwatch watch;
    std::mt19937_64 rng(2024);
    const std::size_t dims[] = {8, 32, 64, 130};
    for (std::size_t trial = 0; trial < 24; ++trial) {
        const std::size_t d = dims[trial % 4];
        const std::size_t n = 100 + rng() % 1901;
        const std::size_t m = 1 + trial % 4;
        auto data = crisp::testing::uniform_data(n, d, rng());
        const auto original = data;
        const auto queries = crisp::testing::uniform_data(5, d, rng());
        const auto index = build_index(std::move(data), params(m, 1, trial));
        SearchConfig cfg;
        cfg.k = 10;
        cfg.budget_ratio = 1.0;
        cfg.min_collision_ratio = 1.0 / double(2 * m); // tau = 1
        ASSERT_EQ(collision_threshold(cfg, m), 1u);
        const auto gt = brute_force_knn(original, queries, cfg.k);
        for (std::size_t qi = 0; qi < queries.n; ++qi) {
            const auto got = search(index, queries.row(qi), cfg);
            const auto want = exact_knn(original, queries.row(qi), cfg.k);
            ASSERT_EQ(got.size(), want.size());
            for (std::size_t r = 0; r < want.size(); ++r) {
                EXPECT_EQ(got[r].id, gt.row(qi)[r]) << "trial " << trial << " d=" << d;
                EXPECT_LE(std::abs(got[r].distance - want[r].distance), 1e-4 * want[r].distance + 1e-12);
            }
        }
    }
    within_limit(watch, 60);
}

TEST(Acceptance, AC02_CSR_matches_naive_inverted_index) {
    Stopwatch watch;
    for (std::uint64_t b = 0; b < 10; ++b) {
        const std::size_t n = 1000 + 400 * b;
        auto data = b % 2 ? synthetic::correlated(n, 32, 5, b) : synthetic::isotropic(n, 24, b);
        const auto index = build_index(std::move(data), params(1 + b % 4, 5 + 3 * b, b));
        const auto naive = crisp::testing::naive_inverted_index(index);
        const std::size_t cells = index.centroids() * index.centroids();
        for (std::size_t s = 0; s < index.subspaces(); ++s) {
            for (std::size_t c = 0; c < cells; ++c) {
                const auto slice = index.postings.cell(s, c);
                const auto it = naive[s].find(c);
                const std::vector<std::int32_t> want = it == naive[s].end() ? std::vector<std::int32_t>{} : it->second;
                ASSERT_EQ(std::vector<std::int32_t>(slice.begin(), slice.end()), want) << "build " << b;
            }
        }
    }
    within_limit(watch, 30);
}

TEST(Acceptance, AC03_Multi_sequence_ordering) {
    Stopwatch watch;
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t k = 1 + rng() % 10;
        const auto left = random_list(k, rng);
        const auto right = random_list(k, rng);
        std::vector<double> sums;
        for (auto& a : left)
            for (auto& b : right) sums.push_back(a.distance + b.distance);
        std::sort(sums.begin(), sums.end());
        CellCursor cursor(left, right);
        std::vector<double> emitted;
        while (auto cell = cursor.next()) emitted.push_back(cell->cost);
        ASSERT_EQ(emitted, sums) << "trial " << trial;
    }
    within_limit(watch, 5);
}

TEST(Acceptance, AC04_Rotation_contracts) {
    Stopwatch watch;
    for (std::size_t d : {1u, 2u, 8u, 64u, 256u}) {
        const auto r = generate_rotation(d, 11);
        double worst = 0.0;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                double dot = 0.0;
                for (std::size_t t = 0; t < d; ++t) dot += r[i * d + t] * r[j * d + t];
                worst = std::max(worst, std::abs(dot - (i == j)));
            }
        EXPECT_LE(worst, 1e-10) << "d=" << d;
    }
    auto data = synthetic::isotropic(1000, 256, 12);
    const auto original = data;
    const auto exact = generate_rotation(256, 13);
    apply_rotation_in_place(data, std::vector<float>(exact.begin(), exact.end()));
    double worst = 0.0;
    for (std::size_t i = 0; i < data.n; ++i)
        for (std::size_t j = i + 1; j < data.n; ++j) {
            const double before = l2_sqr(original.row(i), original.row(j));
            worst = std::max(worst, std::abs(l2_sqr(data.row(i), data.row(j)) - before) / before);
        }
    EXPECT_LE(worst, 1e-3);
    within_limit(watch, 30);
}

TEST(Acceptance, AC05_CEV_behavior_and_gate) {
    Stopwatch watch;
    EXPECT_NEAR(compute_cev(synthetic::isotropic(50'000, 10, 1)), 0.2, 0.05);
    EXPECT_GE(compute_cev(synthetic::axis_aligned(5000, 10, 1, 2)), 0.999);

    auto iso = synthetic::isotropic(5000, 10, 3);
    EXPECT_FALSE(maybe_rotate(iso, kDefaultTauCev, 1).applied);
    auto axis = synthetic::axis_aligned(5000, 10, 1, 4);
    EXPECT_TRUE(maybe_rotate(axis, kDefaultTauCev, 1).applied);

    const auto base = synthetic::correlated(5000, 40, 6, 5);
    auto probe = base;
    const double cev = maybe_rotate(probe, 1.0, 6).cev;
    probe = base;
    EXPECT_FALSE(maybe_rotate(probe, cev, 6).applied);
    probe = base;
    EXPECT_TRUE(maybe_rotate(probe, std::nextafter(cev, 0.0), 6).applied);
    EXPECT_DOUBLE_EQ(kDefaultTauCev, 0.85);
    within_limit(watch, 30);
}

TEST(Acceptance, AC06_Recall_bound_verification) {
    Stopwatch watch;
    for (std::size_t m : {4u, 8u, 16u, 64u})
        for (double p : {0.3, 0.5, 0.8})
            for (std::size_t tau = 0; tau <= m; ++tau) {
                const auto failure = hoeffding_failure_bound({m, p, double(tau)});
                if (!failure) continue;
                EXPECT_LE(exact_binomial_failure(m, p, double(tau)), *failure + 1e-15)
                    << "m=" << m << " p=" << p << " tau=" << tau;
            }
    const double exact = exact_binomial_failure(16, 0.5, 4.0);
    EXPECT_NEAR(exact, 697.0 / 65536.0, 1e-15);
    EXPECT_LE(exact, std::exp(-2.0));
    EXPECT_NEAR(*hoeffding_failure_bound({16, 0.5, 4.0}), 0.135335283, 1e-9);
    EXPECT_NEAR(*hoeffding_recall_bound({16, 0.5, 4.0}), 0.864665, 1e-6);
    EXPECT_NEAR(*hoeffding_recall_bound({16, 0.5, 4.0}), 1.0 - std::exp(-2.0), 1e-9);

    const std::size_t trials = 100'000;
    for (std::size_t m : {4u, 8u, 16u, 64u})
        for (double p : {0.3, 0.5, 0.8}) {
            const double tau = std::ceil(0.3 * double(m));
            const double e = exact_binomial_failure(m, p, tau);
            const double sigma = std::sqrt(e * (1 - e) / double(trials));
            const double sim = simulate_collision_retrieval(m, p, tau, trials, 99);
            EXPECT_LE(std::abs(sim - e), std::max(4 * sigma, 1e-12)) << "m=" << m << " p=" << p;
        }
    within_limit(watch, 30);
}

TEST(Acceptance, AC07_ADSampling_safety) {
    Stopwatch watch;
    auto data = synthetic::correlated(3000, 96, 8, 7);
    const auto original = data;
    const auto queries = synthetic::perturbed_queries(data, 20, 0.1f, 8);
    const auto index = build_index(std::move(data), params(4, 16, 7));
    SearchConfig cfg;
    cfg.mode = SearchMode::optimized;
    cfg.k = 20;
    cfg.budget_ratio = 0.1;
    cfg.eps0 = 1e9;
    for (std::size_t qi = 0; qi < queries.n; ++qi) {
        for (const auto& nb : search(index, queries.row(qi), cfg)) {
            const double exact = l2_sqr(queries.row(qi), original.row(static_cast<std::size_t>(nb.id)));
            EXPECT_LE(std::abs(nb.distance - exact), 1e-4 * exact + 1e-9);
        }
    }
    const auto pair = crisp::testing::uniform_data(2, 130, 9, -5, 5);
    const auto unbounded = adsampling_verify(pair.row(0), pair.row(1), std::numeric_limits<double>::infinity(), cfg);
    EXPECT_FALSE(unbounded.pruned);
    EXPECT_NEAR(unbounded.distance, l2_sqr(pair.row(0), pair.row(1)), 1e-9);

    // Worked example: D = 64, stride 32, partial 100 after 32 dims, r_k^2 = 10.
    std::vector<float> zero(64, 0.0f), x(64, 0.0f);
    for (std::size_t i = 0; i < 25; ++i) x[i] = 2.0f;
    SearchConfig worked;
    const auto verdict = adsampling_verify(zero, x, 10.0, worked);
    EXPECT_TRUE(verdict.pruned);
    EXPECT_EQ(verdict.dims_scanned, 32u);
    EXPECT_DOUBLE_EQ(verdict.distance, 100.0);
    const double threshold = adsampling_threshold(10.0, 32, 64, 2.1);
    EXPECT_NEAR(threshold, 10.0 * 0.5 * std::pow(1.0 + 2.1 / std::sqrt(32.0), 2), 1e-12);
    EXPECT_NEAR(threshold, 9.37, 0.05);
    within_limit(watch, 10);
}

TEST(Acceptance, AC08_Mode_consistency) {
    Stopwatch watch;
    std::mt19937_64 rng(8);
    for (int c = 0; c < 10; ++c) {
        const std::size_t d = 16 * (1 + rng() % 4);
        auto data = c % 2 ? synthetic::correlated(2000, d, 4, rng()) : synthetic::isotropic(2000, d, rng());
        const auto queries = synthetic::perturbed_queries(data, 10, 0.2f, rng());
        const auto index = build_index(std::move(data), params(2 + c % 3, 8 + c, rng()));
        SearchConfig g;
        g.k = 1 + rng() % 20;
        g.budget_ratio = 0.02 + 0.02 * c;
        g.min_collision_ratio = 0.3 + 0.05 * c;
        SearchConfig o = g;
        o.mode = SearchMode::optimized;
        o.patience_factor = std::numeric_limits<double>::infinity();
        o.eps0 = 1e9;
        for (std::size_t qi = 0; qi < queries.n; ++qi) {
            SearchWorkspace ws;
            const auto prepared = prepare_query(index, queries.row(qi));
            const auto candidates = collect_candidates(index, prepared, g, ws);
            ASSERT_EQ(verify_candidates(index, prepared, candidates, g),
                      verify_candidates(index, prepared, candidates, o))
                << "config " << c;
        }
    }
    within_limit(watch, 60);
}

TEST(Acceptance, AC09_Recall_monotone_in_budget) {
    Stopwatch watch;
    auto data = synthetic::isotropic(20'000, 64, 9);
    const auto queries = synthetic::isotropic(100, 64, 10);
    const auto gt = brute_force_knn(data, queries, 10);
    const auto index = build_index(std::move(data), params(4, 50, 9));
    SearchConfig cfg;
    cfg.k = 10;
    cfg.min_collision_ratio = 0.25; // tau = 1
    double last = 0.0;
    for (double b : {0.01, 0.05, 0.2, 1.0}) {
        cfg.budget_ratio = b;
        const double recall = recall_at_k(result_ids(search_batch(index, queries, cfg, nullptr, true)), gt, 10);
        std::cout << "  budget " << b << " recall@10 " << recall << '\n';
        EXPECT_GE(recall, last);
        last = recall;
    }
    EXPECT_GE(last, 0.99);
    within_limit(watch, 300);
}

TEST(Acceptance, AC10_Space_accounting) {
    Stopwatch watch;
    TempDir dir("acceptance");
    for (bool correlated : {false, true}) {
        auto data = correlated ? synthetic::correlated(3000, 48, 4, 10) : synthetic::isotropic(3000, 48, 10);
        const auto index = build_index(std::move(data), params(3, 12, 10));
        EXPECT_EQ(index.rotation.applied, correlated);
        save_index(index, dir / "idx");
        const auto file_size = std::filesystem::file_size(dir / "idx");
        const auto logical = index_logical_bytes(index);
        EXPECT_GE(file_size, logical);
        EXPECT_LE(file_size - logical, 1024u);

        const std::size_t cells = index.centroids() * index.centroids();
        ASSERT_EQ(index.postings.offsets.size(), index.subspaces());
        std::size_t posting_words = 0;
        for (std::size_t s = 0; s < index.subspaces(); ++s) {
            EXPECT_EQ(index.postings.offsets[s].size(), cells + 1);
            EXPECT_EQ(index.postings.ids[s].size(), index.n);
            EXPECT_EQ(index.postings.offsets[s].front(), 0u);
            EXPECT_EQ(index.postings.offsets[s].back(), index.n);
            EXPECT_TRUE(std::is_sorted(index.postings.offsets[s].begin(), index.postings.offsets[s].end()));
            posting_words += index.postings.offsets[s].size() + index.postings.ids[s].size();
        }
        EXPECT_EQ(posting_words, index.subspaces() * (cells + 1) + index.subspaces() * index.n);
    }
    within_limit(watch, 10);
}

TEST(Acceptance, AC11_Correlated_data_end_to_end) {
    Stopwatch watch;
    const std::size_t n = 20'000;
    auto data = synthetic::correlated(n, 128, 10, 11);
    const double cev = compute_cev(sample_rows(data, 11));
    std::cout << "  stand-in CEV " << cev << '\n';
    ASSERT_GT(cev, 0.9);
    const auto queries = synthetic::perturbed_queries(data, 50, 0.1f, 12);
    const auto gt = brute_force_knn(data, queries, 100);
    const auto index = build_index(std::move(data), params(8, 50, 11));
    ASSERT_TRUE(index.rotation.applied);

    bool reached = false;
    for (double budget : {0.005, 0.01, 0.02, 0.05}) {
        for (double collision : {0.25, 0.5}) {
            SearchConfig cfg;
            cfg.mode = SearchMode::optimized;
            cfg.k = 100;
            cfg.budget_ratio = budget;
            cfg.min_collision_ratio = collision;
            const auto run = run_benchmark(index, queries, &gt, cfg, true);
            const double verified_share = run.report.mean_verified / double(n);
            std::cout << "  budget " << budget << " collision " << collision << " recall@100 " << run.report.recall
                      << " verified " << 100 * verified_share << "%\n";
            reached = reached || (run.report.recall >= 0.90 && verified_share <= 0.20);
        }
    }
    EXPECT_TRUE(reached);
    within_limit(watch, 600);
}

TEST(Acceptance, AC12_Deterministic_outputs) {
    Stopwatch watch;
    TempDir dir("acceptance");
    auto pipeline = [&](const std::string& tag) {
        const auto base = dir / (tag + "_base.fvecs");
        const auto queries = dir / (tag + "_q.fvecs");
        ASSERT_EQ(run_cli("synth --kind correlated --n 4000 --dim 48 --rank 6 --seed 3 --out " + q(base) +
                          " --num-queries 20 --queries-out " + q(queries)),
                  0);
        ASSERT_EQ(run_cli("groundtruth --dataset " + q(base) + " --queries " + q(queries) + " --k 10 --out " +
                          q(dir / (tag + "_gt.ivecs"))),
                  0);
        ASSERT_EQ(run_cli("build --dataset " + q(base) + " --subspaces 4 --centroids 16 --seed 5 --out " +
                          q(dir / (tag + ".idx"))),
                  0);
        for (const char* mode : {"guaranteed", "optimized"}) {
            ASSERT_EQ(run_cli("search --index " + q(dir / (tag + ".idx")) + " --queries " + q(queries) +
                              " --mode " + mode + " --budget-ratio 0.05 --parallel --out " +
                              q(dir / (tag + "_" + mode + ".ivecs"))),
                      0);
        }
        ASSERT_EQ(run_cli("theory --m 8,16 --p-star 0.4,0.7 --tau 2,4 --trials 20000 --seed 1 --out " +
                          q(dir / (tag + "_theory.csv"))),
                  0);
    };
    pipeline("a");
    pipeline("b");
    for (const char* suffix :
         {"_base.fvecs", "_q.fvecs", "_gt.ivecs", ".idx", "_guaranteed.ivecs", "_optimized.ivecs", "_theory.csv"}) {
        const auto a = crisp::testing::read_bytes(dir / (std::string("a") + suffix));
        const auto b = crisp::testing::read_bytes(dir / (std::string("b") + suffix));
        EXPECT_FALSE(a.empty()) << suffix;
        EXPECT_EQ(a, b) << suffix;
    }
    within_limit(watch, 120);
}

int main(int argc, char** argv) {
    ::testing::InitGoogleTest(&argc, argv);
    ::testing::UnitTest::GetInstance()->listeners().Append(new CriterionPrinter);
    return RUN_ALL_TESTS();
}
