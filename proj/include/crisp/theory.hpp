#pragma once

// Recall lower bound for guaranteed-mode retrieval. If the true nearest
// neighbor collides with the query independently in each of M subspaces with
// probability p*, its collision count S is Binomial(M, p*), and it survives the
// threshold unless S < tau. Hoeffding gives
//
//   P(S >= tau) >= 1 - exp(-2 (M p* - tau)^2 / M)     whenever M p* > tau.
//
// The exact binomial tail and a Monte Carlo simulation serve as oracles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "crisp/dataset.hpp"
#include "crisp/detail/random.hpp"
#include "crisp/errors.hpp"
#include "crisp/index.hpp"
#include "crisp/search.hpp"

namespace crisp {

struct BoundInput {
    std::size_t m = 1;
    double p_star = 0.0;
    double tau = 0.0;

    bool valid() const { return static_cast<double>(m) * p_star > tau; }
};

inline void check_bound_input(const BoundInput& in) {
    if (in.m < 1) throw ArgumentError("m must be >= 1");
    if (!(in.p_star >= 0.0 && in.p_star <= 1.0)) throw ArgumentError("p_star must be in [0, 1]");
    if (!(in.tau >= 0.0)) throw ArgumentError("tau must be >= 0");
}

/// exp(-2 (M p* - tau)^2 / M), or nullopt when M p* <= tau.
inline std::optional<double> hoeffding_failure_bound(const BoundInput& in) {
    check_bound_input(in);
    if (!in.valid()) return std::nullopt;
    const double m = static_cast<double>(in.m);
    const double gap = m * in.p_star - in.tau;
    return std::exp(-2.0 * gap * gap / m);
}

/// Lower bound on P(x* in C); nullopt when the bound is vacuous.
inline std::optional<double> hoeffding_recall_bound(const BoundInput& in) {
    const auto failure = hoeffding_failure_bound(in);
    if (!failure) return std::nullopt;
    return 1.0 - *failure;
}

/// P(S < tau) for S ~ Binomial(m, p), by direct summation.
inline double exact_binomial_failure(std::size_t m, double p, double tau) {
    check_bound_input({m, p, tau});
    const auto limit = static_cast<std::size_t>(std::ceil(tau)); // s < tau  <=>  s < ceil(tau)
    const std::size_t upper = std::min(limit, m + 1);
    if (upper == 0) return 0.0;
    if (p == 0.0) return 1.0; // S = 0 < tau
    if (p == 1.0) return limit > m ? 1.0 : 0.0;

    double total = 0.0;
    if (m <= 60) {
        double coeff = 1.0; // C(m, s)
        for (std::size_t s = 0; s < upper; ++s) {
            total += coeff * std::pow(p, static_cast<double>(s)) * std::pow(1.0 - p, static_cast<double>(m - s));
            coeff = coeff * static_cast<double>(m - s) / static_cast<double>(s + 1);
        }
    } else {
        const double lp = std::log(p);
        const double lq = std::log1p(-p);
        const double lm = std::lgamma(static_cast<double>(m) + 1.0);
        for (std::size_t s = 0; s < upper; ++s) {
            const double ls = static_cast<double>(s);
            const double log_term = lm - std::lgamma(ls + 1.0) - std::lgamma(static_cast<double>(m - s) + 1.0) +
                                    ls * lp + static_cast<double>(m - s) * lq;
            total += std::exp(log_term);
        }
    }
    return std::clamp(total, 0.0, 1.0);
}

/// Fraction of `trials` Binomial(m, p) draws falling below tau. The trials are
/// split into fixed chunks with independent streams, so the result does not
/// depend on the worker count.
inline double simulate_collision_retrieval(std::size_t m, double p, double tau, std::size_t trials,
                                           std::uint64_t seed) {
    check_bound_input({m, p, tau});
    if (trials < 1) throw ArgumentError("trials must be >= 1");
    constexpr std::size_t kChunks = 64;
    std::vector<std::size_t> failures(kChunks, 0);
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(kChunks); ++c) {
        const auto chunk = static_cast<std::size_t>(c);
        const std::size_t begin = trials * chunk / kChunks;
        const std::size_t end = trials * (chunk + 1) / kChunks;
        std::mt19937_64 rng(detail::derive_seed(seed, detail::SeedStream::simulation_base, chunk));
        std::binomial_distribution<std::int64_t> binomial(static_cast<std::int64_t>(m), p);
        std::size_t count = 0;
        for (std::size_t t = begin; t < end; ++t) {
            if (static_cast<double>(binomial(rng)) < tau) ++count;
        }
        failures[chunk] = count;
    }
    std::size_t total = 0;
    for (std::size_t f : failures) total += f;
    return static_cast<double>(total) / static_cast<double>(trials);
}

/// Per query: fraction of subspaces whose activated cells (guaranteed-mode
/// traversal under `config`'s budget) contain the query's true nearest neighbor gt[q][0].
inline std::vector<double> estimate_p_star(const CrispIndex& index, const DatasetMatrix& queries,
                                           const GroundTruth& gt, SearchConfig config) {
    if (gt.q < queries.n || gt.k < 1) throw ArgumentError("estimate_p_star: ground truth does not cover queries");
    config.mode = SearchMode::guaranteed;
    const std::size_t budget = retrieval_budget(config, index.n);
    std::vector<double> p_star(queries.n);
    ScoreScratch scratch(index.n);
    for (std::size_t qi = 0; qi < queries.n; ++qi) {
        const auto prepared = prepare_query(index, queries.row(qi));
        scratch.reset();
        for (std::size_t s = 0; s < index.subspaces(); ++s) {
            auto cursor = make_cursor(index, prepared.vec, s);
            accumulate_subspace(cursor, index.postings, s, scratch, config, budget);
        }
        const std::int32_t nn = gt.row(qi)[0];
        if (nn < 0 || static_cast<std::size_t>(nn) >= index.n) throw ArgumentError("ground-truth id out of range");
        p_star[qi] = static_cast<double>(scratch.score(nn)) / static_cast<double>(index.subspaces());
    }
    return p_star;
}

struct TheoryRow {
    std::size_t m = 0;
    double p_star = 0.0;
    double tau = 0.0;
    double exact_failure = 0.0;
    std::optional<double> recall_bound;
    double simulated_failure = 0.0;
};

inline TheoryRow theory_row(std::size_t m, double p_star, double tau, std::size_t trials, std::uint64_t seed) {
    TheoryRow row{m, p_star, tau, 0.0, std::nullopt, 0.0};
    row.exact_failure = exact_binomial_failure(m, p_star, tau);
    row.recall_bound = hoeffding_recall_bound({m, p_star, tau});
    row.simulated_failure = simulate_collision_retrieval(m, p_star, tau, trials, seed);
    return row;
}

} // namespace crisp
