#pragma once

// Correlation-aware preprocessing: measure how much variance the leading
// principal components carry on a bounded sample, and rotate the corpus with a
// Haar-random orthogonal matrix only when that concentration crosses a threshold.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "crisp/dataset.hpp"
#include "crisp/detail/random.hpp"
#include "crisp/errors.hpp"

namespace crisp {

inline constexpr double kDefaultTauCev = 0.85;
inline constexpr std::size_t kMaxCevSample = 100'000;

struct RotationRecord {
    std::size_t d = 0;
    double cev = 0.0;
    bool applied = false;
    std::uint64_t seed = 0;
    std::vector<float> matrix; // d x d row-major, non-empty iff applied

    friend bool operator==(const RotationRecord&, const RotationRecord&) = default;
};

/// Number of rows the spectral check samples: ceil(min(0.1 N, 1e5)), or all rows when N <= 10.
constexpr std::size_t cev_sample_size(std::size_t n) {
    if (n <= 10) return n;
    return std::min((n + 9) / 10, kMaxCevSample);
}

/// Uniform sample without replacement (Floyd), returned in ascending row order.
inline std::vector<std::size_t> sample_row_indices(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(detail::derive_seed(seed, detail::SeedStream::cev_sample));
    return detail::sample_without_replacement(n, cev_sample_size(n), rng);
}

inline DatasetMatrix sample_rows(const DatasetMatrix& data, std::uint64_t seed) {
    const auto rows = sample_row_indices(data.n, seed);
    DatasetMatrix out(rows.size(), data.d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy_n(data.row(rows[i]).begin(), data.d, out.row(i).begin());
    }
    return out;
}

struct CovarianceSpectrum {
    std::vector<double> eigenvalues; // descending, unclamped
    double trace = 0.0;
};

/// Eigenvalues of the unbiased sample covariance over the selected rows.
inline CovarianceSpectrum covariance_spectrum(const DatasetMatrix& data,
                                              std::span<const std::size_t> rows) {
    if (rows.size() < 2) throw ArgumentError("covariance needs at least 2 rows");
    const std::size_t d = data.d;
    const auto count = static_cast<double>(rows.size());

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    for (std::size_t r : rows) {
        const auto x = data.row(r);
        for (std::size_t j = 0; j < d; ++j) mean[static_cast<Eigen::Index>(j)] += x[j];
    }
    mean /= count;

    constexpr std::size_t kBlock = 512;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d),
                                                static_cast<Eigen::Index>(d));
    Eigen::MatrixXd block(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(kBlock));
    for (std::size_t start = 0; start < rows.size(); start += kBlock) {
        const std::size_t len = std::min(kBlock, rows.size() - start);
        for (std::size_t b = 0; b < len; ++b) {
            const auto x = data.row(rows[start + b]);
            for (std::size_t j = 0; j < d; ++j) {
                block(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(b)) =
                    static_cast<double>(x[j]) - mean[static_cast<Eigen::Index>(j)];
            }
        }
        cov.selfadjointView<Eigen::Lower>().rankUpdate(block.leftCols(static_cast<Eigen::Index>(len)));
    }
    cov = cov.selfadjointView<Eigen::Lower>();
    cov /= (count - 1.0);

    CovarianceSpectrum spectrum;
    spectrum.trace = cov.trace();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    const auto& values = solver.eigenvalues();
    spectrum.eigenvalues.assign(values.data(), values.data() + values.size());
    std::sort(spectrum.eigenvalues.begin(), spectrum.eigenvalues.end(), std::greater<>());
    return spectrum;
}

/// Share of total variance carried by the top floor(0.2 D) components (at least one).
inline double cev_from_eigenvalues(std::span<const double> descending) {
    const std::size_t d = descending.size();
    const std::size_t top = std::max<std::size_t>(1, d / 5);
    double head = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double lambda = std::max(0.0, descending[i]);
        total += lambda;
        if (i < top) head += lambda;
    }
    if (total < 1e-12) return 0.0;
    return std::clamp(head / total, 0.0, 1.0);
}

inline double compute_cev(const DatasetMatrix& sample) {
    if (sample.n < 2) throw ArgumentError("compute_cev: need at least 2 rows");
    if (sample.d < 1) throw ArgumentError("compute_cev: need D >= 1");
    std::vector<std::size_t> rows(sample.n);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return cev_from_eigenvalues(covariance_spectrum(sample, rows).eigenvalues);
}

/// Haar-random d x d orthogonal matrix (row-major, float64): Q of QR(G), G ~ N(0,1),
/// with columns sign-flipped so R has a positive diagonal.
inline std::vector<double> generate_rotation(std::size_t d, std::uint64_t seed) {
    if (d < 1) throw ArgumentError("generate_rotation: d must be >= 1");
    const auto n = static_cast<Eigen::Index>(d);
    std::mt19937_64 rng(detail::derive_seed(seed, detail::SeedStream::rotation));
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd gaussian(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) gaussian(i, j) = normal(rng);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd& r = qr.matrixQR();
    for (Eigen::Index j = 0; j < n; ++j) {
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    }
    std::vector<double> out(d * d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) out[static_cast<std::size_t>(i * n + j)] = q(i, j);
    }
    return out;
}

namespace detail {

// out = x * R with R row-major d x d.
inline void multiply_row(std::span<const float> x, std::span<const float> rotation,
                         std::span<float> out) {
    const std::size_t d = x.size();
    std::fill(out.begin(), out.end(), 0.0f);
    for (std::size_t i = 0; i < d; ++i) {
        const float xi = x[i];
        if (xi == 0.0f) continue;
        const float* r = rotation.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) out[j] += xi * r[j];
    }
}

} // namespace detail

/// Overwrites every row x with x * R. Extra memory: one d-float buffer per worker.
inline void apply_rotation_in_place(DatasetMatrix& data, std::span<const float> rotation) {
    const std::size_t d = data.d;
    if (rotation.size() != d * d) throw ArgumentError("rotation matrix size != d*d");
#pragma omp parallel
    {
        std::vector<float> scratch(d);
#pragma omp for schedule(static)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(data.n); ++i) {
            auto row = data.row(static_cast<std::size_t>(i));
            detail::multiply_row(row, rotation, scratch);
            std::copy(scratch.begin(), scratch.end(), row.begin());
        }
    }
}

/// Spectral gate: rotate the corpus in place iff its sampled CEV exceeds tau_cev.
inline RotationRecord maybe_rotate(DatasetMatrix& data, double tau_cev = kDefaultTauCev,
                                   std::uint64_t seed = 0) {
    if (data.empty()) throw ArgumentError("maybe_rotate: empty dataset");
    RotationRecord record;
    record.d = data.d;
    record.seed = seed;

    const auto rows = sample_row_indices(data.n, seed);
    // A single row has no covariance; treat it as isotropic.
    record.cev = rows.size() < 2 ? 0.0
                                 : cev_from_eigenvalues(covariance_spectrum(data, rows).eigenvalues);
    record.applied = record.cev > tau_cev;
    if (!record.applied) return record;

    const auto exact = generate_rotation(data.d, seed);
    record.matrix.assign(exact.begin(), exact.end());
    apply_rotation_in_place(data, record.matrix);
    return record;
}

inline std::vector<float> rotate_query(std::span<const float> query, const RotationRecord& record) {
    if (query.size() != record.d) {
        throw ArgumentError("rotate_query: query dimension " + std::to_string(query.size()) +
                            " != " + std::to_string(record.d));
    }
    std::vector<float> out(query.begin(), query.end());
    if (record.applied) detail::multiply_row(query, record.matrix, out);
    return out;
}

} // namespace crisp
