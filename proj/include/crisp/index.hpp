#pragma once

// Inverted multi-index over M contiguous subspaces. Each subspace is split in
// two halves with a K-centroid codebook per half, giving K*K cells. Postings
// are laid out per subspace as CSR: an offsets array of K*K+1 entries that
// delimits runs inside one contiguous N-entry id array, sorted by cell.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "crisp/binary_code.hpp"
#include "crisp/dataset.hpp"
#include "crisp/detail/random.hpp"
#include "crisp/distance.hpp"
#include "crisp/errors.hpp"
#include "crisp/kmeans.hpp"
#include "crisp/preprocessing.hpp"

namespace crisp {

inline constexpr std::size_t kDefaultCentroids = 50;
inline constexpr std::size_t kMaxTrainingSample = 100'000;

struct BuildParams {
    std::size_t subspaces = 0; // M, required
    std::size_t centroids = kDefaultCentroids; // K per half
    double tau_cev = kDefaultTauCev;
    std::uint64_t seed = 0;
    std::size_t kmeans_iterations = kDefaultKMeansIterations;
    std::size_t training_sample = kMaxTrainingSample;
    bool allow_padding = true;
};

struct SubspaceCodebooks {
    std::size_t m = 0;
    std::size_t k = 0;
    std::size_t dims_per_subspace = 0;
    std::vector<DatasetMatrix> left;  // m entries, each k x dims_per_subspace/2
    std::vector<DatasetMatrix> right;

    std::size_t half_dim() const { return dims_per_subspace / 2; }

    friend bool operator==(const SubspaceCodebooks&, const SubspaceCodebooks&) = default;
};

struct CsrPostingIndex {
    std::size_t m = 0;
    std::size_t k = 0; // centroids per half; K*K cells per subspace
    std::size_t n = 0;
    std::vector<std::vector<std::int64_t>> offsets; // m x (k*k + 1)
    std::vector<std::vector<std::int32_t>> ids;     // m x n

    std::size_t cells() const { return k * k; }

    std::span<const std::int32_t> cell(std::size_t subspace, std::size_t cell_id) const {
        const auto& off = offsets[subspace];
        const auto begin = static_cast<std::size_t>(off[cell_id]);
        const auto end = static_cast<std::size_t>(off[cell_id + 1]);
        return {ids[subspace].data() + begin, end - begin};
    }

    friend bool operator==(const CsrPostingIndex&, const CsrPostingIndex&) = default;
};

struct CrispIndex {
    std::size_t n = 0;
    std::size_t d = 0;        // input dimensionality
    std::size_t padded_d = 0; // stored dimensionality, multiple of 2M
    RotationRecord rotation;
    SubspaceCodebooks codebooks;
    CsrPostingIndex postings;
    BinaryCodes codes;   // over the stored (rotated, padded) rows
    DatasetMatrix data;  // n x padded_d

    std::size_t subspaces() const { return codebooks.m; }
    std::size_t centroids() const { return codebooks.k; }

    friend bool operator==(const CrispIndex&, const CrispIndex&) = default;
};

constexpr std::size_t padded_dimension(std::size_t d, std::size_t m) {
    const std::size_t unit = 2 * m;
    return (d + unit - 1) / unit * unit;
}

/// Cell id i*K + j of a subspace vector, i/j the nearest left/right centroids (lowest index on ties).
inline std::size_t assign_cell(std::span<const float> x_sub, const DatasetMatrix& left,
                               const DatasetMatrix& right) {
    const std::size_t half = left.d;
    if (x_sub.size() != half + right.d) throw ArgumentError("assign_cell: subspace dimension mismatch");
    const std::size_t i = nearest_centroid(x_sub.first(half), left);
    const std::size_t j = nearest_centroid(x_sub.subspan(half), right);
    return i * left.n + j;
}

namespace detail {

inline DatasetMatrix pad_columns(DatasetMatrix data, std::size_t padded_d) {
    if (padded_d == data.d) return data;
    DatasetMatrix out(data.n, padded_d);
    for (std::size_t i = 0; i < data.n; ++i) {
        std::copy_n(data.row(i).begin(), data.d, out.row(i).begin());
    }
    return out;
}

inline DatasetMatrix extract_columns(const DatasetMatrix& data, std::span<const std::size_t> rows,
                                     std::size_t first_col, std::size_t width) {
    DatasetMatrix out(rows.size(), width);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::copy_n(data.row(rows[r]).begin() + static_cast<std::ptrdiff_t>(first_col), width,
                    out.row(r).begin());
    }
    return out;
}

} // namespace detail

/// Stable counting sort of point ids by cell into offsets/ids arrays.
inline void build_csr(std::span<const std::uint32_t> cell_of_point, std::size_t cells,
                      std::vector<std::int64_t>& offsets, std::vector<std::int32_t>& ids) {
    offsets.assign(cells + 1, 0);
    for (std::uint32_t c : cell_of_point) ++offsets[c + 1];
    for (std::size_t c = 0; c < cells; ++c) offsets[c + 1] += offsets[c];
    ids.assign(cell_of_point.size(), 0);
    std::vector<std::int64_t> cursor(offsets.begin(), offsets.end() - 1);
    for (std::size_t id = 0; id < cell_of_point.size(); ++id) {
        ids[static_cast<std::size_t>(cursor[cell_of_point[id]]++)] = static_cast<std::int32_t>(id);
    }
}

inline CrispIndex build_index(DatasetMatrix data, const BuildParams& params) {
    const std::size_t m = params.subspaces;
    const std::size_t k = params.centroids;
    if (m == 0) throw ArgumentError("build_index: subspace count must be >= 1");
    if (k == 0) throw ArgumentError("build_index: centroid count must be >= 1");
    if (data.d == 0) throw ArgumentError("build_index: dimension must be >= 1");
    if (data.n < k) throw ArgumentError("build_index: N must be >= K");
    if (data.n > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max())) {
        throw ArgumentError("build_index: N exceeds int32 id range");
    }
    const std::size_t padded_d = padded_dimension(data.d, m);
    if (padded_d != data.d && !params.allow_padding) {
        throw ArgumentError("build_index: D=" + std::to_string(data.d) +
                            " is not divisible by 2M=" + std::to_string(2 * m));
    }

    CrispIndex index;
    index.n = data.n;
    index.d = data.d;
    index.padded_d = padded_d;
    index.rotation = maybe_rotate(data, params.tau_cev, params.seed);
    index.data = detail::pad_columns(std::move(data), padded_d);

    const std::size_t sub_dim = padded_d / m;
    const std::size_t half = sub_dim / 2;
    auto& books = index.codebooks;
    books.m = m;
    books.k = k;
    books.dims_per_subspace = sub_dim;
    books.left.resize(m);
    books.right.resize(m);

    std::mt19937_64 sample_rng(detail::derive_seed(params.seed, detail::SeedStream::training_sample));
    const auto training_rows = detail::sample_without_replacement(
        index.n, std::min(index.n, std::max(params.training_sample, k)), sample_rng);

#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t h = 0; h < static_cast<std::int64_t>(2 * m); ++h) {
        const auto half_id = static_cast<std::size_t>(h);
        const auto points = detail::extract_columns(index.data, training_rows, half_id * half, half);
        auto trained = kmeans(points, k, params.kmeans_iterations,
                              detail::derive_seed(params.seed, detail::SeedStream::kmeans_base, half_id));
        auto& slot = (half_id % 2 == 0) ? books.left[half_id / 2] : books.right[half_id / 2];
        slot = std::move(trained.centroids);
    }

    auto& postings = index.postings;
    postings.m = m;
    postings.k = k;
    postings.n = index.n;
    postings.offsets.resize(m);
    postings.ids.resize(m);
    std::vector<std::uint32_t> cells(index.n);
    for (std::size_t s = 0; s < m; ++s) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(index.n); ++i) {
            const auto row = index.data.row(static_cast<std::size_t>(i)).subspan(s * sub_dim, sub_dim);
            cells[static_cast<std::size_t>(i)] =
                static_cast<std::uint32_t>(assign_cell(row, books.left[s], books.right[s]));
        }
        build_csr(cells, k * k, postings.offsets[s], postings.ids[s]);
    }

    index.codes = binarize_all(index.data);
    return index;
}

/// Exact logical footprint of the index payload in bytes.
inline std::size_t index_logical_bytes(const CrispIndex& index) {
    const std::size_t n = index.n;
    const std::size_t dp = index.padded_d;
    const std::size_t m = index.subspaces();
    const std::size_t k = index.centroids();
    std::size_t bytes = 0;
    bytes += 4 * n * dp;                 // stored vectors
    bytes += 4 * m * n;                  // posting ids
    bytes += 8 * m * (k * k + 1);        // posting offsets
    bytes += 4 * 2 * m * k * (dp / m / 2); // codebooks (= 4*K*padded_d)
    bytes += 8 * code_words(dp) * n;     // binary codes
    if (index.rotation.applied) bytes += 4 * index.d * index.d;
    return bytes;
}

} // namespace crisp
