#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <vector>

#include "crisp/dataset.hpp"

namespace crisp {

constexpr std::size_t code_words(std::size_t dim) { return (dim + 63) / 64; }

/// Sign code: bit i set iff x[i] > 0 (zero maps to 0), little-endian within 64-bit words.
inline void binarize_into(std::span<const float> x, std::span<std::uint64_t> out) {
    std::fill(out.begin(), out.end(), 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0f) out[i / 64] |= std::uint64_t{1} << (i % 64);
    }
}

inline std::vector<std::uint64_t> binarize(std::span<const float> x) {
    std::vector<std::uint64_t> code(code_words(x.size()));
    binarize_into(x, code);
    return code;
}

inline std::uint32_t hamming_distance(std::span<const std::uint64_t> a,
                                      std::span<const std::uint64_t> b) {
    std::uint32_t dist = 0;
    for (std::size_t w = 0; w < a.size(); ++w) dist += static_cast<std::uint32_t>(std::popcount(a[w] ^ b[w]));
    return dist;
}

/// N packed codes, `words` 64-bit words per row.
struct BinaryCodes {
    std::size_t n = 0;
    std::size_t words = 0;
    std::vector<std::uint64_t> bits;

    std::span<const std::uint64_t> row(std::size_t i) const { return {bits.data() + i * words, words}; }
    std::span<std::uint64_t> row(std::size_t i) { return {bits.data() + i * words, words}; }

    friend bool operator==(const BinaryCodes&, const BinaryCodes&) = default;
};

inline BinaryCodes binarize_all(const DatasetMatrix& data) {
    BinaryCodes codes;
    codes.n = data.n;
    codes.words = code_words(data.d);
    codes.bits.assign(codes.n * codes.words, 0);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(data.n); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        binarize_into(data.row(idx), codes.row(idx));
    }
    return codes;
}

} // namespace crisp
