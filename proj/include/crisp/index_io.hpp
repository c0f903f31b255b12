#pragma once

// Index file layout (all integers little-endian):
//
//   "CRSP" | u32 version
//   u64 N | u64 D | u64 padded_D | u32 M | u32 K | u32 flags (bit 0: rotated)
//   u8 applied | f64 cev | i64 seed | D*D f32 rotation (iff applied)
//   per subspace: K*(padded_D/2M) f32 left centroids, then right centroids
//   per subspace: (K*K+1) i64 offsets, N i32 ids
//   N * ceil(padded_D/64) u64 binary codes
//   N * padded_D f32 stored vectors

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "crisp/detail/binary_io.hpp"
#include "crisp/errors.hpp"
#include "crisp/index.hpp"

namespace crisp {

inline constexpr std::array<char, 4> kIndexMagic = {'C', 'R', 'S', 'P'};
inline constexpr std::uint32_t kIndexVersion = 1;
inline constexpr std::uint32_t kFlagRotated = 1u << 0;

/// Bytes the file spends on framing rather than payload.
inline constexpr std::size_t kIndexHeaderBytes =
    4 + 4 + 8 + 8 + 8 + 4 + 4 + 4 + // magic, version, header
    1 + 8 + 8;                      // rotation record prefix

inline void save_index(const CrispIndex& index, std::ostream& out) {
    detail::BinaryWriter w(out);
    w.put_bytes(kIndexMagic.data(), kIndexMagic.size());
    w.put(kIndexVersion);
    w.put(static_cast<std::uint64_t>(index.n));
    w.put(static_cast<std::uint64_t>(index.d));
    w.put(static_cast<std::uint64_t>(index.padded_d));
    w.put(static_cast<std::uint32_t>(index.subspaces()));
    w.put(static_cast<std::uint32_t>(index.centroids()));
    w.put(index.rotation.applied ? kFlagRotated : 0u);

    w.put(static_cast<std::uint8_t>(index.rotation.applied ? 1 : 0));
    w.put(index.rotation.cev);
    w.put(static_cast<std::int64_t>(index.rotation.seed));
    if (index.rotation.applied) w.put_span<float>(index.rotation.matrix);

    for (std::size_t s = 0; s < index.subspaces(); ++s) {
        w.put_span<float>(index.codebooks.left[s].data);
        w.put_span<float>(index.codebooks.right[s].data);
    }
    for (std::size_t s = 0; s < index.subspaces(); ++s) {
        w.put_span<std::int64_t>(index.postings.offsets[s]);
        w.put_span<std::int32_t>(index.postings.ids[s]);
    }
    w.put_span<std::uint64_t>(index.codes.bits);
    w.put_span<float>(index.data.data);
}

inline void save_index(const CrispIndex& index, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    save_index(index, out);
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

inline CrispIndex load_index(std::istream& in) {
    detail::BinaryReader r(in, "index");
    std::array<char, 4> magic{};
    r.get_bytes(magic.data(), magic.size());
    if (magic != kIndexMagic) throw FormatError("index: bad magic");
    const auto version = r.get<std::uint32_t>();
    if (version != kIndexVersion) {
        throw FormatError("index: unsupported version " + std::to_string(version));
    }

    CrispIndex index;
    index.n = r.get<std::uint64_t>();
    index.d = r.get<std::uint64_t>();
    index.padded_d = r.get<std::uint64_t>();
    const std::size_t m = r.get<std::uint32_t>();
    const std::size_t k = r.get<std::uint32_t>();
    const auto flags = r.get<std::uint32_t>();
    if (m == 0 || k == 0 || index.padded_d % (2 * m) != 0 || index.padded_d < index.d) {
        throw FormatError("index: inconsistent header");
    }

    auto& rot = index.rotation;
    rot.d = index.d;
    rot.applied = r.get<std::uint8_t>() != 0;
    rot.cev = r.get<double>();
    rot.seed = static_cast<std::uint64_t>(r.get<std::int64_t>());
    if (rot.applied != ((flags & kFlagRotated) != 0)) throw FormatError("index: rotation flag mismatch");
    if (rot.applied) rot.matrix = r.get_vector<float>(index.d * index.d);

    auto& books = index.codebooks;
    books.m = m;
    books.k = k;
    books.dims_per_subspace = index.padded_d / m;
    const std::size_t half = books.half_dim();
    books.left.resize(m);
    books.right.resize(m);
    for (std::size_t s = 0; s < m; ++s) {
        books.left[s] = DatasetMatrix(k, half, r.get_vector<float>(k * half));
        books.right[s] = DatasetMatrix(k, half, r.get_vector<float>(k * half));
    }

    auto& postings = index.postings;
    postings.m = m;
    postings.k = k;
    postings.n = index.n;
    postings.offsets.resize(m);
    postings.ids.resize(m);
    for (std::size_t s = 0; s < m; ++s) {
        postings.offsets[s] = r.get_vector<std::int64_t>(k * k + 1);
        postings.ids[s] = r.get_vector<std::int32_t>(index.n);
        const auto& off = postings.offsets[s];
        if (off.front() != 0 || static_cast<std::size_t>(off.back()) != index.n ||
            !std::is_sorted(off.begin(), off.end())) {
            throw FormatError("index: malformed offsets in subspace " + std::to_string(s));
        }
        for (std::int32_t id : postings.ids[s]) {
            if (id < 0 || static_cast<std::size_t>(id) >= index.n) {
                throw FormatError("index: posting id out of range in subspace " + std::to_string(s));
            }
        }
    }

    index.codes.n = index.n;
    index.codes.words = code_words(index.padded_d);
    index.codes.bits = r.get_vector<std::uint64_t>(index.n * index.codes.words);
    index.data = DatasetMatrix(index.n, index.padded_d, r.get_vector<float>(index.n * index.padded_d));
    if (!r.at_eof()) throw FormatError("index: trailing bytes");
    return index;
}

inline CrispIndex load_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open index file: " + path.string());
    return load_index(in);
}

} // namespace crisp
