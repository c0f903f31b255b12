#pragma once

// Readers and writers for the .fvecs / .ivecs interchange formats used by the
// ANN benchmark corpora. Each record is [int32 dim][dim x value], little-endian.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "crisp/dataset.hpp"
#include "crisp/detail/binary_io.hpp"
#include "crisp/errors.hpp"

namespace crisp {

namespace detail {

template <typename T>
struct VecsFile {
    std::size_t rows = 0;
    std::size_t dim = 0;
    std::vector<T> values;
};

template <typename T>
VecsFile<T> read_vecs(const std::filesystem::path& path, const char* kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(std::string("cannot open ") + kind + " file: " + path.string());

    VecsFile<T> file;
    for (std::size_t record = 0;; ++record) {
        std::int32_t dim = 0;
        in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
        if (in.gcount() == 0 && in.eof()) break;
        if (in.gcount() != sizeof(dim)) {
            throw IoError(path.string() + ": truncated header at record " + std::to_string(record));
        }
        if (dim < 0) {
            throw FormatError(path.string() + ": negative dimension at record " +
                              std::to_string(record));
        }
        if (record == 0) {
            file.dim = static_cast<std::size_t>(dim);
        } else if (static_cast<std::size_t>(dim) != file.dim) {
            throw FormatError(path.string() + ": dimension " + std::to_string(dim) +
                              " at record " + std::to_string(record) + " differs from " +
                              std::to_string(file.dim));
        }
        const std::size_t old = file.values.size();
        file.values.resize(old + file.dim);
        const auto bytes = static_cast<std::streamsize>(file.dim * sizeof(T));
        in.read(reinterpret_cast<char*>(file.values.data() + old), bytes);
        if (in.gcount() != bytes) {
            throw IoError(path.string() + ": truncated payload at record " + std::to_string(record));
        }
        ++file.rows;
    }
    return file;
}

template <typename T>
void write_vecs(const std::filesystem::path& path, std::size_t rows, std::size_t dim,
                const std::vector<T>& values) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    BinaryWriter writer(out);
    const auto header = static_cast<std::int32_t>(dim);
    for (std::size_t i = 0; i < rows; ++i) {
        writer.put(header);
        writer.put_span(std::span<const T>(values.data() + i * dim, dim));
    }
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace detail

inline DatasetMatrix load_fvecs(const std::filesystem::path& path) {
    auto file = detail::read_vecs<float>(path, "fvecs");
    for (std::size_t i = 0; i < file.values.size(); ++i) {
        if (!std::isfinite(file.values[i])) {
            throw FormatError(path.string() + ": non-finite value in record " +
                              std::to_string(file.dim == 0 ? 0 : i / file.dim));
        }
    }
    if (file.rows == 0) return {};
    return DatasetMatrix(file.rows, file.dim, std::move(file.values));
}

inline void save_fvecs(const DatasetMatrix& data, const std::filesystem::path& path) {
    detail::write_vecs(path, data.n, data.d, data.data);
}

inline GroundTruth load_ivecs(const std::filesystem::path& path) {
    auto file = detail::read_vecs<std::int32_t>(path, "ivecs");
    GroundTruth gt;
    gt.q = file.rows;
    gt.k = file.rows == 0 ? 0 : file.dim;
    gt.ids = std::move(file.values);
    return gt;
}

inline void save_ivecs(const GroundTruth& gt, const std::filesystem::path& path) {
    if (gt.ids.size() != gt.q * gt.k) throw ArgumentError("save_ivecs: ids length != q*k");
    detail::write_vecs(path, gt.q, gt.k, gt.ids);
}

} // namespace crisp
