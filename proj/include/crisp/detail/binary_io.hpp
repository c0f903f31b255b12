#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "crisp/errors.hpp"

namespace crisp::detail {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian; big-endian hosts need byte swapping");

class BinaryWriter {
public:
    explicit BinaryWriter(std::ostream& out) : out_(out) {}

    template <typename T>
        requires std::is_trivially_copyable_v<T>
    void put(const T& value) {
        out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
        check();
    }

    template <typename T>
        requires std::is_trivially_copyable_v<T>
    void put_span(std::span<const T> values) {
        if (values.empty()) return;
        out_.write(reinterpret_cast<const char*>(values.data()),
                   static_cast<std::streamsize>(values.size_bytes()));
        check();
    }

    void put_bytes(const char* bytes, std::size_t count) {
        out_.write(bytes, static_cast<std::streamsize>(count));
        check();
    }

private:
    void check() {
        if (!out_) throw IoError("write failed");
    }

    std::ostream& out_;
};

class BinaryReader {
public:
    BinaryReader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}

    template <typename T>
        requires std::is_trivially_copyable_v<T>
    T get() {
        T value{};
        read_into(reinterpret_cast<char*>(&value), sizeof(T));
        return value;
    }

    template <typename T>
        requires std::is_trivially_copyable_v<T>
    std::vector<T> get_vector(std::size_t count) {
        std::vector<T> values(count);
        if (count > 0) read_into(reinterpret_cast<char*>(values.data()), count * sizeof(T));
        return values;
    }

    void get_bytes(char* bytes, std::size_t count) { read_into(bytes, count); }

    bool at_eof() { return in_.peek() == std::char_traits<char>::eof(); }

private:
    void read_into(char* dst, std::size_t count) {
        in_.read(dst, static_cast<std::streamsize>(count));
        if (static_cast<std::size_t>(in_.gcount()) != count) {
            throw FormatError(what_ + ": truncated input");
        }
    }

    std::istream& in_;
    std::string what_;
};

} // namespace crisp::detail
