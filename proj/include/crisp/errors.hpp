#pragma once

#include <stdexcept>
#include <string>

namespace crisp {

// Bad caller input: dimension mismatches, k > N, out-of-range ratios.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// File could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File contents violate the expected layout (mixed dims, bad magic, truncation).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace crisp
