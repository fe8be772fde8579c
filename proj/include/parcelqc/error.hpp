#pragma once

#include <stdexcept>
#include <string>

namespace parcelqc {

/// Library-level failure (bad input file, geometry mismatch, degenerate data).
/// The CLI maps these to exit code 2.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace parcelqc
