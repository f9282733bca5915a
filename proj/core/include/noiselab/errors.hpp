#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace noiselab {

/// A statistic was requested on data for which it is undefined
/// (zero variance, degenerate spread, too few points).
class UndefinedStatistic : public std::runtime_error {
public:
    explicit UndefinedStatistic(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed on-disk data. Carries the byte offset at which parsing failed.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::size_t byte_offset)
        : std::runtime_error(what + " (byte offset " + std::to_string(byte_offset) + ")"),
          offset_(byte_offset) {}

    std::size_t byte_offset() const { return offset_; }

private:
    std::size_t offset_;
};

/// Non-finite value where the computation requires a finite one.
class NumericFailure : public std::runtime_error {
public:
    explicit NumericFailure(const std::string& what) : std::runtime_error(what) {}
};

} // namespace noiselab
