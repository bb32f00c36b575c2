#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dfit {

/// Base error for invalid arguments and violated preconditions.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data. `offset` is the byte offset (binary formats) or the
/// character offset (text formats) where parsing stopped.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace dfit
