#ifndef BBALIGN_ERRORS_HPP
#define BBALIGN_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bbalign {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file. `offset` is a 1-based line number for text formats
// and a byte offset for binary payloads.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class UnsupportedFormat : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class EmptyCloud : public Error {
public:
    EmptyCloud() : Error("point cloud is empty") {}
};

// A structural invariant of a constructed object does not hold.
class InvariantViolation : public Error {
public:
    using Error::Error;
};

// Cholesky pivot collapsed: the positive-definite operand is numerically singular.
class SingularMatrix : public Error {
public:
    using Error::Error;
};

}  // namespace bbalign

#endif  // BBALIGN_ERRORS_HPP
