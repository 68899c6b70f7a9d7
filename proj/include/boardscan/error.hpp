#pragma once

#include <stdexcept>
#include <string>

namespace boardscan {

enum class ErrorKind {
    InvalidArgument,
    Geometry,
    DetectionFailure,
    Classification,
    Parse,
    Io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Base exception for every failure raised by the library. The kind maps
/// directly onto the CLI exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Board localization gave up. `iteration` is the refinement pass that failed.
class DetectionError : public Error {
public:
    DetectionError(int iteration, const std::string& what)
        : Error(ErrorKind::DetectionFailure,
                "detection failed at iteration " + std::to_string(iteration) + ": " + what),
          iteration_(iteration) {}

    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

/// A classifier backend produced unusable output. `square` is -1 when the
/// failure is not tied to one square.
class ClassificationError : public Error {
public:
    ClassificationError(int square, const std::string& what)
        : Error(ErrorKind::Classification,
                square >= 0 ? "square " + std::to_string(square) + ": " + what : what),
          square_(square) {}

    int square() const noexcept { return square_; }

private:
    int square_;
};

/// Text input could not be parsed. `offset` is a character offset for FEN
/// strings and a 1-based line number for line-oriented files.
class ParseError : public Error {
public:
    ParseError(std::size_t offset, const std::string& what)
        : Error(ErrorKind::Parse, what + " (at " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

} // namespace boardscan
