#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace neumatc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Input outside the mathematical domain of an operation (non-finite values,
/// zero-norm denominators).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid argument combination (missing right-hand side, empty candidate set).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Pivot below tolerance during LU.
class SingularityError : public Error {
public:
    SingularityError(const std::string& what, std::size_t pivot)
        : Error(what), pivot_(pivot) {}
    std::size_t pivot() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

/// Cholesky met a non-positive leading minor.
class DefinitenessError : public Error {
public:
    DefinitenessError(const std::string& what, std::size_t minor)
        : Error(what), minor_(minor) {}
    std::size_t failing_minor() const noexcept { return minor_; }

private:
    std::size_t minor_;
};

/// Iterative method hit its cap or broke down.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double final_residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Malformed binary or text file. Carries the byte offset (or record index)
/// where parsing failed.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::uint64_t offset)
        : Error(what + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}
    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

class UnsupportedVersionError : public FormatError {
public:
    UnsupportedVersionError(unsigned found, unsigned expected, std::uint64_t offset)
        : FormatError("unsupported format version " + std::to_string(found) +
                          " (expected " + std::to_string(expected) + ")",
                      offset) {}
};

/// Training diverged (NaN/Inf loss).
class TrainingError : public Error {
public:
    using Error::Error;
};

/// Configuration inconsistent with the data it is applied to.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace neumatc
