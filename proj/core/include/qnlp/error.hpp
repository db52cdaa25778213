#pragma once

#include <stdexcept>
#include <string>

namespace qnlp {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Tensor shape disagreement (dimension mismatch, bad rank, ...).
struct ShapeError : Error {
    using Error::Error;
};

/// Input outside an operation's mathematical domain (e.g. log of x <= 0).
struct DomainError : Error {
    using Error::Error;
};

/// Out-of-range index (token id, qubit index, class label, ...).
struct IndexError : Error {
    using Error::Error;
};

/// API contract violation (unbound slot, reused tape, bad mode, ...).
struct ContractError : Error {
    using Error::Error;
};

/// Filesystem or stream failure; message carries the path.
struct IoError : Error {
    using Error::Error;
};

/// Malformed file content; message carries the line or field.
struct FormatError : Error {
    using Error::Error;
};

/// Non-finite value encountered during training or evaluation.
struct NumericError : Error {
    using Error::Error;
};

}  // namespace qnlp
