#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hqfnn {

/// Thrown when an operation is called on the wrong circuit flavour
/// (single-qubit op on a multi-qubit circuit or vice versa).
struct WrongCircuitKind final : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a cached forward pass is required but missing.
struct StateError final : std::logic_error {
    using std::logic_error::logic_error;
};

/// Malformed input file (bad magic, ragged CSV row, truncation). Carries the
/// byte offset (binary formats) or line number (text formats) of the defect.
struct ParseError final : std::runtime_error {
    ParseError(const std::string& msg, std::size_t where)
        : std::runtime_error(msg + " (at offset " + std::to_string(where) + ")"),
          offset(where) {}
    std::size_t offset;
};

/// Checkpoint written by an unknown format version.
struct UnsupportedVersion final : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Structurally valid inputs that disagree with each other (e.g. image and
/// label files of different lengths).
struct ConsistencyError final : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite value encountered during training; carries the epoch index.
struct NumericError final : std::runtime_error {
    NumericError(const std::string& msg, int at_epoch)
        : std::runtime_error(msg + " (epoch " + std::to_string(at_epoch) + ")"),
          epoch(at_epoch) {}
    int epoch;
};

}  // namespace hqfnn
