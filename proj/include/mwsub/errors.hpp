#pragma once

#include <stdexcept>
#include <string>

namespace mwsub {

/// Machine-readable error codes surfaced through the CLI's JSON reports.
/// The string forms returned by code_name() are stable across versions.
enum class ErrorCode {
    DuplicateCell,
    MissingField,
    NonFiniteValue,
    EmptyPanel,
    ParseError,
    InvalidRate,
    EmptySketch,
    DimensionMismatch,
    SingularDesign,
    SingularHessian,
    NonConvergence,
    TargetBelowIrreducible,
    DegeneratePreliminary,
    EmptyReport,
    UsageError,
};

const char* code_name(ErrorCode code);

/// True for failures of the numerics (exit code 2 in the CLI), false for
/// bad input or bad flags (exit code 1).
bool is_numerical_failure(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    const char* code_str() const noexcept { return code_name(code_); }

private:
    ErrorCode code_;
};

}  // namespace mwsub
