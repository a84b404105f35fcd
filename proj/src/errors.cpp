#include "mwsub/errors.hpp"

namespace mwsub {

const char* code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::DuplicateCell: return "DuplicateCell";
        case ErrorCode::MissingField: return "MissingField";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::EmptyPanel: return "EmptyPanel";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::InvalidRate: return "InvalidRate";
        case ErrorCode::EmptySketch: return "EmptySketch";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::SingularDesign: return "SingularDesign";
        case ErrorCode::SingularHessian: return "SingularHessian";
        case ErrorCode::NonConvergence: return "NonConvergence";
        case ErrorCode::TargetBelowIrreducible: return "TargetBelowIrreducible";
        case ErrorCode::DegeneratePreliminary: return "DegeneratePreliminary";
        case ErrorCode::EmptyReport: return "EmptyReport";
        case ErrorCode::UsageError: return "UsageError";
    }
    return "UnknownError";
}

bool is_numerical_failure(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptySketch:
        case ErrorCode::DimensionMismatch:
        case ErrorCode::SingularDesign:
        case ErrorCode::SingularHessian:
        case ErrorCode::NonConvergence:
        case ErrorCode::TargetBelowIrreducible:
        case ErrorCode::DegeneratePreliminary:
            return true;
        default:
            return false;
    }
}

}  // namespace mwsub
