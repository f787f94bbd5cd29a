#include "fracsing/error.hpp"

namespace fracsing {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::NonConvergence: return "NonConvergence";
        case ErrorCode::NonFiniteEvaluation: return "NonFiniteEvaluation";
        case ErrorCode::NonIntegrable: return "NonIntegrable";
        case ErrorCode::DiagonalEvaluation: return "DiagonalEvaluation";
        case ErrorCode::NonPositiveRadius: return "NonPositiveRadius";
        case ErrorCode::BadGeometry: return "BadGeometry";
        case ErrorCode::QuadratureFailure: return "QuadratureFailure";
        case ErrorCode::SingularMatrix: return "SingularMatrix";
        case ErrorCode::NonPositiveSolution: return "NonPositiveSolution";
        case ErrorCode::MaxIterExceeded: return "MaxIterExceeded";
        case ErrorCode::MonotonicityBroken: return "MonotonicityBroken";
        case ErrorCode::RegimeMismatch: return "RegimeMismatch";
        case ErrorCode::TuningFailed: return "TuningFailed";
        case ErrorCode::NonPositiveSample: return "NonPositiveSample";
        case ErrorCode::WindowTooSmall: return "WindowTooSmall";
        case ErrorCode::NonPositiveDefect: return "NonPositiveDefect";
    }
    return "Unknown";
}

}  // namespace fracsing
