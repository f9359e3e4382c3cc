#include "solvflow/error.hpp"

namespace solvflow {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::NonAntisymmetric: return "NonAntisymmetric";
        case ErrorKind::JacobiViolated: return "JacobiViolated";
        case ErrorKind::NonUnimodular: return "NonUnimodular";
        case ErrorKind::NotASoliton: return "NotASoliton";
        case ErrorKind::PositiveLambda0: return "PositiveLambda0";
        case ErrorKind::ZeroTrace: return "ZeroTrace";
        case ErrorKind::NegativeSpectrum: return "NegativeSpectrum";
        case ErrorKind::InconsistentSoliton: return "InconsistentSoliton";
        case ErrorKind::UnknownPreset: return "UnknownPreset";
        case ErrorKind::ScalarFlat: return "ScalarFlat";
        case ErrorKind::DegenerateEigenspace: return "DegenerateEigenspace";
        case ErrorKind::NonNegativeLambda: return "NonNegativeLambda";
        case ErrorKind::LambdaOutOfRange: return "LambdaOutOfRange";
        case ErrorKind::StepSizeUnderflow: return "StepSizeUnderflow";
        case ErrorKind::NotCaptured: return "NotCaptured";
        case ErrorKind::CaptureFailed: return "CaptureFailed";
        case ErrorKind::OutsideAdmissibleRange: return "OutsideAdmissibleRange";
        case ErrorKind::LeftK: return "LeftK";
        case ErrorKind::NonNegativeZ: return "NonNegativeZ";
        case ErrorKind::NonPositiveW: return "NonPositiveW";
        case ErrorKind::Ambiguous: return "Ambiguous";
        case ErrorKind::WindowTooShort: return "WindowTooShort";
        case ErrorKind::PropertyViolated: return "PropertyViolated";
        case ErrorKind::ParseError: return "ParseError";
    }
    return "Unknown";
}

}  // namespace solvflow
