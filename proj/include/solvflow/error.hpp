#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace solvflow {

enum class ErrorKind {
    InvalidArgument,
    NonAntisymmetric,
    JacobiViolated,
    NonUnimodular,
    NotASoliton,
    PositiveLambda0,
    ZeroTrace,
    NegativeSpectrum,
    InconsistentSoliton,
    UnknownPreset,
    ScalarFlat,
    DegenerateEigenspace,
    NonNegativeLambda,
    LambdaOutOfRange,
    StepSizeUnderflow,
    NotCaptured,
    CaptureFailed,
    OutsideAdmissibleRange,
    LeftK,
    NonNegativeZ,
    NonPositiveW,
    Ambiguous,
    WindowTooShort,
    PropertyViolated,
    ParseError,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the ErrorKind tags so
/// callers (and the CLI exit-code logic) can branch on it.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace solvflow
