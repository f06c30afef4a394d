#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rpr {

enum class ErrorKind {
    Parse,
    Validation,
    ZeroLengthLeg,
    Numerical,
};

/// Fatal failure. `field()` names the offending configuration key when one applies.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, std::string field = {})
        : std::runtime_error(message), kind_(kind), field_(std::move(field)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& field() const noexcept { return field_; }

private:
    ErrorKind kind_;
    std::string field_;
};

// Non-fatal conditions reported alongside results.
enum class DiagnosticKind {
    NonConvergence,
    SingularInput,
    ResolutionWarning,
    LinkBreak,
    ProbeFailure,
    VerificationFailure,
    MissingCurve,
    StepFailure,
};

struct Diagnostic {
    DiagnosticKind kind;
    std::string message;
};

using Diagnostics = std::vector<Diagnostic>;

const char* to_string(DiagnosticKind kind);

}  // namespace rpr
