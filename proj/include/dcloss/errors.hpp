#pragma once

#include <stdexcept>
#include <string>

namespace dcloss {

enum class ErrorCode {
    EmptyNetlist,
    SyntaxError,
    DuplicateId,
    NonPositiveResistance,
    SelfLoopElement,
    UnknownElement,
    UnknownNode,
    BadGrid,
    InvalidCircuit,
    SingularSystem,
    DegenerateSubcircuit,
    ConstraintInconsistent,
    NoEquivalent,
    EditIllPosed,
    UnsupportedEdit,
};

const char* error_code_name(ErrorCode code);

/// All library failures are reported through this one exception type; the
/// code tells callers (and the CLI exit-code mapping) what went wrong.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

} // namespace dcloss
