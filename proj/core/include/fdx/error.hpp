#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fdx {

enum class ErrorCode {
    // parameter validation
    BelowCritical,
    NotFast,
    WeakAbsorption,
    SigmaTooSmall,
    BadDimension,
    NonFinite,
    // model / phase
    DegenerateDimension,
    NonpositiveProfile,
    ZeroX,
    // profile
    BadRange,
    WindowTooShort,
    WrongTerminal,
    // classifier
    BadBracket,
    // pde
    BadConfig,
    NewtonDivergence,
    MinDtUnderflow,
    ProfileRangeExceeded,
    PreconditionViolated,
    // io
    Io,
    Config,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace fdx
