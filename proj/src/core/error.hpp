#pragma once

#include <stdexcept>
#include <string>

namespace wgs {

enum class ErrorCode {
    InvalidArgument = 1,
    DegenerateCell,
    ConditioningFailure,
    SingularSystem,
    ProbeTooLarge,
    Internal,
    Io,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline const char* to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::DegenerateCell: return "degenerate-cell";
    case ErrorCode::ConditioningFailure: return "conditioning-failure";
    case ErrorCode::SingularSystem: return "singular-system";
    case ErrorCode::ProbeTooLarge: return "probe-too-large";
    case ErrorCode::Internal: return "internal-error";
    case ErrorCode::Io: return "io-error";
    }
    return "unknown-error";
}

} // namespace wgs
