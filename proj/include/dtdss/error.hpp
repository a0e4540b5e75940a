#pragma once

#include <stdexcept>
#include <string>

namespace dtdss {

enum class ErrorCode {
    InvalidInput,
    SaturationOverflow,
    InsufficientHistory,
    Ordering,
    NoStep,
    InsufficientSignal,
    InsufficientSettling,
    NoSignal,
    UndefinedMetric,
    Range,
    Integration,
    Alignment,
    Io,
    Usage,
};

const char* to_string(ErrorCode code) noexcept;

// Single exception type for the library; callers dispatch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& message);

}  // namespace dtdss
