#include "dtdss/error.hpp"

namespace dtdss {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidInput: return "invalid-input";
        case ErrorCode::SaturationOverflow: return "saturation-overflow";
        case ErrorCode::InsufficientHistory: return "insufficient-history";
        case ErrorCode::Ordering: return "ordering";
        case ErrorCode::NoStep: return "no-step";
        case ErrorCode::InsufficientSignal: return "insufficient-signal";
        case ErrorCode::InsufficientSettling: return "insufficient-settling";
        case ErrorCode::NoSignal: return "no-signal";
        case ErrorCode::UndefinedMetric: return "undefined-metric";
        case ErrorCode::Range: return "range";
        case ErrorCode::Integration: return "integration";
        case ErrorCode::Alignment: return "alignment";
        case ErrorCode::Io: return "io";
        case ErrorCode::Usage: return "usage";
    }
    return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void raise(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace dtdss
