#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qnetdet {

enum class ErrorCode {
    EmptyInput,
    NegativeEntry,
    ZeroSum,
    LengthMismatch,
    KOutOfRange,
    EmptyEnsemble,
    NotHermitian,
    DimensionMismatch,
    DimensionTooSmall,
    LengthMismatchAfterPadding,
    InvalidPovm,
    ShapeMismatch,
    SchemaError,
    DanglingEndpoint,
    MixedDimensions,
    MissingTerminal,
    NotSeriesParallel,
    DisconnectedTerminals,
    SingularNormalizer,
    RejectionBudgetExceeded,
    DimensionNotTwo,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NegativeEntry: return "NegativeEntry";
    case ErrorCode::ZeroSum: return "ZeroSum";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::KOutOfRange: return "KOutOfRange";
    case ErrorCode::EmptyEnsemble: return "EmptyEnsemble";
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorCode::LengthMismatchAfterPadding: return "LengthMismatchAfterPadding";
    case ErrorCode::InvalidPovm: return "InvalidPovm";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::DanglingEndpoint: return "DanglingEndpoint";
    case ErrorCode::MixedDimensions: return "MixedDimensions";
    case ErrorCode::MissingTerminal: return "MissingTerminal";
    case ErrorCode::NotSeriesParallel: return "NotSeriesParallel";
    case ErrorCode::DisconnectedTerminals: return "DisconnectedTerminals";
    case ErrorCode::SingularNormalizer: return "SingularNormalizer";
    case ErrorCode::RejectionBudgetExceeded: return "RejectionBudgetExceeded";
    case ErrorCode::DimensionNotTwo: return "DimensionNotTwo";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (notably the CLI) can map it to a stable exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace qnetdet
