#include "jtr/error.hpp"

namespace jtr {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::KTooLarge: return "KTooLarge";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::MagicMismatch: return "MagicMismatch";
        case ErrorCode::VersionUnsupported: return "VersionUnsupported";
        case ErrorCode::TruncatedFile: return "TruncatedFile";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::DuplicatePair: return "DuplicatePair";
        case ErrorCode::UnknownId: return "UnknownId";
        case ErrorCode::DegenerateInput: return "DegenerateInput";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::DocNotIndexed: return "DocNotIndexed";
        case ErrorCode::NoTrainingData: return "NoTrainingData";
        case ErrorCode::EmptyQuerySet: return "EmptyQuerySet";
        case ErrorCode::StructureInvalid: return "StructureInvalid";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    }
    return "UnknownError";
}

ErrorCategory category(ErrorCode code) {
    switch (code) {
        case ErrorCode::ConfigError:
        case ErrorCode::KTooLarge:
            return ErrorCategory::Config;
        case ErrorCode::IoFailure:
        case ErrorCode::MagicMismatch:
        case ErrorCode::VersionUnsupported:
        case ErrorCode::TruncatedFile:
        case ErrorCode::NonFiniteValue:
        case ErrorCode::ParseError:
        case ErrorCode::DuplicatePair:
        case ErrorCode::UnknownId:
        case ErrorCode::DegenerateInput:
        case ErrorCode::DimensionMismatch:
        case ErrorCode::DocNotIndexed:
        case ErrorCode::NoTrainingData:
        case ErrorCode::EmptyQuerySet:
            return ErrorCategory::Data;
        case ErrorCode::StructureInvalid:
        case ErrorCode::ShapeMismatch:
            return ErrorCategory::Invariant;
    }
    return ErrorCategory::Invariant;
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void raise(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace jtr
