#pragma once

#include <stdexcept>
#include <string>

namespace jtr {

// Failure codes raised across the library. Each code belongs to one of three
// categories, which the command-line tool maps to process exit codes:
// Config -> 2, Data -> 3, Invariant -> 4.
enum class ErrorCode {
    ConfigError,
    KTooLarge,
    IoFailure,
    MagicMismatch,
    VersionUnsupported,
    TruncatedFile,
    NonFiniteValue,
    ParseError,
    DuplicatePair,
    UnknownId,
    DegenerateInput,
    DimensionMismatch,
    DocNotIndexed,
    NoTrainingData,
    EmptyQuerySet,
    StructureInvalid,
    ShapeMismatch,
};

enum class ErrorCategory { Config, Data, Invariant };

const char* to_string(ErrorCode code);
ErrorCategory category(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }
    ErrorCategory category() const noexcept { return jtr::category(code_); }

private:
    ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& message);

} // namespace jtr
