#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lp {

enum class ErrorKind {
    DimensionMismatch,
    DuplicateVisit,
    MissingLatent,
    EmptyBatch,
    InsufficientData,
    DivergenceDetected,
    NonPSDCovariance,
    InvalidCount,
    ShapeMismatch,
    NonFiniteLoss,
    ZeroNormVector,
    NotEnoughNeighbors,
    EmptyNeighborSet,
    NonPositiveHorizon,
    InvalidGrade,
    InvalidProbability,
    EmptyFollowups,
    DegenerateLabels,
    SingleClass,
    TooFewRedraws,
    MetricUndefined,
    LengthMismatch,
    DegenerateMarginals,
    TooFewRaters,
    GapOutOfRange,
    InvalidFraction,
    InvalidArgument,
    FormatError,
    IoError,
};

std::string_view error_kind_name(ErrorKind kind) noexcept;

// Every domain failure in the library is reported as an lp::Error; the kind is
// what the CLI prints and what tests match on.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) fail(kind, message);
}

} // namespace lp
