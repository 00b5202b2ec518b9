#include "latentprog/error.hpp"

namespace lp {

std::string_view error_kind_name(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DuplicateVisit: return "DuplicateVisit";
    case ErrorKind::MissingLatent: return "MissingLatent";
    case ErrorKind::EmptyBatch: return "EmptyBatch";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::DivergenceDetected: return "DivergenceDetected";
    case ErrorKind::NonPSDCovariance: return "NonPSDCovariance";
    case ErrorKind::InvalidCount: return "InvalidCount";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::ZeroNormVector: return "ZeroNormVector";
    case ErrorKind::NotEnoughNeighbors: return "NotEnoughNeighbors";
    case ErrorKind::EmptyNeighborSet: return "EmptyNeighborSet";
    case ErrorKind::NonPositiveHorizon: return "NonPositiveHorizon";
    case ErrorKind::InvalidGrade: return "InvalidGrade";
    case ErrorKind::InvalidProbability: return "InvalidProbability";
    case ErrorKind::EmptyFollowups: return "EmptyFollowups";
    case ErrorKind::DegenerateLabels: return "DegenerateLabels";
    case ErrorKind::SingleClass: return "SingleClass";
    case ErrorKind::TooFewRedraws: return "TooFewRedraws";
    case ErrorKind::MetricUndefined: return "MetricUndefined";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::DegenerateMarginals: return "DegenerateMarginals";
    case ErrorKind::TooFewRaters: return "TooFewRaters";
    case ErrorKind::GapOutOfRange: return "GapOutOfRange";
    case ErrorKind::InvalidFraction: return "InvalidFraction";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

} // namespace lp
