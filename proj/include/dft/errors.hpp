#pragma once

#include <stdexcept>
#include <string>

namespace dft {

/// Base class for all toolkit errors. Exit-code mapping in the CLI keys off
/// the subtype: validation errors -> 2, numerical consistency errors -> 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : Error {
    using Error::Error;
};

/// Two independent criteria that must agree by theory disagreed at the
/// configured rank threshold. Never silently resolved.
struct ConsistencyFailure : Error {
    using Error::Error;
};

// geometry
struct NonUnitSpeedError : ValidationError { using ValidationError::ValidationError; };
struct StepTooLargeError : Error { using Error::Error; };
struct TrappedError : Error { using Error::Error; };
struct OutOfRangeError : ValidationError { using ValidationError::ValidationError; };

// fibration
struct ChartDomainError : Error { using Error::Error; };
struct RankDeficientError : Error { using Error::Error; };
struct NotIncidentError : ValidationError { using ValidationError::ValidationError; };
struct DependentLambdaError : ValidationError { using ValidationError::ValidationError; };
struct OrthonormalizationFailure : Error { using Error::Error; };

// transform / normal
struct UnsupportedSpecError : ValidationError { using ValidationError::ValidationError; };
struct PaddingTooSmallError : ValidationError { using ValidationError::ValidationError; };
struct ConjugateContaminationError : Error { using Error::Error; };
struct NoArtifactFound : Error { using Error::Error; };

// calculus
struct DimensionError : ValidationError { using ValidationError::ValidationError; };

}  // namespace dft
