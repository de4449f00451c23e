#pragma once

#include <stdexcept>
#include <string>

namespace cavitykit {

// Base for all domain failures so callers can catch one type at the CLI edge.
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : DomainError { using DomainError::DomainError; };
struct SingularKernel : DomainError { using DomainError::DomainError; };
struct DivergentIntegral : DomainError { using DomainError::DomainError; };
struct QuadratureNotConverged : DomainError { using DomainError::DomainError; };
struct SeriesNotConverged : DomainError { using DomainError::DomainError; };
struct NoThreshold : DomainError { using DomainError::DomainError; };
struct PerturbationInvalid : DomainError { using DomainError::DomainError; };
struct StepSizeUnderflow : DomainError { using DomainError::DomainError; };
struct NoOnset : DomainError { using DomainError::DomainError; };
struct NoPeak : DomainError { using DomainError::DomainError; };
struct FitDegenerate : DomainError { using DomainError::DomainError; };
struct NegativeRadicand : DomainError { using DomainError::DomainError; };
struct GridTooCoarse : DomainError { using DomainError::DomainError; };
struct MaxIterations : DomainError { using DomainError::DomainError; };
struct SingularJacobian : DomainError { using DomainError::DomainError; };
struct ModelEvaluationFailed : DomainError { using DomainError::DomainError; };

}  // namespace cavitykit
