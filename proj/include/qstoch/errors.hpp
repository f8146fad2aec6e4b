#pragma once

#include <stdexcept>
#include <string>

namespace qstoch {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error { using Error::Error; };
struct SingularResolvent : Error { using Error::Error; };
struct NormTooLarge : Error { using Error::Error; };
struct NotUnitary : Error { using Error::Error; };
struct NotSelfAdjoint : Error { using Error::Error; };
struct UnitarityViolated : Error { using Error::Error; };
struct SeriesDivergence : Error { using Error::Error; };
struct OdeNotConverged : Error { using Error::Error; };
struct GridTooCoarse : Error { using Error::Error; };
struct StepTooLarge : Error { using Error::Error; };
struct NonCommuting : Error { using Error::Error; };
struct SingularFactor : Error { using Error::Error; };
struct InvalidGauge : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };

} // namespace qstoch
