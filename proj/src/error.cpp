#include "kmsq/error.hpp"

namespace kmsq {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonSymmetric: return "NonSymmetric";
    case ErrorCode::NonPositiveSpectrum: return "NonPositiveSpectrum";
    case ErrorCode::FunctionSingularAtSpectrum: return "FunctionSingularAtSpectrum";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TimeOutOfRange: return "TimeOutOfRange";
    case ErrorCode::UnorderedWord: return "UnorderedWord";
    case ErrorCode::EndpointSingularity: return "EndpointSingularity";
    case ErrorCode::SpectrumNotAboveOne: return "SpectrumNotAboveOne";
    case ErrorCode::NonRealVector: return "NonRealVector";
    case ErrorCode::QuadratureModelUnsupported: return "QuadratureModelUnsupported";
    case ErrorCode::EmptyEnsemble: return "EmptyEnsemble";
    case ErrorCode::DegenerateConditioning: return "DegenerateConditioning";
    case ErrorCode::GaplessDispersion: return "GaplessDispersion";
    case ErrorCode::NonPSDCoupling: return "NonPSDCoupling";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigParse: return "ConfigParse";
    case ErrorCode::MatrixParse: return "MatrixParse";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace kmsq
