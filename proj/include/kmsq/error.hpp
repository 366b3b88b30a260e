#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kmsq {

enum class ErrorCode {
  NonSymmetric,
  NonPositiveSpectrum,
  FunctionSingularAtSpectrum,
  DimensionMismatch,
  TimeOutOfRange,
  UnorderedWord,
  EndpointSingularity,
  SpectrumNotAboveOne,
  NonRealVector,
  QuadratureModelUnsupported,
  EmptyEnsemble,
  DegenerateConditioning,
  GaplessDispersion,
  NonPSDCoupling,
  InvalidArgument,
  ConfigParse,
  MatrixParse,
};

std::string_view to_string(ErrorCode code);

/// Library error. The message names the violated invariant; code() is stable
/// and is what callers (and the CLI exit-status logic) branch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace kmsq
