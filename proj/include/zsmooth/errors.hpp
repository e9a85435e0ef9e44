#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace zsmooth {

enum class ErrorCode {
  DomainError,
  InvalidArgument,
  CartesianSampleCount,
  AntitheticOddCount,
  AntitheticAsymmetric,
  NonFiniteOutput,
  CovariateNeedsTwoSamples,
  MatrixScaleNotAllowed,
  SingularScaleMatrix,
  EvenKUnsupported,
  KExceedsS,
  VectorOutputUnsupported,
  UnsupportedFixturePair,
};

std::string_view to_string(ErrorCode code);

// All library failures derive from this; `code()` identifies the contract
// that was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised when the black box returns NaN or +-inf. `sample_index()` is the
// row of the plan, or the plan size when the offending call was f(x) itself.
class NonFiniteOutputError : public Error {
 public:
  NonFiniteOutputError(std::size_t sample_index, const std::string& message)
      : Error(ErrorCode::NonFiniteOutput, message), sample_index_(sample_index) {}

  std::size_t sample_index() const noexcept { return sample_index_; }

 private:
  std::size_t sample_index_;
};

}  // namespace zsmooth
