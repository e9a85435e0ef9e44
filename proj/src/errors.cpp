#include "zsmooth/errors.hpp"

namespace zsmooth {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DomainError: return "domain-error";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::CartesianSampleCount: return "cartesian-sample-count";
    case ErrorCode::AntitheticOddCount: return "antithetic-odd-count";
    case ErrorCode::AntitheticAsymmetric: return "antithetic-asymmetric";
    case ErrorCode::NonFiniteOutput: return "non-finite-output";
    case ErrorCode::CovariateNeedsTwoSamples: return "covariate-needs-two-samples";
    case ErrorCode::MatrixScaleNotAllowed: return "matrix-scale-not-allowed";
    case ErrorCode::SingularScaleMatrix: return "singular-scale-matrix";
    case ErrorCode::EvenKUnsupported: return "even-k-unsupported";
    case ErrorCode::KExceedsS: return "k-exceeds-s";
    case ErrorCode::VectorOutputUnsupported: return "vector-output-unsupported";
    case ErrorCode::UnsupportedFixturePair: return "unsupported-fixture-pair";
  }
  return "unknown";
}

}  // namespace zsmooth
