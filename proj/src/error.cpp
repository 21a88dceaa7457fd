#include "quasieq/error.hpp"

namespace quasieq {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid-input";
    case ErrorKind::kInvalidDistribution: return "invalid-distribution";
    case ErrorKind::kInvalidTruncation: return "invalid-truncation";
    case ErrorKind::kIrreducibility: return "irreducibility";
    case ErrorKind::kNumericalFailure: return "numerical-failure";
    case ErrorKind::kConditionB: return "condition-b-violation";
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kPrecondition: return "precondition";
    case ErrorKind::kBoundInapplicable: return "bound-inapplicable";
    case ErrorKind::kNoEquilibrium: return "no-equilibrium";
    case ErrorKind::kStability: return "stability";
    case ErrorKind::kTruncationTooLarge: return "truncation-too-large";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kEval: return "eval";
    case ErrorKind::kModel: return "model";
    case ErrorKind::kConfig: return "config";
  }
  return "unknown";
}

}  // namespace quasieq
