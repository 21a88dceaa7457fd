#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace quasieq {

enum class ErrorKind {
  kInvalidInput,
  kInvalidDistribution,
  kInvalidTruncation,
  kIrreducibility,
  kNumericalFailure,
  kConditionB,
  kDomain,
  kDivergence,
  kPrecondition,
  kBoundInapplicable,
  kNoEquilibrium,
  kStability,
  kTruncationTooLarge,
  kParse,
  kEval,
  kModel,
  kConfig,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; the kind decides how the CLI maps
// a failure onto an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace quasieq
