#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "linalg.hpp"
#include "quasieq/ctmc/generator.hpp"
#include "quasieq/error.hpp"

namespace quasieq::ctmc::detail {

/// The sub-generator -Q_FF on the states F that are not stopped, factorized
/// once. Right solves give first-step quantities; transposed solves give
/// occupation measures.
class KilledSystem {
 public:
  KilledSystem(const SparseGenerator& q, const std::vector<bool>& stop,
               ErrorKind unreachable_kind, const std::string& context);

  std::size_t free_count() const { return free_.size(); }
  const std::vector<std::size_t>& free_positions() const { return free_; }
  /// Row of a state in the reduced system, or -1 if it is stopped.
  long index_of(std::size_t pos) const { return index_[pos]; }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  Eigen::VectorXd solve_transposed(const Eigen::VectorXd& rhs) const;

 private:
  std::vector<std::size_t> free_;
  std::vector<long> index_;
  std::optional<MMatrixLU> lu_;
  std::string context_;
};

}  // namespace quasieq::ctmc::detail
