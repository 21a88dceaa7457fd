#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace quasieq::ctmc::detail {

/// LU factorization of a nonsingular M-matrix given as a killed generator:
/// row i has diagonal slack_i + sum_j rate_ij and off-diagonal entries
/// -rate_ij, with all rates and slacks nonnegative.
///
/// Elimination is done in the Grassmann-Taksar-Heyman style: pivots are
/// rebuilt from the row slack and the remaining off-diagonal mass instead of
/// by subtraction, and the triangular solves only add nonnegative terms.
/// For a nonnegative right-hand side every component of the solution is then
/// accurate to a small multiple of machine precision relative to itself,
/// however small it is. Rows are reordered by approximate minimum degree to
/// limit fill.
class MMatrixLU {
 public:
  struct Row {
    std::vector<std::pair<std::size_t, double>> rates;  // (column, rate > 0)
    double slack = 0.0;
  };

  MMatrixLU(const std::vector<Row>& rows, std::string context);

  std::size_t size() const { return n_; }
  /// Solves A x = b.
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  /// Solves A^T x = b.
  Eigen::VectorXd solve_transposed(const Eigen::VectorXd& b) const;

 private:
  struct Entry {
    std::size_t col;
    double mag;  // magnitude of a nonpositive factor entry
  };

  std::size_t n_ = 0;
  std::vector<std::size_t> new_of_old_, old_of_new_;
  std::vector<std::vector<Entry>> lower_;  // unit lower factor, strictly lower part
  std::vector<std::vector<Entry>> upper_;  // strictly upper part
  std::vector<double> pivot_;
  std::string context_;
};

}  // namespace quasieq::ctmc::detail
