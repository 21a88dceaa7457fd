#include "linalg.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>

#include <cmath>
#include <functional>
#include <queue>

#include "quasieq/error.hpp"

namespace quasieq::ctmc::detail {

MMatrixLU::MMatrixLU(const std::vector<Row>& rows, std::string context)
    : n_(rows.size()), context_(std::move(context)) {
  if (n_ == 0) return;

  // Fill-reducing order from the symmetrized pattern.
  {
    const auto dim = static_cast<Eigen::Index>(n_);
    std::vector<Eigen::Triplet<double>> pattern;
    for (std::size_t i = 0; i < n_; ++i) {
      pattern.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0);
      for (const auto& [j, rate] : rows[i].rates) {
        pattern.emplace_back(static_cast<int>(i), static_cast<int>(j), 1.0);
      }
    }
    Eigen::SparseMatrix<double> a(dim, dim);
    a.setFromTriplets(pattern.begin(), pattern.end());
    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm;
    Eigen::AMDOrdering<int> amd;
    amd(a, perm);
    old_of_new_.resize(n_);
    new_of_old_.resize(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      old_of_new_[k] = static_cast<std::size_t>(perm.indices()[static_cast<Eigen::Index>(k)]);
      new_of_old_[old_of_new_[k]] = k;
    }
  }

  lower_.resize(n_);
  upper_.resize(n_);
  pivot_.resize(n_);
  std::vector<double> slack(n_);
  std::vector<double> work(n_, 0.0);
  std::vector<char> present(n_, 0);
  std::vector<std::size_t> touched;
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> below;

  for (std::size_t i = 0; i < n_; ++i) {
    const Row& row = rows[old_of_new_[i]];
    double s = row.slack;
    touched.clear();
    auto add = [&](std::size_t j, double v) {
      if (!present[j]) {
        present[j] = 1;
        touched.push_back(j);
        if (j < i) below.push(j);
      }
      work[j] += v;
    };
    for (const auto& [old_j, rate] : row.rates) {
      if (rate < 0.0 || !std::isfinite(rate)) {
        fail(ErrorKind::kNumericalFailure, context_ + ": negative or non-finite rate");
      }
      add(new_of_old_[old_j], rate);
    }
    while (!below.empty()) {
      const std::size_t k = below.top();
      below.pop();
      const double l = work[k] / pivot_[k];
      lower_[i].push_back({k, l});
      for (const Entry& e : upper_[k]) add(e.col, l * e.mag);
      s += l * slack[k];
    }
    double pivot = s;
    for (std::size_t j : touched) {
      if (j > i) {
        upper_[i].push_back({j, work[j]});
        pivot += work[j];
      }
      work[j] = 0.0;
      present[j] = 0;
    }
    if (!(pivot > 0.0) || !std::isfinite(pivot)) {
      fail(ErrorKind::kNumericalFailure, context_ + ": zero pivot in killed system");
    }
    pivot_[i] = pivot;
    slack[i] = s;
  }
}

Eigen::VectorXd MMatrixLU::solve(const Eigen::VectorXd& b) const {
  std::vector<double> y(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    double v = b(static_cast<Eigen::Index>(old_of_new_[i]));
    for (const Entry& e : lower_[i]) v += e.mag * y[e.col];
    y[i] = v;
  }
  for (std::size_t i = n_; i-- > 0;) {
    double v = y[i];
    for (const Entry& e : upper_[i]) v += e.mag * y[e.col];
    y[i] = v / pivot_[i];
  }
  Eigen::VectorXd x(static_cast<Eigen::Index>(n_));
  for (std::size_t i = 0; i < n_; ++i) x(static_cast<Eigen::Index>(old_of_new_[i])) = y[i];
  if (!x.allFinite()) fail(ErrorKind::kNumericalFailure, context_ + ": non-finite solution");
  return x;
}

Eigen::VectorXd MMatrixLU::solve_transposed(const Eigen::VectorXd& b) const {
  // A^T = U^T L^T: forward sweep with U^T, then backward sweep with L^T,
  // both written as scatters along the stored rows.
  std::vector<double> z(n_);
  for (std::size_t i = 0; i < n_; ++i) z[i] = b(static_cast<Eigen::Index>(old_of_new_[i]));
  for (std::size_t k = 0; k < n_; ++k) {
    z[k] /= pivot_[k];
    for (const Entry& e : upper_[k]) z[e.col] += e.mag * z[k];
  }
  for (std::size_t i = n_; i-- > 0;) {
    for (const Entry& e : lower_[i]) z[e.col] += e.mag * z[i];
  }
  Eigen::VectorXd x(static_cast<Eigen::Index>(n_));
  for (std::size_t i = 0; i < n_; ++i) x(static_cast<Eigen::Index>(old_of_new_[i])) = z[i];
  if (!x.allFinite()) fail(ErrorKind::kNumericalFailure, context_ + ": non-finite solution");
  return x;
}

}  // namespace quasieq::ctmc::detail
