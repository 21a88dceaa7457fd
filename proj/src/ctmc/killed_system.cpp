#include "killed_system.hpp"

#include <deque>

namespace quasieq::ctmc::detail {

KilledSystem::KilledSystem(const SparseGenerator& q, const std::vector<bool>& stop,
                           ErrorKind unreachable_kind, const std::string& context)
    : index_(q.size(), -1), context_(context) {
  const std::size_t n = q.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!stop[i]) {
      index_[i] = static_cast<long>(free_.size());
      free_.push_back(i);
    }
  }
  if (free_.empty()) return;

  // Every free state must be able to reach a stopping state (or the
  // cemetery), otherwise the reduced system is singular.
  std::vector<std::vector<std::size_t>> incoming(n);
  std::vector<bool> reaches(n, false);
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < n; ++i) {
    const StateIndex k = StateIndex::from_pos(i);
    for (const Edge& e : q.row(k)) {
      if (e.to.is_cemetery()) {
        if (!reaches[i]) {
          reaches[i] = true;
          queue.push_back(i);
        }
      } else {
        incoming[e.to.pos()].push_back(i);
      }
    }
    if (stop[i] && !reaches[i]) {
      reaches[i] = true;
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    const std::size_t k = queue.front();
    queue.pop_front();
    for (std::size_t j : incoming[k]) {
      if (!reaches[j]) {
        reaches[j] = true;
        queue.push_back(j);
      }
    }
  }
  for (std::size_t i : free_) {
    if (!reaches[i]) {
      fail(unreachable_kind, context + ": state " + std::to_string(i + 1) +
                                 " never reaches the stopping set (infinite hitting time)");
    }
  }

  std::vector<MMatrixLU::Row> rows(free_.size());
  for (std::size_t r = 0; r < free_.size(); ++r) {
    const StateIndex k = StateIndex::from_pos(free_[r]);
    // Rate into stopping states and the cemetery is summed directly, so the
    // slack is exact rather than a difference.
    double out = 0.0;
    for (const Edge& e : q.row(k)) {
      const long c = e.to.is_cemetery() ? -1 : index_[e.to.pos()];
      if (c >= 0) {
        rows[r].rates.emplace_back(static_cast<std::size_t>(c), e.rate);
      } else {
        out += e.rate;
      }
    }
    rows[r].slack = out;
  }
  lu_.emplace(rows, context);
}

Eigen::VectorXd KilledSystem::solve(const Eigen::VectorXd& rhs) const {
  if (free_.empty()) return Eigen::VectorXd();
  return lu_->solve(rhs);
}

Eigen::VectorXd KilledSystem::solve_transposed(const Eigen::VectorXd& rhs) const {
  if (free_.empty()) return Eigen::VectorXd();
  return lu_->solve_transposed(rhs);
}

}  // namespace quasieq::ctmc::detail
