#pragma once

#include <Eigen/SparseCore>

#include <cstddef>
#include <span>
#include <vector>

#include "quasieq/ctmc/types.hpp"

namespace quasieq::ctmc {

struct Transition {
  StateIndex from;
  StateIndex to;
  double rate = 0.0;
};

struct Edge {
  StateIndex to;
  double rate = 0.0;
};

/// Conservative rate matrix over {0} u C with an absorbing cemetery. Only
/// off-diagonal rates are stored; the diagonal is implied by q_ii = -q_i.
/// Immutable once built.
class SparseGenerator {
 public:
  SparseGenerator() = default;

  /// Duplicate (from, to) pairs are summed; zero rates are dropped. Throws
  /// kInvalidInput for negative or non-finite rates, self loops, indices
  /// beyond n, or rows leaving the cemetery.
  SparseGenerator(std::size_t n, std::span<const Transition> entries);

  std::size_t size() const { return n_; }

  /// Outgoing edges of `from`, sorted by target (cemetery first).
  std::span<const Edge> row(StateIndex from) const;

  double rate(StateIndex from, StateIndex to) const;
  double total_rate(StateIndex state) const { return total_[state.pos()]; }
  double exit_rate(StateIndex state) const { return rate(state, kCemetery); }
  double max_total_rate() const;
  bool has_cemetery_exits() const;

  std::vector<Transition> transitions() const;

  /// n x n generator restricted to C, diagonal included. Rows with cemetery
  /// exits sum to -q_i0.
  Eigen::SparseMatrix<double> matrix_on_c() const;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<Edge> edges_;
  std::vector<double> total_;
};

/// Generator of a chain living on a subset of C, relabelled 1..m.
/// `states[i]` is the original state at new index i+1.
struct RestrictedGenerator {
  SparseGenerator generator;
  std::vector<StateIndex> states;

  /// New index of an original state; cemetery if it is not a member.
  StateIndex local(StateIndex original) const;
  /// Lifts a law over the restricted index set back onto C (size n).
  ProbabilityVector lift(const ProbabilityVector& local_law, std::size_t n) const;
};

/// q^mu_ij = q_ij + q_i0 mu_j for i, j in C; all cemetery edges removed.
SparseGenerator build_returned_generator(const SparseGenerator& q,
                                         const ReturnDistribution& mu);

/// Chain restricted to `members` and sent to `s` whenever it would leave
/// them (cemetery included). Throws kInvalidTruncation if `members` is empty
/// or lacks s.
RestrictedGenerator accelerated_return_generator(
    const SparseGenerator& q, std::span<const StateIndex> members, StateIndex s);

/// Forward-reachable states from `start` (cemetery excluded).
std::vector<bool> reachable_from(const SparseGenerator& q, StateIndex start);

}  // namespace quasieq::ctmc
