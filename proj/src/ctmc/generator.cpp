#include "quasieq/ctmc/generator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "quasieq/error.hpp"

namespace quasieq::ctmc {

SparseGenerator::SparseGenerator(std::size_t n, std::span<const Transition> entries)
    : n_(n), total_(n, 0.0) {
  std::vector<Transition> sorted;
  sorted.reserve(entries.size());
  for (const Transition& t : entries) {
    if (t.from.is_cemetery()) {
      fail(ErrorKind::kInvalidInput, "transition out of the cemetery state");
    }
    if (t.from.id > n || t.to.id > n) {
      fail(ErrorKind::kInvalidInput,
           "transition " + std::to_string(t.from.id) + "->" +
               std::to_string(t.to.id) + " outside state space of size " +
               std::to_string(n));
    }
    if (t.from == t.to) {
      fail(ErrorKind::kInvalidInput,
           "self loop at state " + std::to_string(t.from.id));
    }
    if (!std::isfinite(t.rate) || t.rate < 0.0) {
      fail(ErrorKind::kInvalidInput,
           "rate " + std::to_string(t.rate) + " on " + std::to_string(t.from.id) +
               "->" + std::to_string(t.to.id) + " is not a finite nonnegative number");
    }
    if (t.rate > 0.0) sorted.push_back(t);
  }
  std::sort(sorted.begin(), sorted.end(), [](const Transition& a, const Transition& b) {
    return a.from != b.from ? a.from < b.from : a.to < b.to;
  });

  offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const Transition& t = sorted[i];
    if (!edges_.empty() && i > 0 && sorted[i - 1].from == t.from &&
        sorted[i - 1].to == t.to) {
      edges_.back().rate += t.rate;
    } else {
      edges_.push_back({t.to, t.rate});
      ++offsets_[t.from.id];
    }
    total_[t.from.pos()] += t.rate;
  }
  // offsets_[i] currently holds the count for state i (1-based); convert to
  // prefix offsets indexed by position.
  std::vector<std::size_t> prefix(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + offsets_[i + 1];
  offsets_ = std::move(prefix);
}

std::span<const Edge> SparseGenerator::row(StateIndex from) const {
  if (from.is_cemetery()) return {};
  const std::size_t i = from.pos();
  return std::span<const Edge>(edges_).subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
}

double SparseGenerator::rate(StateIndex from, StateIndex to) const {
  const auto edges = row(from);
  const auto it = std::lower_bound(edges.begin(), edges.end(), to,
                                   [](const Edge& e, StateIndex v) { return e.to < v; });
  return (it != edges.end() && it->to == to) ? it->rate : 0.0;
}

double SparseGenerator::max_total_rate() const {
  return total_.empty() ? 0.0 : *std::max_element(total_.begin(), total_.end());
}

bool SparseGenerator::has_cemetery_exits() const {
  return std::any_of(edges_.begin(), edges_.end(),
                     [](const Edge& e) { return e.to.is_cemetery(); });
}

std::vector<Transition> SparseGenerator::transitions() const {
  std::vector<Transition> out;
  out.reserve(edges_.size());
  for (std::size_t i = 0; i < n_; ++i) {
    for (const Edge& e : row(StateIndex::from_pos(i))) {
      out.push_back({StateIndex::from_pos(i), e.to, e.rate});
    }
  }
  return out;
}

Eigen::SparseMatrix<double> SparseGenerator::matrix_on_c() const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(edges_.size() + n_);
  for (std::size_t i = 0; i < n_; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    triplets.emplace_back(r, r, -total_[i]);
    for (const Edge& e : row(StateIndex::from_pos(i))) {
      if (!e.to.is_cemetery()) {
        triplets.emplace_back(r, static_cast<Eigen::Index>(e.to.pos()), e.rate);
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(n_);
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

StateIndex RestrictedGenerator::local(StateIndex original) const {
  const auto it = std::lower_bound(states.begin(), states.end(), original);
  if (it == states.end() || *it != original) return kCemetery;
  return StateIndex::from_pos(static_cast<std::size_t>(it - states.begin()));
}

ProbabilityVector RestrictedGenerator::lift(const ProbabilityVector& local_law,
                                            std::size_t n) const {
  std::vector<double> v(n, 0.0);
  for (std::size_t i = 0; i < states.size(); ++i) {
    v[states[i].pos()] = local_law[StateIndex::from_pos(i)];
  }
  return ProbabilityVector(std::move(v), local_law.cemetery());
}

SparseGenerator build_returned_generator(const SparseGenerator& q,
                                         const ReturnDistribution& mu) {
  if (mu.size() != q.size()) {
    fail(ErrorKind::kInvalidDistribution,
         "return law is defined on " + std::to_string(mu.size()) +
             " states but C has " + std::to_string(q.size()));
  }
  const auto support = mu.support();
  std::vector<Transition> out;
  for (const Transition& t : q.transitions()) {
    if (!t.to.is_cemetery()) {
      out.push_back(t);
      continue;
    }
    for (StateIndex j : support) {
      // A return onto the state just left is a self loop and leaves the
      // generator unchanged.
      if (j != t.from) out.push_back({t.from, j, t.rate * mu[j]});
    }
  }
  return SparseGenerator(q.size(), out);
}

RestrictedGenerator accelerated_return_generator(const SparseGenerator& q,
                                                 std::span<const StateIndex> members,
                                                 StateIndex s) {
  RestrictedGenerator out;
  out.states.assign(members.begin(), members.end());
  std::sort(out.states.begin(), out.states.end());
  out.states.erase(std::unique(out.states.begin(), out.states.end()), out.states.end());
  if (out.states.empty()) fail(ErrorKind::kInvalidTruncation, "empty member set");
  for (StateIndex k : out.states) {
    if (k.is_cemetery() || k.id > q.size()) {
      fail(ErrorKind::kInvalidTruncation,
           "member " + std::to_string(k.id) + " is not a state of C");
    }
  }
  const StateIndex local_s = out.local(s);
  if (local_s.is_cemetery()) {
    fail(ErrorKind::kInvalidTruncation,
         "member set does not contain the return state " + std::to_string(s.id));
  }
  std::vector<Transition> entries;
  for (std::size_t i = 0; i < out.states.size(); ++i) {
    const StateIndex from = StateIndex::from_pos(i);
    for (const Edge& e : q.row(out.states[i])) {
      StateIndex to = e.to.is_cemetery() ? kCemetery : out.local(e.to);
      if (to.is_cemetery()) to = local_s;
      if (to != from) entries.push_back({from, to, e.rate});
    }
  }
  out.generator = SparseGenerator(out.states.size(), entries);
  return out;
}

std::vector<bool> reachable_from(const SparseGenerator& q, StateIndex start) {
  std::vector<bool> seen(q.size(), false);
  if (start.is_cemetery()) return seen;
  std::deque<StateIndex> queue{start};
  seen[start.pos()] = true;
  while (!queue.empty()) {
    const StateIndex k = queue.front();
    queue.pop_front();
    for (const Edge& e : q.row(k)) {
      if (!e.to.is_cemetery() && !seen[e.to.pos()]) {
        seen[e.to.pos()] = true;
        queue.push_back(e.to);
      }
    }
  }
  return seen;
}

}  // namespace quasieq::ctmc
