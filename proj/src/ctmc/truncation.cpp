#include "quasieq/ctmc/truncation.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "killed_system.hpp"
#include "quasieq/error.hpp"

namespace quasieq::ctmc {

bool TruncationPlan::contains(StateIndex k) const {
  return std::binary_search(members.begin(), members.end(), k);
}

std::vector<bool> TruncationPlan::membership(std::size_t n) const {
  std::vector<bool> in(n, false);
  for (StateIndex k : members) in[k.pos()] = true;
  return in;
}

double stay_probability(const SparseGenerator& q, std::span<const StateIndex> members,
                        StateIndex s) {
  const std::size_t n = q.size();
  // Stopped: s itself and every non-member. The cemetery always stops.
  std::vector<bool> stop(n, true);
  for (StateIndex k : members) stop[k.pos()] = false;
  stop[s.pos()] = true;
  const detail::KilledSystem sys(q, stop, ErrorKind::kNumericalFailure, "stay_probability");
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.free_count()));
  for (std::size_t r = 0; r < sys.free_count(); ++r) {
    b(static_cast<Eigen::Index>(r)) = q.rate(StateIndex::from_pos(sys.free_positions()[r]), s);
  }
  const Eigen::VectorXd h = sys.solve(b);
  const double q_s = q.total_rate(s);
  if (!(q_s > 0.0)) return 0.0;
  double r = 0.0;
  for (const Edge& e : q.row(s)) {
    if (e.to.is_cemetery()) continue;
    const long idx = sys.index_of(e.to.pos());
    if (idx >= 0) r += e.rate * h(idx);
  }
  return std::clamp(r / q_s, 0.0, 1.0);
}

double boundary_rate(const SparseGenerator& q, std::span<const StateIndex> members) {
  std::vector<bool> in(q.size(), false);
  for (StateIndex k : members) in[k.pos()] = true;
  double sup = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (in[i]) continue;
    const StateIndex k = StateIndex::from_pos(i);
    const auto edges = q.row(k);
    const bool enters = std::any_of(edges.begin(), edges.end(), [&](const Edge& e) {
      return !e.to.is_cemetery() && in[e.to.pos()];
    });
    if (enters) sup = std::max(sup, q.total_rate(k));
  }
  return sup;
}

TruncationPlan plan_for_members(const HittingStats& stats, double zeta,
                                std::vector<StateIndex> members) {
  const SparseGenerator& q = *stats.generator;
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  if (!std::binary_search(members.begin(), members.end(), stats.s)) {
    fail(ErrorKind::kInvalidTruncation, "truncation set must contain the center state");
  }
  TruncationPlan plan;
  plan.zeta = zeta;
  plan.members = std::move(members);
  std::vector<bool> in = plan.membership(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (in[i]) {
      plan.T_zeta_plus = std::max(plan.T_zeta_plus, stats.T[i]);
    } else {
      plan.residual += stats.occupation[i];
    }
  }
  plan.condition_met = plan.residual <= zeta * (1.0 - stats.p_s) * stats.T_s;
  plan.r_zeta = stay_probability(q, plan.members, stats.s);
  plan.q_zeta = boundary_rate(q, plan.members);
  return plan;
}

TruncationPlan select_truncation(const HittingStats& stats, double zeta) {
  if (!(zeta > 0.0)) fail(ErrorKind::kInvalidInput, "zeta must be positive");
  const std::size_t n = stats.size();
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i) {
    if (i != stats.s.pos()) order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return stats.T[a] != stats.T[b] ? stats.T[a] < stats.T[b] : a < b;
  });
  // tail[m] = occupation left outside after adding the first m candidates;
  // summed from the back so small residuals are not lost to cancellation.
  std::vector<double> tail(order.size() + 1, 0.0);
  for (std::size_t m = order.size(); m-- > 0;) tail[m] = tail[m + 1] + stats.occupation[order[m]];

  const double allowance = zeta * (1.0 - stats.p_s) * stats.T_s;
  std::size_t take = 0;
  while (take < order.size() && tail[take] > allowance) ++take;

  std::vector<StateIndex> members{stats.s};
  for (std::size_t m = 0; m < take; ++m) members.push_back(StateIndex::from_pos(order[m]));
  TruncationPlan plan = plan_for_members(stats, zeta, std::move(members));
  plan.residual = tail[take];
  plan.condition_met = true;
  return plan;
}

AcceleratedStats accelerated_stats(const SparseGenerator& q,
                                   std::span<const StateIndex> members, StateIndex s) {
  const RestrictedGenerator acc = accelerated_return_generator(q, members, s);
  const StateIndex local_s = acc.local(s);
  const std::size_t m = acc.states.size();

  std::vector<bool> stop(m, false);
  stop[local_s.pos()] = true;
  const detail::KilledSystem sys(acc.generator, stop, ErrorKind::kConditionB,
                                 "accelerated_stats");
  const Eigen::VectorXd t =
      sys.solve(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(sys.free_count())));

  AcceleratedStats out;
  out.members = acc.states;
  out.q_s = q.total_rate(s);
  out.T.assign(m, 0.0);
  for (std::size_t r = 0; r < sys.free_count(); ++r) {
    out.T[sys.free_positions()[r]] = std::max(0.0, t(static_cast<Eigen::Index>(r)));
  }
  if (!(out.q_s > 0.0)) fail(ErrorKind::kConditionB, "center state is absorbing");
  // Return time from s: a jump leaving C' (or into 0) is sent straight back
  // to s, which counts as a return.
  double acc_time = 1.0;
  for (const Edge& e : q.row(s)) {
    if (e.to.is_cemetery()) continue;
    const StateIndex l = acc.local(e.to);
    if (!l.is_cemetery()) acc_time += e.rate * out.T[l.pos()];
  }
  out.T_s = acc_time / out.q_s;
  out.T[local_s.pos()] = out.T_s;
  out.T_plus = *std::max_element(out.T.begin(), out.T.end());
  out.r = stay_probability(q, acc.states, s);
  return out;
}

}  // namespace quasieq::ctmc
