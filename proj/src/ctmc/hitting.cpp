#include "quasieq/ctmc/hitting.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "killed_system.hpp"
#include "quasieq/error.hpp"

namespace quasieq::ctmc {

namespace {

void require_state(const SparseGenerator& q, StateIndex s, const char* what) {
  if (s.is_cemetery() || s.id > q.size()) {
    fail(ErrorKind::kInvalidInput,
         std::string(what) + " " + std::to_string(s.id) + " is not a state of C");
  }
}

std::vector<bool> stop_only(std::size_t n, StateIndex s) {
  std::vector<bool> stop(n, false);
  stop[s.pos()] = true;
  return stop;
}

// Rates from `from` into the free states of `sys`, scaled by 1/q_from.
Eigen::VectorXd jump_law_into(const SparseGenerator& q, const detail::KilledSystem& sys,
                              StateIndex from) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.free_count()));
  const double total = q.total_rate(from);
  for (const Edge& edge : q.row(from)) {
    if (edge.to.is_cemetery()) continue;
    const long r = sys.index_of(edge.to.pos());
    if (r >= 0) e(r) += edge.rate / total;
  }
  return e;
}

}  // namespace

double HittingStats::mean_T(const ReturnDistribution& mu) const {
  return mu.expectation(T);
}

HittingStats hitting_stats(std::shared_ptr<const SparseGenerator> q_ptr, StateIndex s) {
  const SparseGenerator& q = *q_ptr;
  require_state(q, s, "center state");
  const std::size_t n = q.size();
  const double q_s = q.total_rate(s);
  if (!(q_s > 0.0)) {
    fail(ErrorKind::kConditionB,
         "center state " + std::to_string(s.id) + " is absorbing; T_s is infinite");
  }

  const detail::KilledSystem sys(q, stop_only(n, s), ErrorKind::kConditionB,
                                 "hitting_stats");
  const auto m = static_cast<Eigen::Index>(sys.free_count());
  Eigen::VectorXd to_s = Eigen::VectorXd::Zero(m);
  for (std::size_t r = 0; r < sys.free_count(); ++r) {
    to_s(static_cast<Eigen::Index>(r)) = q.rate(StateIndex::from_pos(sys.free_positions()[r]), s);
  }
  const Eigen::VectorXd h = sys.solve(to_s);
  const Eigen::VectorXd t = sys.solve(Eigen::VectorXd::Ones(m));
  const Eigen::VectorXd x = sys.solve_transposed(jump_law_into(q, sys, s));

  HittingStats out;
  out.s = s;
  out.q_s = q_s;
  out.generator = std::move(q_ptr);
  out.p.assign(n, 0.0);
  out.T.assign(n, 0.0);
  out.occupation.assign(n, 0.0);
  for (std::size_t r = 0; r < sys.free_count(); ++r) {
    const std::size_t pos = sys.free_positions()[r];
    const auto ri = static_cast<Eigen::Index>(r);
    if (!std::isfinite(t(ri)) || t(ri) < -1e-9 * std::max(1.0, t.cwiseAbs().maxCoeff())) {
      fail(ErrorKind::kConditionB,
           "mean hitting time from state " + std::to_string(pos + 1) + " is not finite");
    }
    out.p[pos] = std::clamp(h(ri), 0.0, 1.0);
    out.T[pos] = std::max(t(ri), 0.0);
    out.occupation[pos] = std::max(x(ri), 0.0);
  }

  double p_s = 0.0;
  double t_s = 1.0;
  for (const Edge& e : q.row(s)) {
    if (e.to.is_cemetery()) continue;
    p_s += e.rate * out.p[e.to.pos()];
    t_s += e.rate * out.T[e.to.pos()];
  }
  out.p_s = std::clamp(p_s / q_s, 0.0, 1.0);
  out.p[s.pos()] = out.p_s;
  out.T[s.pos()] = t_s / q_s;
  out.occupation[s.pos()] = 1.0 / q_s;

  out.T_s = 0.0;
  for (double v : out.occupation) out.T_s += v;
  out.p_min = *std::min_element(out.p.begin(), out.p.end());
  return out;
}

HittingStats hitting_stats(const SparseGenerator& q, StateIndex s) {
  return hitting_stats(std::make_shared<const SparseGenerator>(q), s);
}

std::vector<double> hit_probability(const SparseGenerator& q, const std::vector<bool>& stop,
                                    StateIndex target) {
  require_state(q, target, "target");
  if (!stop[target.pos()]) {
    fail(ErrorKind::kInvalidInput, "hit_probability: target must be a stopping state");
  }
  const detail::KilledSystem sys(q, stop, ErrorKind::kNumericalFailure, "hit_probability");
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.free_count()));
  for (std::size_t r = 0; r < sys.free_count(); ++r) {
    b(static_cast<Eigen::Index>(r)) = q.rate(StateIndex::from_pos(sys.free_positions()[r]), target);
  }
  const Eigen::VectorXd h = sys.solve(b);
  std::vector<double> out(q.size(), 0.0);
  out[target.pos()] = 1.0;
  for (std::size_t r = 0; r < sys.free_count(); ++r) {
    out[sys.free_positions()[r]] = std::clamp(h(static_cast<Eigen::Index>(r)), 0.0, 1.0);
  }
  return out;
}

std::vector<double> mean_time_to_stop(const SparseGenerator& q, const std::vector<bool>& stop) {
  const detail::KilledSystem sys(q, stop, ErrorKind::kConditionB, "mean_time_to_stop");
  const Eigen::VectorXd t =
      sys.solve(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(sys.free_count())));
  std::vector<double> out(q.size(), 0.0);
  for (std::size_t r = 0; r < sys.free_count(); ++r) {
    out[sys.free_positions()[r]] = std::max(0.0, t(static_cast<Eigen::Index>(r)));
  }
  return out;
}

std::vector<double> occupation_before_stop(const SparseGenerator& q,
                                           const std::vector<bool>& stop, StateIndex start) {
  require_state(q, start, "start");
  const detail::KilledSystem sys(q, stop, ErrorKind::kConditionB, "occupation_before_stop");
  std::vector<double> out(q.size(), 0.0);
  Eigen::VectorXd e;
  if (stop[start.pos()]) {
    if (!(q.total_rate(start) > 0.0)) {
      fail(ErrorKind::kConditionB, "start state is absorbing");
    }
    e = jump_law_into(q, sys, start);
    out[start.pos()] = 1.0 / q.total_rate(start);
  } else {
    e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.free_count()));
    e(sys.index_of(start.pos())) = 1.0;
  }
  const Eigen::VectorXd x = sys.solve_transposed(e);
  for (std::size_t r = 0; r < sys.free_count(); ++r) {
    out[sys.free_positions()[r]] = std::max(0.0, x(static_cast<Eigen::Index>(r)));
  }
  return out;
}

std::vector<double> returned_hitting_times(const SparseGenerator& q,
                                           const ReturnDistribution& mu, StateIndex s) {
  require_state(q, s, "center state");
  const SparseGenerator returned = build_returned_generator(q, mu);
  std::vector<double> m = mean_time_to_stop(returned, stop_only(q.size(), s));

  const double q_s = q.total_rate(s);
  if (!(q_s > 0.0)) fail(ErrorKind::kConditionB, "center state is absorbing");
  double acc = 1.0;
  for (const Edge& e : q.row(s)) {
    if (e.to.is_cemetery()) {
      acc += e.rate * mu.expectation(m);
    } else {
      acc += e.rate * m[e.to.pos()];
    }
  }
  m[s.pos()] = acc / q_s;
  return m;
}

}  // namespace quasieq::ctmc
