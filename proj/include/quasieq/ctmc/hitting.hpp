#pragma once

#include <memory>
#include <span>
#include <vector>

#include "quasieq/ctmc/generator.hpp"
#include "quasieq/ctmc/types.hpp"

namespace quasieq::ctmc {

/// Hitting statistics for a center state s. Hitting times use the
/// first-leaving convention: starting in s, the clock runs until the chain
/// comes back to {s, 0} after having left s.
struct HittingStats {
  StateIndex s;
  std::vector<double> p;          // p_k = P_k[X at tau_{s,0} is s]
  std::vector<double> T;          // T_k = E_k[tau_{s,0}]
  std::vector<double> occupation; // T_sk, time in k before tau_{s,0} from s
  double p_min = 0.0;             // inf_k p_k
  double p_s = 0.0;
  double T_s = 0.0;               // sum_k T_sk
  double q_s = 0.0;               // total jump rate at s
  std::shared_ptr<const SparseGenerator> generator;

  std::size_t size() const { return p.size(); }
  double p_at(StateIndex k) const { return p[k.pos()]; }
  double T_at(StateIndex k) const { return T[k.pos()]; }
  double occupation_at(StateIndex k) const { return occupation[k.pos()]; }

  /// mu(T) = sum_k mu(k) T_k.
  double mean_T(const ReturnDistribution& mu) const;
};

/// Throws kConditionB when some state cannot reach {s, 0} or the solve
/// produces non-finite or negative times.
HittingStats hitting_stats(std::shared_ptr<const SparseGenerator> q,
                           StateIndex s);
HittingStats hitting_stats(const SparseGenerator& q, StateIndex s);

// Generic first-step solvers. `stop` marks states of C where the chain is
// halted; the cemetery always halts. Vectors are indexed over C.

/// P_k[hit `target` before any other stopping state], for k not stopped;
/// entries for stopped states are 1 on `target`, 0 elsewhere.
std::vector<double> hit_probability(const SparseGenerator& q,
                                    const std::vector<bool>& stop,
                                    StateIndex target);

/// E_k[time until a stopping state], 0 on stopped states.
std::vector<double> mean_time_to_stop(const SparseGenerator& q,
                                      const std::vector<bool>& stop);

/// Expected time spent in each state before the chain, started at `start`,
/// reaches a stopping state. If `start` is itself a stopping state the chain
/// must leave it first and the initial holding time is counted.
std::vector<double> occupation_before_stop(const SparseGenerator& q,
                                           const std::vector<bool>& stop,
                                           StateIndex start);

/// E_k[tau^mu_{s}] for the returned chain X^mu, k in C. For k = s this is
/// the mean return time, a visit 0 -> s counting as a return.
std::vector<double> returned_hitting_times(const SparseGenerator& q,
                                           const ReturnDistribution& mu,
                                           StateIndex s);

}  // namespace quasieq::ctmc
