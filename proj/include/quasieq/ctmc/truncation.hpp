#pragma once

#include <span>
#include <vector>

#include "quasieq/ctmc/generator.hpp"
#include "quasieq/ctmc/hitting.hpp"

namespace quasieq::ctmc {

/// A truncation set C_zeta around s and the quantities the bounds consume.
struct TruncationPlan {
  double zeta = 0.0;
  std::vector<StateIndex> members;  // ascending, always contains s
  double T_zeta_plus = 0.0;         // max T_k over members
  double r_zeta = 0.0;              // P_s[return to s inside members, no 0]
  double q_zeta = 0.0;              // max q_k over the boundary set J_zeta
  double residual = 0.0;            // sum of T_sk over non-members
  bool condition_met = true;        // residual <= zeta (1 - p_s) T_s

  bool contains(StateIndex k) const;
  std::vector<bool> membership(std::size_t n) const;
};

/// Greedy plan: starting from {s}, add states by ascending T_k (ties by
/// index) until sum_{k not in members} T_sk <= zeta (1 - p_s) T_s.
TruncationPlan select_truncation(const HittingStats& stats, double zeta);

/// Plan for an explicitly chosen member set.
TruncationPlan plan_for_members(const HittingStats& stats, double zeta,
                                std::vector<StateIndex> members);

/// P_s[excursion from s returns to s without leaving `members` or hitting 0].
double stay_probability(const SparseGenerator& q,
                        std::span<const StateIndex> members, StateIndex s);

/// sup of q_k over J = {k not in members : q_kj > 0 for some member j};
/// 0 when J is empty.
double boundary_rate(const SparseGenerator& q,
                     std::span<const StateIndex> members);

/// Hitting quantities of the accelerated return process on C'.
struct AcceleratedStats {
  std::vector<StateIndex> members;
  std::vector<double> T;   // E_k[tau_{s}] on the accelerated chain, k in C'
  double T_plus = 0.0;     // sup over C'
  double T_s = 0.0;        // mean return time to s
  double r = 0.0;          // P_s[return to s without being sent back]
  double q_s = 0.0;
};

AcceleratedStats accelerated_stats(const SparseGenerator& q,
                                   std::span<const StateIndex> members,
                                   StateIndex s);

}  // namespace quasieq::ctmc
