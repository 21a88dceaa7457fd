#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "quasieq/bd/log_weight.hpp"
#include "quasieq/ctmc/generator.hpp"

namespace quasieq::bd {

/// What is known about the part of an infinite chain that lies above the cap.
struct TailReport {
  bool infinite = false;        // rates exist above the cap
  bool divergent = false;       // sum of alpha_i over i > cap did not settle
  double relative_tail = 0.0;   // bound on sum_{i>cap} alpha_i / sum_{i<=cap} alpha_i
  double ratio_at_cap = 0.0;    // alpha_{cap+1} / alpha_cap of the untruncated chain
  std::size_t terms_examined = 0;
  // (j, log sum_{i<=j} alpha_i) checkpoints of the untruncated series.
  std::vector<std::pair<std::size_t, double>> trace;

  bool negligible() const { return !divergent && relative_tail < 1e-12; }
};

/// Birth-death chain on {1, ..., cap} with cemetery 0, b_cap = 0 and death
/// from 1 leading to 0. All closed forms refer to this finite chain; for an
/// infinite chain the neglected tail is summarized by tail().
class BirthDeathModel {
 public:
  using RateFn = std::function<double(std::size_t)>;

  /// Infinite chain given by rate functions, truncated at `cap`.
  BirthDeathModel(RateFn birth, RateFn death, std::size_t cap);

  /// Finite chain; birth[j-1] = b_j and death[j-1] = d_j for j = 1..n.
  /// The last birth rate is ignored.
  static BirthDeathModel from_sequences(std::vector<double> birth, std::vector<double> death);

  std::size_t cap() const { return cap_; }
  double birth(std::size_t j) const { return birth_[j]; }
  double death(std::size_t j) const { return death_[j]; }
  double total_rate(std::size_t j) const { return birth_[j] + death_[j]; }

  /// alpha_1 = 1, alpha_j = b_1...b_{j-1} / (d_2...d_j).
  LogWeight alpha(std::size_t j) const;
  /// S_r^m = sum_{l=r}^m 1/(alpha_l d_l); zero when r = m + 1.
  LogWeight S(std::size_t r, std::size_t m) const;

  /// P_m[hit l before j], j < m < l, with 0 <= j and l <= cap.
  double hit_before(std::size_t m, std::size_t j, std::size_t l) const;

  double ps(std::size_t s) const;
  double one_minus_ps(std::size_t s) const;
  /// inf_k p_k, attained at k = 1 (at k = s when s = 1).
  double p(std::size_t s) const;
  /// p_k for k = 1..cap at index k - 1.
  std::vector<double> p_all(std::size_t s) const;

  /// P_k[reach i before {s, 0}], i not in {0, s}, k != s; u_ii = 1.
  double u(std::size_t k, std::size_t i, std::size_t s) const;
  /// 1 - P_i[return to i before {s, 0}], i not in {0, s}.
  double escape(std::size_t i, std::size_t s) const;

  /// T_ki, expected time in i before {s, 0} starting from k (first-leaving
  /// convention when k = s).
  double occupation(std::size_t k, std::size_t i, std::size_t s) const;
  double Tsi(std::size_t i, std::size_t s) const;
  /// T_si for i = 1..cap at index i - 1.
  std::vector<double> occupation_from_s(std::size_t s) const;

  double Tk(std::size_t k, std::size_t s) const;
  double Ts(std::size_t s) const;
  /// T_k for k = 1..cap at index k - 1, with T_s in position s - 1.
  std::vector<double> T_all(std::size_t s) const;

  /// 1 - r for the member set {1..a}: P_s[leave {1..a} or hit 0 before
  /// returning to s]. Requires s < a <= cap.
  double one_minus_r(std::size_t s, std::size_t a) const;
  double r_zeta(std::size_t s, std::size_t a) const { return 1.0 - one_minus_r(s, a); }

  const TailReport& tail() const { return tail_; }

  ctmc::SparseGenerator generator() const;

 private:
  BirthDeathModel(std::vector<double> birth, std::vector<double> death);
  void build();
  void scan_tail(const RateFn& birth, const RateFn& death);
  void require_summable() const;
  void check_state(std::size_t j, const char* what) const;
  LogWeight w(std::size_t l) const;  // 1/(alpha_l d_l)

  std::size_t cap_ = 0;
  std::vector<double> birth_, death_;     // indexed 0..cap, entry 0 unused
  std::vector<LogWeight> alpha_;          // indexed 0..cap
  std::vector<LogWeight> tree_;           // segment tree over w(1..cap)
  std::size_t leaves_ = 1;
  TailReport tail_;
};

}  // namespace quasieq::bd
