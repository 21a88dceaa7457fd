#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

namespace quasieq::ctmc {

/// State of an absorbing chain. Id 0 is the cemetery; the transient class is
/// C = {1, ..., n}.
struct StateIndex {
  std::size_t id = 0;

  constexpr bool is_cemetery() const { return id == 0; }
  /// Zero-based offset into vectors indexed over C.
  constexpr std::size_t pos() const { return id - 1; }
  static constexpr StateIndex from_pos(std::size_t pos) { return {pos + 1}; }

  friend constexpr auto operator<=>(StateIndex, StateIndex) = default;
};

inline constexpr StateIndex kCemetery{0};

/// Probability law over C, optionally with mass on the cemetery.
class ProbabilityVector {
 public:
  ProbabilityVector() = default;
  explicit ProbabilityVector(std::vector<double> over_c, double cemetery = 0.0);

  static ProbabilityVector point_mass(std::size_t n, StateIndex s);
  static ProbabilityVector uniform(std::size_t n);

  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double cemetery() const { return cemetery_; }

  /// Probability of `state`; indices beyond size() have probability 0.
  double operator[](StateIndex state) const;

  double total() const;
  double mass(std::span<const StateIndex> states) const;

  /// Rescales so the entries sum to one. Throws on zero mass.
  ProbabilityVector normalized() const;

  /// Conditional law on `states` (renormalized restriction).
  ProbabilityVector conditioned_on(std::span<const StateIndex> states) const;

 private:
  std::vector<double> values_;
  double cemetery_ = 0.0;
};

/// Return law mu on C. Weights are validated to be nonnegative and to sum to
/// one within 1e-12.
class ReturnDistribution {
 public:
  ReturnDistribution(std::size_t n, const std::map<StateIndex, double>& weights);
  explicit ReturnDistribution(std::vector<double> weights_over_c);

  static ReturnDistribution point_mass(std::size_t n, StateIndex s);
  /// Uniform on {first, ..., last}, clipped to C.
  static ReturnDistribution uniform(std::size_t n, StateIndex first,
                                    StateIndex last);

  std::size_t size() const { return weights_.size(); }
  std::span<const double> weights() const { return weights_; }
  double operator[](StateIndex state) const;
  std::vector<StateIndex> support() const;

  /// mu(f) = sum_k mu(k) f(k) for f indexed over C.
  double expectation(std::span<const double> f) const;

 private:
  void validate() const;

  std::vector<double> weights_;
};

/// Total variation distance: half the L1 distance, cemetery included as one
/// more index. Missing indices count as probability zero.
double total_variation(const ProbabilityVector& a, const ProbabilityVector& b);

}  // namespace quasieq::ctmc
