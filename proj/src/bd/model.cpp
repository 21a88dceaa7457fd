#include "quasieq/bd/model.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "quasieq/error.hpp"

namespace quasieq::bd {

namespace {

constexpr std::size_t kMaxTailTerms = 200000;
constexpr double kTailTolerance = 1e-12;

double checked_rate(double v, const char* what, std::size_t j) {
  if (!std::isfinite(v) || v < 0.0) {
    fail(ErrorKind::kInvalidInput, std::string(what) + " rate at state " + std::to_string(j) +
                                       " is " + std::to_string(v));
  }
  return v;
}

}  // namespace

BirthDeathModel::BirthDeathModel(RateFn birth, RateFn death, std::size_t cap) : cap_(cap) {
  if (cap == 0) fail(ErrorKind::kInvalidInput, "birth-death cap must be at least 1");
  birth_.assign(cap + 1, 0.0);
  death_.assign(cap + 1, 0.0);
  for (std::size_t j = 1; j <= cap; ++j) {
    birth_[j] = j < cap ? checked_rate(birth(j), "birth", j) : 0.0;
    death_[j] = checked_rate(death(j), "death", j);
  }
  build();
  scan_tail(birth, death);
}

BirthDeathModel::BirthDeathModel(std::vector<double> birth, std::vector<double> death)
    : cap_(death.size()) {
  if (birth.size() != death.size() || death.empty()) {
    fail(ErrorKind::kInvalidInput, "birth and death sequences must be nonempty and of equal length");
  }
  birth_.assign(cap_ + 1, 0.0);
  death_.assign(cap_ + 1, 0.0);
  for (std::size_t j = 1; j <= cap_; ++j) {
    birth_[j] = j < cap_ ? checked_rate(birth[j - 1], "birth", j) : 0.0;
    death_[j] = checked_rate(death[j - 1], "death", j);
  }
  build();
}

BirthDeathModel BirthDeathModel::from_sequences(std::vector<double> birth,
                                                std::vector<double> death) {
  return BirthDeathModel(std::move(birth), std::move(death));
}

void BirthDeathModel::build() {
  for (std::size_t j = 1; j <= cap_; ++j) {
    if (death_[j] <= 0.0) {
      fail(ErrorKind::kInvalidInput, "death rate at state " + std::to_string(j) + " must be positive");
    }
    if (j < cap_ && birth_[j] <= 0.0) {
      fail(ErrorKind::kInvalidInput, "birth rate at state " + std::to_string(j) +
                                         " is zero below the cap, so the states above it "
                                         "are unreachable");
    }
  }
  alpha_.assign(cap_ + 1, LogWeight{});
  alpha_[1] = LogWeight::one();
  for (std::size_t j = 2; j <= cap_; ++j) {
    alpha_[j] = LogWeight::from_log(alpha_[j - 1].log + std::log(birth_[j - 1]) - std::log(death_[j]));
  }
  while (leaves_ < cap_ + 1) leaves_ *= 2;
  tree_.assign(2 * leaves_, LogWeight{});
  for (std::size_t l = 1; l <= cap_; ++l) tree_[leaves_ + l] = w(l);
  for (std::size_t i = leaves_ - 1; i >= 1; --i) tree_[i] = tree_[2 * i] + tree_[2 * i + 1];
}

void BirthDeathModel::scan_tail(const RateFn& birth, const RateFn& death) {
  tail_.infinite = true;
  LogWeight partial;
  for (std::size_t j = 1; j <= cap_; ++j) partial += alpha_[j];

  LogWeight tail;
  LogWeight current = alpha_[cap_];
  std::size_t checkpoint = cap_;
  tail_.trace.emplace_back(cap_, partial.log);
  auto ratio_at = [&](std::size_t j) {
    const double b = checked_rate(birth(j), "birth", j);
    const double d = checked_rate(death(j + 1), "death", j + 1);
    if (d <= 0.0) {
      fail(ErrorKind::kInvalidInput, "death rate at state " + std::to_string(j + 1) + " must be positive");
    }
    return b / d;
  };

  double rho = ratio_at(cap_);
  tail_.ratio_at_cap = rho;
  for (std::size_t j = cap_; j < cap_ + kMaxTailTerms; ++j) {
    if (rho == 0.0) {
      tail_.relative_tail = ratio(tail, partial);
      tail_.terms_examined = j - cap_;
      return;
    }
    current = current * LogWeight::from(rho);
    tail += current;
    const double next = ratio_at(j + 1);
    // Geometric bound on what is left, valid while the ratios keep falling,
    // which holds for every density-dependent family in the zoo.
    if (next < 1.0) {
      const LogWeight rest = current * LogWeight::from(next / (1.0 - next));
      if (ratio(rest, partial + tail) < kTailTolerance) {
        tail_.relative_tail = ratio(tail + rest, partial);
        tail_.terms_examined = j + 1 - cap_;
        return;
      }
    }
    rho = next;
    if (j + 1 == 2 * checkpoint) {
      checkpoint = j + 1;
      tail_.trace.emplace_back(j + 1, (partial + tail).log);
    }
  }
  tail_.divergent = true;
  tail_.terms_examined = kMaxTailTerms;
  tail_.trace.emplace_back(cap_ + kMaxTailTerms, (partial + tail).log);
  tail_.relative_tail = std::numeric_limits<double>::infinity();
}

void BirthDeathModel::require_summable() const {
  if (!tail_.divergent) return;
  std::ostringstream msg;
  msg << "sum of alpha_i does not settle beyond the cap; log partial sums:";
  for (const auto& [j, l] : tail_.trace) msg << " [" << j << "] " << l;
  fail(ErrorKind::kDivergence, msg.str());
}

void BirthDeathModel::check_state(std::size_t j, const char* what) const {
  if (j < 1 || j > cap_) {
    fail(ErrorKind::kDomain, std::string(what) + " = " + std::to_string(j) +
                                 " is outside {1.." + std::to_string(cap_) + "}");
  }
}

LogWeight BirthDeathModel::w(std::size_t l) const {
  return (alpha_[l] * LogWeight::from(death_[l])).inverse();
}

LogWeight BirthDeathModel::alpha(std::size_t j) const {
  check_state(j, "j");
  return alpha_[j];
}

LogWeight BirthDeathModel::S(std::size_t r, std::size_t m) const {
  if (r < 1 || m > cap_ || r > m + 1) {
    fail(ErrorKind::kDomain, "S_r^m needs 1 <= r <= m + 1 and m <= cap (r = " +
                                 std::to_string(r) + ", m = " + std::to_string(m) + ")");
  }
  LogWeight left, right;
  std::size_t lo = r + leaves_;
  std::size_t hi = m + leaves_ + 1;
  // Iterative half-open segment tree query; keep left-to-right order so the
  // summation pattern does not depend on the range position.
  while (lo < hi) {
    if (lo & 1) left += tree_[lo++];
    if (hi & 1) right = tree_[--hi] + right;
    lo >>= 1;
    hi >>= 1;
  }
  return left + right;
}

double BirthDeathModel::hit_before(std::size_t m, std::size_t j, std::size_t l) const {
  if (!(j < m && m < l) || l > cap_) {
    fail(ErrorKind::kDomain, "hit_before needs j < m < l <= cap");
  }
  return ratio(S(j + 1, m), S(j + 1, l));
}

double BirthDeathModel::one_minus_ps(std::size_t s) const {
  check_state(s, "s");
  return (alpha_[s] * LogWeight::from(total_rate(s)) * S(1, s)).inverse().value();
}

double BirthDeathModel::ps(std::size_t s) const { return 1.0 - one_minus_ps(s); }

double BirthDeathModel::p(std::size_t s) const {
  check_state(s, "s");
  if (s == 1) return ps(1);
  return (LogWeight::from(death_[1]) * S(1, s)).inverse().value();
}

std::vector<double> BirthDeathModel::p_all(std::size_t s) const {
  check_state(s, "s");
  std::vector<double> out(cap_, 1.0);
  const LogWeight total = S(1, s);
  for (std::size_t k = 1; k < s; ++k) out[k - 1] = ratio(S(1, k), total);
  out[s - 1] = ps(s);
  return out;
}

double BirthDeathModel::u(std::size_t k, std::size_t i, std::size_t s) const {
  check_state(s, "s");
  check_state(i, "i");
  if (i == s) fail(ErrorKind::kDomain, "u_ki is defined for i outside {0, s}");
  if (k == s) fail(ErrorKind::kDomain, "u_ki is defined for k != s");
  if (k == 0) return 0.0;
  check_state(k, "k");
  if (k == i) return 1.0;
  if ((k < s && s < i) || (i < s && s < k)) return 0.0;
  if (s < i && i <= k) return 1.0;
  if (s < k && k <= i) return ratio(S(s + 1, k), S(s + 1, i));
  if (k <= i && i < s) return ratio(S(1, k), S(1, i));
  return ratio(S(k + 1, s), S(i + 1, s));  // i <= k < s
}

double BirthDeathModel::escape(std::size_t i, std::size_t s) const {
  check_state(s, "s");
  check_state(i, "i");
  if (i == s) fail(ErrorKind::kDomain, "escape probability is defined for i outside {0, s}");
  const LogWeight scale = alpha_[i] * LogWeight::from(total_rate(i));
  if (i < s) return ((S(i + 1, s).inverse() + S(1, i).inverse()) / scale).value();
  return (S(s + 1, i) * scale).inverse().value();
}

double BirthDeathModel::occupation(std::size_t k, std::size_t i, std::size_t s) const {
  check_state(s, "s");
  if (i == 0 || k == 0) return 0.0;
  check_state(i, "i");
  check_state(k, "k");
  if (k == s) return Tsi(i, s);
  if (i == s) return 0.0;
  return u(k, i, s) / (total_rate(i) * escape(i, s));
}

double BirthDeathModel::Tsi(std::size_t i, std::size_t s) const {
  check_state(s, "s");
  check_state(i, "i");
  const double q = total_rate(s);
  if (i == s) return 1.0 / q;
  if (i < s) return death_[s] * occupation(s - 1, i, s) / q;
  return birth_[s] * occupation(s + 1, i, s) / q;
}

std::vector<double> BirthDeathModel::occupation_from_s(std::size_t s) const {
  check_state(s, "s");
  std::vector<double> out(cap_);
  for (std::size_t i = 1; i <= cap_; ++i) out[i - 1] = Tsi(i, s);
  return out;
}

std::vector<double> BirthDeathModel::T_all(std::size_t s) const {
  check_state(s, "s");
  require_summable();
  std::vector<double> out(cap_, 0.0);

  // Suffix sums of alpha: suf[k] = sum_{i=k+1}^{cap} alpha_i.
  std::vector<LogWeight> suf(cap_ + 1);
  for (std::size_t k = cap_; k-- > 0;) suf[k] = suf[k + 1] + alpha_[k + 1];

  // Above s: T_k = sum_{i=s+1}^k alpha_i S_{s+1}^i + S_{s+1}^k sum_{i>k} alpha_i.
  LogWeight prefix_s, weighted;
  for (std::size_t k = s + 1; k <= cap_; ++k) {
    prefix_s += w(k);
    weighted += alpha_[k] * prefix_s;
    out[k - 1] = (weighted + prefix_s * suf[k]).value();
  }

  // Below s, with L_i = S_1^i and R_i = S_{i+1}^s:
  // T_k = (R_k sum_{i<=k} alpha_i L_i + L_k sum_{i=k+1}^{s-1} alpha_i R_i) / L_s.
  std::vector<LogWeight> L(s + 1), R(s + 1), G(s + 1);
  for (std::size_t i = 1; i <= s; ++i) L[i] = L[i - 1] + w(i);
  for (std::size_t i = s - 1; i >= 1; --i) R[i] = R[i + 1] + w(i + 1);
  // G[k] = sum_{i=k+1}^{s-1} alpha_i R_i
  for (std::size_t k = s - 1; k >= 2; --k) G[k - 1] = G[k] + alpha_[k] * R[k];
  LogWeight F;
  for (std::size_t k = 1; k < s; ++k) {
    F += alpha_[k] * L[k];
    out[k - 1] = ((R[k] * F + L[k] * G[k]) / L[s]).value();
  }

  // T_s = (sum_{i<s} alpha_i L_i / L_s + sum_{i>=s} alpha_i) / (alpha_s q_s).
  LogWeight below;
  for (std::size_t i = 1; i < s; ++i) below += alpha_[i] * L[i];
  out[s - 1] = ((below / L[s] + suf[s - 1]) / (alpha_[s] * LogWeight::from(total_rate(s)))).value();
  return out;
}

double BirthDeathModel::Tk(std::size_t k, std::size_t s) const {
  check_state(k, "k");
  return T_all(s)[k - 1];
}

double BirthDeathModel::Ts(std::size_t s) const { return T_all(s)[s - 1]; }

double BirthDeathModel::one_minus_r(std::size_t s, std::size_t a) const {
  check_state(s, "s");
  if (a <= s || a > cap_) {
    fail(ErrorKind::kDomain, "r_zeta needs s < a_zeta <= cap (s = " + std::to_string(s) +
                                 ", a_zeta = " + std::to_string(a) + ")");
  }
  // Leaving {1..a} upward means reaching a + 1; impossible when a is the cap.
  LogWeight sum = S(1, s).inverse();
  if (a < cap_) sum += S(s + 1, a + 1).inverse();
  return (sum / (alpha_[s] * LogWeight::from(total_rate(s)))).value();
}

ctmc::SparseGenerator BirthDeathModel::generator() const {
  std::vector<ctmc::Transition> entries;
  entries.reserve(2 * cap_);
  for (std::size_t j = 1; j <= cap_; ++j) {
    if (j < cap_) entries.push_back({{j}, {j + 1}, birth_[j]});
    entries.push_back({{j}, {j - 1}, death_[j]});
  }
  return ctmc::SparseGenerator(cap_, entries);
}

}  // namespace quasieq::bd
