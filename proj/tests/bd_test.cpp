#include <doctest.h>

#include <boost/multiprecision/cpp_int.hpp>

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "quasieq/bd/density.hpp"
#include "quasieq/bd/model.hpp"
#include "quasieq/ctmc/hitting.hpp"
#include "quasieq/ctmc/truncation.hpp"
#include "quasieq/error.hpp"
#include "support/test_chains.hpp"

using namespace quasieq;
using bd::BirthDeathModel;
using ctmc::StateIndex;
using testing::close_rel;
using Rational = boost::multiprecision::cpp_rational;

namespace {

BirthDeathModel random_bd(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> rate(0.2, 3.0);
  std::vector<double> b(n), d(n);
  for (std::size_t j = 0; j < n; ++j) {
    b[j] = rate(rng);
    d[j] = rate(rng);
  }
  return BirthDeathModel::from_sequences(b, d);
}

BirthDeathModel ricker(double A, std::size_t cap, double b = 2.0, double d = 1.0,
                       double alpha = 1.0) {
  return BirthDeathModel(
      [=](std::size_t j) { return j * b * std::exp(-alpha * j / A); },
      [=](std::size_t j) { return j * d; }, cap);
}

std::vector<bool> stop_at(std::size_t n, std::initializer_list<std::size_t> states) {
  std::vector<bool> stop(n, false);
  for (auto s : states) stop[s - 1] = true;
  return stop;
}

// Every closed form against the generic sparse solvers on the same finite
// chain. Returns the number of comparisons made.
int check_against_solver(const BirthDeathModel& m, std::size_t s, double rel) {
  const auto q = std::make_shared<const ctmc::SparseGenerator>(m.generator());
  const std::size_t n = m.cap();
  const ctmc::HittingStats hs = ctmc::hitting_stats(q, StateIndex{s});
  int checks = 0;
  auto expect = [&](double closed, double solved) {
    CAPTURE(closed);
    CAPTURE(solved);
    CHECK(close_rel(closed, solved, rel));
    ++checks;
  };

  expect(m.ps(s), hs.p_s);
  expect(m.one_minus_ps(s), 1.0 - hs.p_s);
  expect(m.p(s), hs.p_min);
  const auto p_all = m.p_all(s);
  const auto T_all = m.T_all(s);
  const auto row = m.occupation_from_s(s);
  for (std::size_t k = 1; k <= n; ++k) {
    expect(p_all[k - 1], hs.p[k - 1]);
    expect(T_all[k - 1], hs.T[k - 1]);
    expect(row[k - 1], hs.occupation[k - 1]);
  }
  expect(m.Ts(s), hs.T_s);

  // T_ki and u_ki for a handful of starting states on both sides of s.
  std::vector<std::size_t> starts{1, n};
  if (s > 1) starts.push_back(s - 1);
  if (s < n) starts.push_back(s + 1);
  starts.push_back((s + n) / 2);
  starts.push_back((s + 1) / 2);
  for (std::size_t k : starts) {
    if (k == s) continue;
    const auto occ = ctmc::occupation_before_stop(*q, stop_at(n, {s}), StateIndex{k});
    for (std::size_t i = 1; i <= n; ++i) {
      expect(m.occupation(k, i, s), occ[i - 1]);
      if (i == s) continue;
      const auto hit = ctmc::hit_probability(*q, stop_at(n, {s, i}), StateIndex{i});
      expect(m.u(k, i, s), hit[k - 1]);
    }
  }

  for (std::size_t a = s + 1; a <= n; a += std::max<std::size_t>(1, (n - s) / 7)) {
    std::vector<StateIndex> members;
    for (std::size_t j = 1; j <= a; ++j) members.push_back({j});
    const double r = ctmc::stay_probability(*q, members, StateIndex{s});
    expect(m.one_minus_r(s, a), 1.0 - r);
  }
  return checks;
}

Rational to_rational(double v) {
  // Rates in the rational tests are multiples of 1/8, so this is exact.
  return Rational(static_cast<long long>(std::llround(v * 8)), 8);
}

double rel_err(double approx, const Rational& exact) {
  const Rational diff = Rational(approx) - exact;
  return std::abs(static_cast<double>(diff / exact));
}

}  // namespace

TEST_CASE("log weights") {
  const auto a = bd::LogWeight::from(3.0);
  const auto b = bd::LogWeight::from(5.0);
  CHECK((a + b).value() == doctest::Approx(8.0).epsilon(1e-15));
  CHECK((a * b).value() == doctest::Approx(15.0).epsilon(1e-15));
  CHECK((a / b).value() == doctest::Approx(0.6).epsilon(1e-15));
  CHECK((a + bd::LogWeight{}).value() == doctest::Approx(3.0).epsilon(1e-15));
  CHECK((a * bd::LogWeight{}).zero);
  // Far beyond double range.
  const auto huge = bd::LogWeight::from_log(5000.0);
  // The log itself carries an absolute rounding error of about ulp(5000).
  CHECK(ratio(huge + huge, huge) == doctest::Approx(2.0).epsilon(1e-11));
}

TEST_CASE("alpha and S against exact rationals") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> eighths(1, 40);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t n = 30;
    std::vector<double> b(n), d(n);
    for (std::size_t j = 0; j < n; ++j) {
      b[j] = eighths(rng) / 8.0;
      d[j] = eighths(rng) / 8.0;
    }
    const auto m = BirthDeathModel::from_sequences(b, d);
    std::vector<Rational> alpha(n + 1), w(n + 1);
    alpha[1] = 1;
    for (std::size_t j = 2; j <= n; ++j) {
      alpha[j] = alpha[j - 1] * to_rational(b[j - 2]) / to_rational(d[j - 1]);
    }
    for (std::size_t j = 1; j <= n; ++j) w[j] = 1 / (alpha[j] * to_rational(d[j - 1]));
    CHECK(m.alpha(1).value() == 1.0);
    for (std::size_t j = 1; j <= n; ++j) CHECK(rel_err(m.alpha(j).value(), alpha[j]) <= 1e-12);
    for (std::size_t r = 1; r <= n; r += 3) {
      Rational sum = 0;
      for (std::size_t l = r; l <= n; ++l) {
        sum += w[l];
        CHECK(rel_err(m.S(r, l).value(), sum) <= 1e-12);
      }
    }
  }

  SUBCASE("constant rates give a geometric alpha") {
    const auto m = BirthDeathModel::from_sequences(std::vector<double>(20, 1.5),
                                                   std::vector<double>(20, 0.5));
    Rational expected = 1;
    for (std::size_t j = 1; j <= 20; ++j) {
      CHECK(rel_err(m.alpha(j).value(), expected) <= 1e-12);
      expected *= 3;
    }
  }
}

TEST_CASE("S is monotone") {
  std::mt19937_64 rng(11);
  const auto m = random_bd(40, rng);
  for (std::size_t r = 1; r <= 40; ++r) {
    for (std::size_t k = r; k < 40; ++k) CHECK(m.S(r, k + 1).value() >= m.S(r, k).value());
    if (r > 1) CHECK(m.S(r, 40).value() <= m.S(r - 1, 40).value());
  }
  CHECK(m.S(5, 4).zero);
  CHECK_THROWS_AS(m.S(6, 4), Error);
}

TEST_CASE("hit probabilities") {
  SUBCASE("symmetric walk is gambler's ruin") {
    const auto m = BirthDeathModel::from_sequences(std::vector<double>(30, 1.3),
                                                   std::vector<double>(30, 1.3));
    for (std::size_t j = 0; j < 10; ++j) {
      for (std::size_t mm = j + 1; mm < 25; ++mm) {
        CHECK(m.hit_before(mm, j, 25) == doctest::Approx(double(mm - j) / double(25 - j)).epsilon(1e-13));
      }
    }
  }
  SUBCASE("strong upward drift") {
    std::vector<double> b(20, 1000.0), d(20, 1.0);
    const auto m = BirthDeathModel::from_sequences(b, d);
    CHECK(m.hit_before(18, 2, 19) > 0.999);
    CHECK(m.hit_before(3, 2, 19) < m.hit_before(4, 2, 19));
  }
  SUBCASE("random chains against the solver") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 10; ++rep) {
      const auto m = random_bd(25, rng);
      const auto q = m.generator();
      for (std::size_t j : {0, 3, 7}) {
        for (std::size_t l : {12, 20, 25}) {
          std::vector<bool> stop(25, false);
          stop[l - 1] = true;
          if (j > 0) stop[j - 1] = true;
          const auto h = ctmc::hit_probability(q, stop, StateIndex{l});
          for (std::size_t mm = j + 1; mm < l; ++mm) {
            CHECK(close_rel(m.hit_before(mm, j, l), h[mm - 1], 1e-10));
          }
        }
      }
    }
  }
  CHECK_THROWS_AS(BirthDeathModel::from_sequences({1, 1, 1}, {1, 1, 1}).hit_before(2, 2, 3), Error);
}

TEST_CASE("first-jump values and the five cases of u") {
  std::mt19937_64 rng(5);
  const auto m = random_bd(30, rng);
  // s = 1: an excursion ends in 0 exactly when the first jump is a death.
  CHECK(m.one_minus_ps(1) == doctest::Approx(m.death(1) / m.total_rate(1)).epsilon(1e-14));
  const std::size_t s = 12;
  CHECK(m.Tsi(s, s) == doctest::Approx(1.0 / m.total_rate(s)).epsilon(1e-15));
  CHECK(m.u(3, 20, s) == 0.0);
  CHECK(m.u(25, 8, s) == 0.0);
  CHECK(m.u(25, 20, s) == 1.0);
  CHECK(m.u(20, 20, s) == 1.0);
  CHECK(m.u(0, 20, s) == 0.0);
  CHECK(m.occupation(5, s, s) == 0.0);
  CHECK(m.occupation(5, 0, s) == 0.0);
  const auto q = m.generator();
  for (auto [k, i] : {std::pair<std::size_t, std::size_t>{15, 22}, {4, 9}, {9, 4}}) {
    const auto h = ctmc::hit_probability(q, stop_at(30, {s, i}), StateIndex{i});
    CHECK(close_rel(m.u(k, i, s), h[k - 1], 1e-10));
  }
  CHECK_THROWS_AS(m.u(5, s, s), Error);
  CHECK_THROWS_AS(m.u(s, 5, s), Error);
  CHECK_THROWS_AS(m.one_minus_r(s, s), Error);
  CHECK_THROWS_AS(m.one_minus_r(s, 31), Error);
}

TEST_CASE("closed forms equal the generic solver") {
  const auto start = std::chrono::steady_clock::now();
  SUBCASE("Ricker A = 20") {
    const auto m = ricker(20, 120);
    CHECK(check_against_solver(m, 13, 1e-8) > 0);
  }
  SUBCASE("random chains") {
    std::mt19937_64 rng(2026);
    std::uniform_int_distribution<std::size_t> size(2, 60);
    for (int rep = 0; rep < 25; ++rep) {
      const std::size_t n = size(rng);
      const auto m = random_bd(n, rng);
      const std::size_t s = std::uniform_int_distribution<std::size_t>(1, n)(rng);
      CAPTURE(n);
      CAPTURE(s);
      check_against_solver(m, s, 1e-8);
    }
  }
  SUBCASE("model zoo") {
    for (const char* family :
         {"ricker", "verhulst", "beverton-holt", "hassell", "maynard-smith-slatkin"}) {
      for (double A : {10.0, 30.0, 50.0}) {
        bd::DensitySpec spec{bd::parse_family(family),
                             {{"b", 2.0}, {"d", 1.0}, {"alpha", 1.0}, {"c", 1.0}, {"m", 1.0}},
                             A,
                             {},
                             {}};
        const auto inst = bd::make_density_model(spec, static_cast<std::size_t>(4 * A));
        CAPTURE(std::string(family));
        CAPTURE(A);
        check_against_solver(inst.model, inst.s, 1e-8);
      }
    }
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(seconds < 10.0);
}

TEST_CASE("truncated occupation keeps most of T_s") {
  // sum_{k in C_zeta} T_sk >= T_s (1 - zeta (1 - p_s)) for the planner's C_zeta.
  const auto m = ricker(20, 120);
  const auto q = std::make_shared<const ctmc::SparseGenerator>(m.generator());
  const auto hs = ctmc::hitting_stats(q, StateIndex{13});
  const auto row = m.occupation_from_s(13);
  for (double zeta : {1e-3, 1e-2, 0.1, 1.0, 5.0}) {
    const auto plan = ctmc::select_truncation(hs, zeta);
    double inside = 0.0;
    for (auto k : plan.members) inside += row[k.pos()];
    CHECK(inside >= m.Ts(13) * (1.0 - zeta * m.one_minus_ps(13)) * (1 - 1e-12));
  }
}

TEST_CASE("Ricker structure") {
  SUBCASE("exact log alpha and its asymptotic form") {
    const double A = 100, b = 2, d = 1, alpha = 1;
    const auto m = ricker(A, 300, b, d, alpha);
    double worst = 0.0;
    for (std::size_t j = 1; j <= 300; ++j) {
      const double jj = static_cast<double>(j);
      const double exact = -std::log(jj) + (jj - 1) * std::log(b / d) - alpha * jj * (jj - 1) / (2 * A);
      CHECK(m.alpha(j).log == doctest::Approx(exact).epsilon(1e-12));
      const double asymptotic = -std::log(jj) + jj * std::log(b / d) - alpha * jj * (jj + 1) / (2 * A);
      worst = std::max(worst, std::abs(m.alpha(j).log - asymptotic));
    }
    // The two forms differ by log(b/d) + alpha j / A, bounded over j <= 3A.
    CHECK(worst <= std::log(b / d) + 3 * alpha + 1e-9);
  }
  SUBCASE("1 - p_s decays geometrically in s") {
    std::vector<double> xs, ys;
    for (double A : {10.0, 20.0, 30.0, 40.0}) {
      const std::size_t s = static_cast<std::size_t>(std::floor(A * std::log(2.0)));
      const auto m = ricker(A, static_cast<std::size_t>(6 * A));
      xs.push_back(static_cast<double>(s));
      ys.push_back(std::log(m.one_minus_ps(s)));
    }
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / 4;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / 4;
    double sxy = 0, sxx = 0;
    for (int i = 0; i < 4; ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    CHECK(sxy / sxx == doctest::Approx(-0.5 * std::log(2.0)).epsilon(0.15));
  }
  SUBCASE("1 - r_zeta with a_zeta = 2(s+1) is of the same order as 1 - p_s") {
    for (double A : {20.0, 40.0, 80.0}) {
      const std::size_t s = static_cast<std::size_t>(std::floor(A * std::log(2.0)));
      const auto m = ricker(A, static_cast<std::size_t>(6 * A));
      const double ratio = m.one_minus_r(s, 2 * (s + 1)) / m.one_minus_ps(s);
      CHECK(ratio >= 1.0);
      CHECK(ratio < 2.0);
    }
  }
  SUBCASE("tail diagnostic") {
    const auto m = ricker(20, 120);
    CHECK(m.tail().infinite);
    CHECK(m.tail().negligible());
    const auto tight = ricker(20, 20);
    CHECK(tight.tail().relative_tail > 1e-3);
    CHECK_FALSE(tight.tail().negligible());
  }
}

TEST_CASE("divergent tails are reported") {
  // Critical linear rates: alpha_j = 1/j and the series is harmonic.
  const BirthDeathModel m([](std::size_t j) { return 1.0 * j; },
                          [](std::size_t j) { return 1.0 * j; }, 50);
  CHECK(m.tail().divergent);
  try {
    m.Ts(10);
    FAIL("expected a divergence error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDivergence);
    CHECK(std::string(e.what()).find("[50]") != std::string::npos);
  }
  // Hitting probabilities do not involve the tail.
  CHECK(m.ps(10) > 0.0);
}

TEST_CASE("model validation") {
  CHECK_THROWS_AS(BirthDeathModel::from_sequences({1, 1}, {1, 0}), Error);
  CHECK_THROWS_AS(BirthDeathModel::from_sequences({0, 1}, {1, 1}), Error);
  CHECK_THROWS_AS(BirthDeathModel::from_sequences({1}, {1, 1}), Error);
  // The last birth rate is ignored.
  CHECK(BirthDeathModel::from_sequences({1, 0}, {1, 1}).birth(2) == 0.0);
}

TEST_CASE("density models") {
  auto spec = [](const char* family, std::map<std::string, double> params, double A) {
    return bd::DensitySpec{bd::parse_family(family), std::move(params), A, {}, {}};
  };
  const auto r = bd::make_density_model(spec("ricker", {{"b", 2}, {"d", 1}, {"alpha", 1}}, 20), 120);
  CHECK(r.c == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(r.s == 13);
  CHECK(r.model.birth(10) == doctest::Approx(10 * 2 * std::exp(-0.5)).epsilon(1e-14));
  CHECK(r.model.death(10) == 10.0);

  CHECK(bd::equilibrium_density(spec("verhulst", {{"b", 2}, {"d", 1}, {"c", 1}}, 1)) ==
        doctest::Approx(1.0).epsilon(1e-11));
  CHECK(bd::equilibrium_density(spec("beverton-holt", {{"b", 2}, {"d", 1}, {"m", 1}}, 1)) ==
        doctest::Approx(1.0).epsilon(1e-11));
  // (1 + x/m)^c = b/d  =>  x = m ((b/d)^{1/c} - 1)
  CHECK(bd::equilibrium_density(spec("hassell", {{"b", 3}, {"d", 1}, {"m", 2}, {"c", 2}}, 1)) ==
        doctest::Approx(2 * (std::sqrt(3.0) - 1)).epsilon(1e-11));
  // 1 + (x/m)^c = b/d  =>  x = m (b/d - 1)^{1/c}
  CHECK(bd::equilibrium_density(
            spec("maynard-smith-slatkin", {{"b", 3}, {"d", 1}, {"m", 2}, {"c", 3}}, 1)) ==
        doctest::Approx(2 * std::cbrt(2.0)).epsilon(1e-11));

  bd::DensitySpec custom{bd::Family::kCustom, {{"k", 3}}, 10, "k/(1 + x)", "1 + x"};
  // 3/(1+x) = 1+x  =>  x = sqrt(3) - 1
  const auto cm = bd::make_density_model(custom, 40);
  CHECK(cm.c == doctest::Approx(std::sqrt(3.0) - 1).epsilon(1e-11));
  CHECK(cm.s == 7);

  auto kind = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kConfig;
  };
  CHECK(kind([&] { bd::equilibrium_density(spec("ricker", {{"b", 1}, {"d", 2}, {"alpha", 1}}, 5)); }) ==
        ErrorKind::kNoEquilibrium);
  CHECK(kind([&] { bd::equilibrium_density(spec("beverton-holt", {{"b", 1}, {"d", 2}, {"m", 1}}, 5)); }) ==
        ErrorKind::kNoEquilibrium);
  CHECK(kind([&] { bd::equilibrium_density(spec("ricker", {{"b", 2}, {"d", 1}}, 5)); }) ==
        ErrorKind::kModel);
  CHECK(kind([] { bd::parse_family("gompertz"); }) == ErrorKind::kModel);
  CHECK(kind([&] { bd::make_density_model(spec("ricker", {{"b", 2}, {"d", 1}, {"alpha", 1}}, 20), 5); }) ==
        ErrorKind::kModel);
}
