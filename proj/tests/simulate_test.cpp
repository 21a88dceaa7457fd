#include <doctest.h>

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "quasieq/bd/model.hpp"
#include "quasieq/ctmc/hitting.hpp"
#include "quasieq/ctmc/solvers.hpp"
#include "quasieq/error.hpp"
#include "quasieq/simulate/simulate.hpp"
#include "support/test_chains.hpp"

using namespace quasieq;
using ctmc::ProbabilityVector;
using ctmc::ReturnDistribution;
using ctmc::SparseGenerator;
using ctmc::StateIndex;
using ctmc::Transition;
using simulate::EventFlag;
using simulate::Terminal;

namespace {

bool within_se(const simulate::EstimatorResult& r, double exact, double k = 3.0) {
  // A zero standard error only happens when every replicate agrees.
  const double slack = std::max(k * r.standard_error, 1e-12);
  return std::abs(r.estimate - exact) <= slack;
}

// b_j = 2 exp(-j/6), d_j = 1 on {1..30}: quasi-stable around j = 4.
bd::BirthDeathModel small_bd() {
  std::vector<double> b;
  std::vector<double> d;
  for (std::size_t j = 1; j <= 30; ++j) {
    b.push_back(2.0 * std::exp(-static_cast<double>(j) / 6.0));
    d.push_back(1.0);
  }
  return bd::BirthDeathModel::from_sequences(b, d);
}

SparseGenerator two_state() {
  const std::vector<Transition> t{{{1}, {2}, 1.5}, {{2}, {1}, 0.7}, {{1}, {0}, 0.2}, {{2}, {0}, 0.4}};
  return SparseGenerator(2, t);
}

}  // namespace

TEST_CASE("exponential holding time and immediate absorption") {
  const double lambda = 2.5;
  const std::vector<Transition> t{{{1}, {0}, lambda}};
  const SparseGenerator q(1, t);
  const simulate::GeneratorJumpModel model(q);
  // From s itself the excursion is the first jump, here always to 0.
  const auto h = simulate::estimate_hitting(model, {1}, {1}, 100000, 11);
  CHECK(h.T.replicates == 100000);
  CHECK(within_se(h.T, 1.0 / lambda));
  CHECK(h.p.estimate == 0.0);
  CHECK(h.T.standard_error > 0.0);
  CHECK(h.T.standard_error < 0.01);

  CHECK_THROWS_AS(simulate::estimate_hitting(model, {1}, {1}, 99, 1), Error);
}

TEST_CASE("hitting estimates agree with the closed forms and the linear solve") {
  const auto m = small_bd();
  const std::size_t s = 4;
  const SparseGenerator q = m.generator();
  const simulate::GeneratorJumpModel model(q);
  const auto stats = ctmc::hitting_stats(q, {s});

  const auto hs = simulate::estimate_hitting(model, {s}, {s}, 20000, 5);
  CHECK(within_se(hs.p, m.ps(s)));
  CHECK(within_se(hs.T, m.Ts(s)));
  CHECK(hs.p.standard_error > 0.0);

  for (std::size_t k : {1u, 2u, 7u, 12u}) {
    CAPTURE(k);
    const auto hk = simulate::estimate_hitting(model, {s}, {k}, 10000, 100 + k);
    CHECK(within_se(hk.p, stats.p[k - 1]));
    CHECK(within_se(hk.T, stats.T[k - 1]));
    // Absorption before reaching s never exceeds 1 - p_k beyond noise.
    CHECK(1.0 - hk.p.estimate <= 1.0 - stats.p[k - 1] + 3.0 * hk.p.standard_error + 1e-12);
  }

  // Random generic chains.
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 3; ++rep) {
    const SparseGenerator g = testing::random_chain(6, rng, 0.5);
    const auto st = ctmc::hitting_stats(g, {3});
    const simulate::GeneratorJumpModel gm(g);
    for (std::size_t k = 1; k <= 6; ++k) {
      CAPTURE(rep);
      CAPTURE(k);
      const auto e = simulate::estimate_hitting(gm, {3}, {k}, 4000, 1000 * rep + k);
      CHECK(within_se(e.p, st.p[k - 1], 3.5));
      CHECK(within_se(e.T, st.T[k - 1], 3.5));
    }
  }
}

TEST_CASE("a state that can only jump to the cemetery has p_k = 0") {
  const std::vector<Transition> t{{{1}, {0}, 2.0}, {{2}, {1}, 1.0}};
  const SparseGenerator q(2, t);
  const simulate::GeneratorJumpModel model(q);
  const auto h = simulate::estimate_hitting(model, {2}, {1}, 1000, 4);
  CHECK(h.p.estimate == 0.0);
  CHECK(h.p.standard_error == 0.0);
  CHECK(within_se(h.T, 0.5));
}

TEST_CASE("trajectory structure and reproducibility") {
  const auto m = small_bd();
  const SparseGenerator q = m.generator();
  const simulate::GeneratorJumpModel model(q);
  const auto mu = ReturnDistribution::uniform(q.size(), {2}, {6});

  for (const simulate::Mode& mode :
       {simulate::Mode{simulate::Absorbing{}}, simulate::Mode{simulate::Returned{mu}},
        simulate::Mode{simulate::Accelerated{{{1}, {2}, {3}, {4}, {5}, {6}}, {4}}}}) {
    const auto a = simulate::simulate(model, {4}, 200.0, 77, mode, 3);
    const auto b = simulate::simulate(model, {4}, 200.0, 77, mode, 3);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
      CHECK(a.events[i].time == b.events[i].time);
      CHECK(a.events[i].state == b.events[i].state);
      CHECK(a.events[i].flag == b.events[i].flag);
    }
    CHECK(a.terminal == b.terminal);
    const auto c = simulate::simulate(model, {4}, 200.0, 78, mode, 3);
    CHECK(c.events.size() != a.events.size());

    REQUIRE(!a.events.empty());
    CHECK(a.events.front().flag == EventFlag::kStart);
    CHECK(a.events.front().time == 0.0);
    StateIndex prev = a.events.front().state;
    for (std::size_t i = 1; i < a.events.size(); ++i) {
      const auto& e = a.events[i];
      if (e.flag == EventFlag::kRedirect) {
        CHECK(a.events[i - 1].flag == EventFlag::kLeave);
        CHECK(e.time == a.events[i - 1].time);
      } else {
        CHECK(e.time > a.events[i - 1].time);
        CHECK(q.rate(prev, e.state) > 0.0);
      }
      if (e.flag == EventFlag::kLeave) {
        CHECK(i + 1 < a.events.size());
      }
      prev = e.state;
    }
    CHECK(a.events.back().time <= 200.0);
  }
}

TEST_CASE("accelerated chain on all of C follows returned(delta_s) path for path") {
  const auto m = small_bd();
  const SparseGenerator q = m.generator();
  const simulate::GeneratorJumpModel model(q);
  std::vector<StateIndex> all;
  for (std::size_t k = 1; k <= q.size(); ++k) all.push_back({k});
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto a = simulate::simulate(model, {4}, 500.0, seed,
                                      simulate::Accelerated{all, {4}});
    const auto r = simulate::simulate(model, {4}, 500.0, seed,
                                      simulate::Returned{ReturnDistribution::point_mass(q.size(), {4})});
    REQUIRE(a.events.size() == r.events.size());
    std::size_t redirects = 0;
    for (std::size_t i = 0; i < a.events.size(); ++i) {
      CHECK(a.events[i].time == r.events[i].time);
      CHECK(a.events[i].state == r.events[i].state);
      CHECK(a.events[i].flag == r.events[i].flag);
      if (a.events[i].flag == EventFlag::kRedirect) ++redirects;
    }
    CHECK(redirects > 0);
    CHECK(a.terminal == Terminal::kTruncatedAtTMax);
  }
}

TEST_CASE("cap overflow ends the path with a flag") {
  const simulate::BirthDeathJumpModel pure_birth([](std::size_t) { return 1.0; },
                                                 [](std::size_t) { return 0.0; }, 5);
  const auto path = simulate::simulate(pure_birth, {1}, 1e6, 9, simulate::Absorbing{});
  CHECK(path.terminal == Terminal::kCapExceeded);
  CHECK(path.events.back().state.id == 6);

  const simulate::BirthDeathJumpModel bad([](std::size_t) { return -1.0; },
                                          [](std::size_t) { return 1.0; }, 5);
  CHECK_THROWS_AS(simulate::simulate(bad, {2}, 1.0, 1, simulate::Absorbing{}), Error);
  CHECK_THROWS_AS(simulate::simulate(pure_birth, {0}, 1.0, 1, simulate::Absorbing{}), Error);
  CHECK_THROWS_AS(simulate::simulate(pure_birth, {2}, 1.0, 1,
                                     simulate::Accelerated{{{1}, {3}}, {1}}),
                  Error);

  const auto h = simulate::estimate_hitting(pure_birth, {3}, {4}, 100, 1);
  CHECK(h.cap_exceeded == 100);
  CHECK(h.p.replicates == 0);
}

TEST_CASE("returned-mode occupation converges to the stationary law") {
  const SparseGenerator q = two_state();
  const simulate::GeneratorJumpModel model(q);
  const auto mu = ReturnDistribution::point_mass(2, {1});
  const auto pi = ctmc::stationary_distribution(ctmc::build_returned_generator(q, mu));
  // Mean cycle length between returns is of order one; 10^4 of them.
  const auto occ = simulate::occupation_fractions(model, {1}, 1e4, 1, 21, simulate::Returned{mu});
  CHECK(occ.law.cemetery() == 0.0);
  CHECK(ctmc::total_variation(occ.law, pi) <= 0.02);

  // A larger chain with a spread-out return law.
  const auto m = small_bd();
  const SparseGenerator g = m.generator();
  const simulate::GeneratorJumpModel gm(g);
  const auto mu2 = ReturnDistribution::uniform(g.size(), {1}, {8});
  const auto pi2 = ctmc::stationary_distribution(ctmc::build_returned_generator(g, mu2));
  const auto occ2 = simulate::occupation_fractions(gm, {4}, 2e4, 4, 22, simulate::Returned{mu2});
  CHECK(ctmc::total_variation(occ2.law, pi2) <= 0.02);

  // Thread count does not change the answer.
  const auto one = simulate::occupation_fractions(gm, {4}, 50.0, 300, 5, simulate::Returned{mu2},
                                                  {1});
  const auto many = simulate::occupation_fractions(gm, {4}, 50.0, 300, 5, simulate::Returned{mu2},
                                                   {3});
  for (std::size_t k = 0; k < one.law.size(); ++k) {
    CHECK(one.law.values()[k] == many.law.values()[k]);
  }
}

TEST_CASE("empirical law at a fixed time") {
  const auto m = small_bd();
  const SparseGenerator q = m.generator();
  const simulate::GeneratorJumpModel model(q);

  const auto at0 = simulate::empirical_law_at(model, {7}, 0.0, 1000, 1, simulate::Absorbing{});
  CHECK(at0.law[{7}] == 1.0);
  CHECK(at0.law.cemetery() == 0.0);

  // Absorbing mode against uniformization, cemetery included.
  const auto init = ProbabilityVector::point_mass(q.size(), {4});
  const auto exact = ctmc::transient_distribution(q, init, 30.0);
  const auto emp = simulate::empirical_law_at(model, {4}, 30.0, 20000, 2, simulate::Absorbing{});
  CHECK(exact.cemetery() > 0.05);
  CHECK(std::abs(emp.law.cemetery() - exact.cemetery()) < 0.01);
  CHECK(ctmc::total_variation(emp.law, exact) <= 0.03);

  // Returned mode at a large time against the stationary law.
  const auto mu = ReturnDistribution::point_mass(q.size(), {4});
  const auto pi = ctmc::stationary_distribution(ctmc::build_returned_generator(q, mu));
  const auto late = simulate::empirical_law_at(model, {1}, 400.0, 10000, 3, simulate::Returned{mu});
  CHECK(late.law.cemetery() == 0.0);
  CHECK(ctmc::total_variation(late.law, pi) <= 0.05);

  const auto t1 = simulate::empirical_law_at(model, {4}, 5.0, 2000, 9, simulate::Absorbing{}, {1});
  const auto t4 = simulate::empirical_law_at(model, {4}, 5.0, 2000, 9, simulate::Absorbing{}, {4});
  for (std::size_t k = 0; k < t1.law.size(); ++k) CHECK(t1.law.values()[k] == t4.law.values()[k]);

  CHECK_THROWS_AS(simulate::empirical_law_at(model, {4}, 1.0, 999, 1, simulate::Absorbing{}), Error);
}

TEST_CASE("law conditioned on reaching s first") {
  const auto m = small_bd();
  const SparseGenerator q = m.generator();
  const std::size_t n = q.size();
  const simulate::GeneratorJumpModel model(q);
  const std::size_t s = 4;
  const std::size_t a = 9;
  std::vector<StateIndex> members;
  for (std::size_t k = 1; k <= a; ++k) members.push_back({k});

  SUBCASE("starting at s the event is sure and the law is unconditioned") {
    const auto cond =
        simulate::empirical_law_given_return(model, {s}, members, {s}, 3.0, 2000, 4, 100000);
    const auto plain = simulate::empirical_law_at(model, {s}, 3.0, 2000, 4, simulate::Absorbing{});
    CHECK(cond.attempted == 2000);
    for (std::size_t k = 0; k < n; ++k) CHECK(cond.law.values()[k] == plain.law.values()[k]);
    CHECK(cond.law.cemetery() == plain.law.cemetery());
  }

  SUBCASE("exact oracle from an augmented chain") {
    // States 1..n: the chain after it has reached s. States n+1..: copies of
    // members other than s, still waiting for the event to be decided.
    std::vector<std::size_t> copy(n + 1, 0);
    std::size_t next = n;
    for (StateIndex k : members) {
      if (k.id != s) copy[k.id] = ++next;
    }
    std::vector<Transition> t = q.transitions();
    for (StateIndex k : members) {
      if (k.id == s) continue;
      for (const auto& e : q.row(k)) {
        if (e.to.id == s) {
          t.push_back({{copy[k.id]}, {s}, e.rate});
        } else if (!e.to.is_cemetery() && e.to.id <= a) {
          t.push_back({{copy[k.id]}, {copy[e.to.id]}, e.rate});
        } else {
          t.push_back({{copy[k.id]}, ctmc::kCemetery, e.rate});
        }
      }
    }
    const SparseGenerator aug(next, t);
    const std::size_t start = 2;
    const double time = 2.5;
    const auto law = ctmc::transient_distribution(
        aug, ProbabilityVector::point_mass(next, {copy[start]}), time);

    std::vector<bool> stop(n, false);
    for (std::size_t k = a + 1; k <= n; ++k) stop[k - 1] = true;
    stop[s - 1] = true;
    const auto h = ctmc::hit_probability(q, stop, {s});
    std::vector<double> joint(n, 0.0);
    double on_c = 0.0;
    for (std::size_t j = 1; j <= n; ++j) {
      joint[j - 1] = law[{j}];
      if (j <= a && j != s) joint[j - 1] += law[{copy[j]}] * h[j - 1];
      on_c += joint[j - 1];
    }
    const double pa = h[start - 1];
    for (double& v : joint) v /= pa;
    const ProbabilityVector exact(joint, 1.0 - on_c / pa);

    const auto cond = simulate::empirical_law_given_return(model, {start}, members, {s}, time,
                                                           20000, 31, 1000000);
    CHECK(cond.replicates == 20000);
    CHECK(cond.attempted > 20000);
    const double accept = static_cast<double>(cond.replicates) / static_cast<double>(cond.attempted);
    CHECK(std::abs(accept - pa) < 4.0 * std::sqrt(pa * (1 - pa) / cond.attempted));
    CHECK(ctmc::total_variation(cond.law, exact) <= 0.03);
  }
}

TEST_CASE("serialization") {
  const std::vector<Transition> t{{{1}, {2}, 1.0}, {{2}, {0}, 1.0}};
  const SparseGenerator q(2, t);
  const simulate::GeneratorJumpModel model(q);
  const auto path = simulate::simulate(model, {1}, 100.0, 3, simulate::Absorbing{});
  std::ostringstream out;
  simulate::write_trajectory_csv(out, path);
  const std::string csv = out.str();
  CHECK(csv.rfind("time,state,flag\n0,1,start\n", 0) == 0);
  CHECK(csv.find(",0,jump\n") != std::string::npos);
  CHECK(path.terminal == Terminal::kAbsorbed);
  CHECK(simulate::to_string(path.terminal) == "absorbed");
  CHECK(path.state_at(0.0) == StateIndex{1});
  CHECK(path.state_at(1e9) == ctmc::kCemetery);

  const auto h = simulate::estimate_hitting(model, {2}, {1}, 200, 1);
  const auto j = nlohmann::json::parse(simulate::to_json(h));
  CHECK(j["p"]["estimate"].get<double>() == doctest::Approx(1.0));
  CHECK(j["T"]["replicates"].get<std::size_t>() == 200);
  CHECK(j["s"].get<std::size_t>() == 2);
}
