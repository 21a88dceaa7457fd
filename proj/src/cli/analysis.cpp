#include "analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <thread>

#include "quasieq/ctmc/generator.hpp"
#include "quasieq/ctmc/solvers.hpp"
#include "quasieq/ctmc/truncation.hpp"
#include "quasieq/error.hpp"

namespace quasieq::cli::detail {

using ctmc::ProbabilityVector;
using ctmc::StateIndex;

Settings read_settings(const Json& config, const Overrides& overrides) {
  const Section root(config, "config");
  root.allow_only({"title", "seed", "threads", "model", "return", "bounds", "solve", "window",
                   "simulate", "sweep"});
  Settings s;
  if (overrides.seed) {
    s.seed = *overrides.seed;
  } else if (root.has("seed")) {
    const auto v = root.integer("seed");
    if (v < 0) fail(ErrorKind::kConfig, "seed must be nonnegative");
    s.seed = static_cast<std::uint64_t>(v);
  }
  s.threads = overrides.threads;
  if (s.threads == 0 && root.has("threads")) {
    const auto v = root.integer("threads");
    if (v < 0) fail(ErrorKind::kConfig, "threads must be nonnegative");
    s.threads = static_cast<unsigned>(v);
  }

  const Section b = root.child("bounds");
  b.allow_only({"D", "M", "zeta_grid", "t_grid"});
  s.D = overrides.D ? *overrides.D : b.number("D", 1.0);
  if (!(s.D > 0.0)) fail(ErrorKind::kConfig, "D must be positive");
  s.M = b.optional_number("M");
  if (overrides.zeta_grid) {
    s.zeta_grid = *overrides.zeta_grid;
  } else if (b.has("zeta_grid")) {
    s.zeta_grid = grid_from_json(*b.raw("zeta_grid"), b.where("zeta_grid"));
  } else {
    s.zeta_grid = bounds::default_zeta_grid();
  }
  if (s.zeta_grid.empty()) fail(ErrorKind::kConfig, "the zeta grid is empty");
  for (double z : s.zeta_grid) {
    if (!(z > 0.0)) fail(ErrorKind::kConfig, "zeta grid values must be positive");
  }
  if (overrides.t_grid) {
    s.t_grid = *overrides.t_grid;
  } else if (b.has("t_grid")) {
    s.t_grid = grid_from_json(*b.raw("t_grid"), b.where("t_grid"));
  }
  for (double t : s.t_grid) {
    if (!(t > 0.0)) fail(ErrorKind::kConfig, "time grid values must be positive");
  }
  return s;
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) out += ',';
    out += cells[i];
  }
  return out;
}

ProbabilityVector returned_law(const ctmc::SparseGenerator& q, const ctmc::ReturnDistribution& mu) {
  return ctmc::stationary_distribution(ctmc::build_returned_generator(q, mu));
}

ProbabilityVector accelerated_law(const ctmc::SparseGenerator& q,
                                  const std::vector<StateIndex>& members, StateIndex s) {
  const auto restricted = ctmc::accelerated_return_generator(q, members, s);
  return restricted.lift(ctmc::stationary_distribution(restricted.generator), q.size());
}

double mass_outside(const ProbabilityVector& pi, const ctmc::TruncationPlan& plan) {
  double out = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    if (!plan.contains(StateIndex::from_pos(i))) out += pi.values()[i];
  }
  return out;
}

ChainContext analyze_chain(const ChainModel& chain, const ctmc::ReturnDistribution& mu,
                           const Settings& settings, const std::vector<double>& t_grid) {
  ChainContext ctx{chain, mu, ctmc::hitting_stats(chain.q, chain.s), 0.0, 1.0, {}};
  ctx.one_minus_p_s = chain.closed_form ? chain.closed_form->one_minus_ps(chain.s.id)
                                        : 1.0 - ctx.stats.p_s;
  ctx.M = settings.M ? *settings.M : std::max(1.0, ctx.stats.mean_T(mu) / ctx.stats.T_s);
  ctx.search = bounds::optimize_zeta(ctx.stats, ctx.M, t_grid, settings.D, settings.zeta_grid);
  return ctx;
}

std::vector<ProbabilityVector> transient_path(const ctmc::SparseGenerator& q,
                                              const ProbabilityVector& init,
                                              const std::vector<double>& ascending) {
  std::vector<ProbabilityVector> out;
  out.reserve(ascending.size());
  ProbabilityVector law = init;
  double now = 0.0;
  for (double t : ascending) {
    law = ctmc::transient_distribution(q, law, t - now);
    now = t;
    out.push_back(law);
  }
  return out;
}

std::optional<double> calibrate_D(const std::function<double(double)>& bound_at_D, double exact) {
  const double b1 = bound_at_D(1.0);
  const double slope = bound_at_D(2.0) - b1;
  if (!(slope > 0.0)) return std::nullopt;
  return std::max(0.0, (exact - (b1 - slope)) / slope);
}

void attach_bounds(const ChainContext& ctx, double D, std::vector<CurvePoint>& points) {
  const auto& rep = ctx.search.report;
  bounds::BoundInputs in = rep.inputs;
  for (auto& p : points) {
    try {
      in.D = D;
      p.eta = bounds::eta_bound(in, p.t);
      p.eta_D = calibrate_D(
          [&](double d) {
            bounds::BoundInputs x = in;
            x.D = d;
            return bounds::eta_bound(x, p.t);
          },
          p.tv_returned);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kBoundInapplicable) throw;
      p.eta_note = e.what();
    }
    auto tilde_at = [&](double d) {
      return bounds::tilde_bound(rep.T_tilde_plus, rep.T_tilde_s, rep.r_tilde, in.q_s, d, p.t);
    };
    try {
      p.tilde = tilde_at(D);
      p.tilde_D = calibrate_D(tilde_at, p.tv_accelerated);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kBoundInapplicable) throw;
      p.tilde_note = e.what();
    }
  }
}

std::vector<CurvePoint> exact_curve(const ChainContext& ctx, const std::vector<double>& t_grid,
                                    double D) {
  std::vector<double> ts = t_grid;
  std::sort(ts.begin(), ts.end());
  const auto& q = *ctx.chain.q;
  const std::size_t n = q.size();
  const auto pi_s = returned_law(q, ctmc::ReturnDistribution::point_mass(n, ctx.chain.s));
  const auto pi_tilde = accelerated_law(q, ctx.search.report.plan.members, ctx.chain.s);
  const auto laws = transient_path(q, ProbabilityVector::point_mass(n, ctx.chain.s), ts);
  std::vector<CurvePoint> points(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    points[i].t = ts[i];
    points[i].tv_returned = ctmc::total_variation(laws[i], pi_s);
    points[i].tv_accelerated = ctmc::total_variation(laws[i], pi_tilde);
  }
  attach_bounds(ctx, D, points);
  return points;
}

Json hitting_json(const ChainContext& ctx) {
  const auto& st = ctx.stats;
  double T_plus = 0.0;
  for (double t : st.T) T_plus = std::max(T_plus, t);
  return Json{{"s", st.s.id},
              {"p_min", st.p_min},
              {"p_s", st.p_s},
              {"one_minus_p_s", ctx.one_minus_p_s},
              {"T_s", st.T_s},
              {"T_plus", T_plus},
              {"q_s", st.q_s},
              {"mu_T", st.mean_T(ctx.mu)},
              {"M", ctx.M}};
}

Json model_json(const ChainModel& chain) {
  Json j{{"kind", to_string(chain.kind)}, {"states", chain.cap}, {"s", chain.s.id}};
  if (chain.density) {
    j["family"] = std::string(bd::to_string(chain.density->family));
    j["A"] = chain.density->A;
    j["c"] = chain.c;
    j["params"] = chain.density->params;
  }
  if (chain.closed_form) {
    const auto& tail = chain.closed_form->tail();
    j["tail"] = Json{{"infinite", tail.infinite},
                     {"divergent", tail.divergent},
                     {"relative_tail", tail.relative_tail},
                     {"ratio_at_cap", tail.ratio_at_cap}};
  }
  return j;
}

Json cap_stability(const ChainContext& ctx, const Json& config, const Overrides& overrides,
                   const std::filesystem::path& base_dir) {
  if (!ctx.chain.density) return nullptr;
  Overrides doubled = overrides;
  doubled.cap = 2 * ctx.chain.cap;
  const ChainModel big = build_chain(config, doubled, base_dir);
  const auto mu_big = build_return(config, big);
  const auto st_big = ctmc::hitting_stats(big.q, big.s);
  const double omp_big = big.closed_form->one_minus_ps(big.s.id);
  const double zeta = ctx.search.zeta;
  const double Tz = ctx.search.report.plan.T_zeta_plus;
  const double Tz_big = ctmc::select_truncation(st_big, zeta).T_zeta_plus;

  const auto& q = *ctx.chain.q;
  const double tv = ctmc::total_variation(
      returned_law(q, ctx.mu),
      returned_law(q, ctmc::ReturnDistribution::point_mass(q.size(), ctx.chain.s)));
  const double tv_big = ctmc::total_variation(
      returned_law(*big.q, mu_big),
      returned_law(*big.q, ctmc::ReturnDistribution::point_mass(big.q->size(), big.s)));

  auto rel = [](double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
  };
  const double worst = std::max({rel(ctx.one_minus_p_s, omp_big), rel(ctx.stats.T_s, st_big.T_s),
                                 rel(Tz, Tz_big), rel(tv, tv_big)});
  return Json{{"cap", ctx.chain.cap},
              {"doubled_cap", big.cap},
              {"one_minus_p_s", {ctx.one_minus_p_s, omp_big}},
              {"T_s", {ctx.stats.T_s, st_big.T_s}},
              {"T_zeta_plus", {Tz, Tz_big}},
              {"tv_mu_delta_s", {tv, tv_big}},
              {"max_relative_change", worst},
              {"stable", worst <= 1e-6}};
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min<std::size_t>(threads, n);
  std::vector<std::exception_ptr> errors(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += workers) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace quasieq::cli::detail
