#include "quasieq/simulate/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "quasieq/error.hpp"

namespace quasieq::simulate {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Replicates are grouped into fixed chunks so partial sums do not depend on
// how many threads ran them.
constexpr std::size_t kChunk = 64;

void check_rate(double r, std::size_t state, const char* what) {
  if (!std::isfinite(r) || r < 0.0) {
    fail(ErrorKind::kInvalidInput, std::string(what) + " rate at state " + std::to_string(state) +
                                       " is negative or not finite");
  }
}

unsigned thread_count(ParallelOptions parallel, std::size_t chunks) {
  unsigned t = parallel.threads;
  if (t == 0) t = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(t, std::max<std::size_t>(chunks, 1)));
}

// Calls fn(chunk, begin, end) for every chunk of [0, n).
template <class Fn>
void for_each_chunk(std::size_t n, ParallelOptions parallel, Fn&& fn) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  const unsigned threads = thread_count(parallel, chunks);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        fn(c, c * kChunk, std::min(n, (c + 1) * kChunk));
      } catch (...) {
        const std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(chunks);
        return;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
}

EstimatorResult summarize(std::span<const double> xs) {
  EstimatorResult r;
  r.replicates = xs.size();
  if (xs.empty()) return r;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  r.estimate = mean;
  if (xs.size() > 1) {
    const double var = ss / static_cast<double>(xs.size() - 1);
    r.standard_error = std::sqrt(var / static_cast<double>(xs.size()));
  }
  return r;
}

// Mode data prepared once per run.
struct Prepared {
  enum class Kind { kAbsorbing, kReturned, kAccelerated } kind = Kind::kAbsorbing;
  std::vector<StateIndex> mu_support;
  std::vector<double> mu_cumulative;
  std::vector<bool> member;  // indexed by state id, size cap + 2
  StateIndex s;

  bool is_member(StateIndex k) const { return k.id < member.size() && member[k.id]; }
};

Prepared prepare(const JumpModel& model, StateIndex init, const Mode& mode) {
  const std::size_t cap = model.cap();
  if (init.is_cemetery() || init.id > cap) {
    fail(ErrorKind::kInvalidInput,
         "initial state " + std::to_string(init.id) + " is outside 1.." + std::to_string(cap));
  }
  Prepared p;
  if (const auto* r = std::get_if<Returned>(&mode)) {
    p.kind = Prepared::Kind::kReturned;
    if (r->mu.size() > cap) {
      fail(ErrorKind::kInvalidInput, "return distribution has support beyond the cap");
    }
    double acc = 0.0;
    for (StateIndex k : r->mu.support()) {
      acc += r->mu[k];
      p.mu_support.push_back(k);
      p.mu_cumulative.push_back(acc);
    }
    if (p.mu_support.empty()) fail(ErrorKind::kInvalidDistribution, "return distribution is empty");
  } else if (const auto* a = std::get_if<Accelerated>(&mode)) {
    p.kind = Prepared::Kind::kAccelerated;
    p.s = a->s;
    p.member.assign(cap + 2, false);
    for (StateIndex k : a->members) {
      if (k.is_cemetery() || k.id > cap) {
        fail(ErrorKind::kInvalidTruncation, "member " + std::to_string(k.id) + " is outside C");
      }
      p.member[k.id] = true;
    }
    if (!p.is_member(a->s)) fail(ErrorKind::kInvalidTruncation, "members must contain s");
    if (!p.is_member(init)) {
      fail(ErrorKind::kInvalidInput, "initial state must be a member in accelerated mode");
    }
  }
  return p;
}

StateIndex draw_return(const Prepared& p, Stream& rng) {
  // A point mass needs no draw, which keeps returned(delta_s) and the
  // accelerated chain with members = C on the same random stream.
  if (p.mu_support.size() == 1) return p.mu_support.front();
  const double u = rng.uniform() * p.mu_cumulative.back();
  const auto it = std::lower_bound(p.mu_cumulative.begin(), p.mu_cumulative.end(), u);
  const auto idx = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
      it - p.mu_cumulative.begin(), static_cast<std::ptrdiff_t>(p.mu_support.size()) - 1));
  return p.mu_support[idx];
}

class Recorder final : public Observer {
 public:
  explicit Recorder(Trajectory& path) : path_(path) {}
  bool on_event(const Event& e) override {
    path_.events.push_back(e);
    return true;
  }

 private:
  Trajectory& path_;
};

}  // namespace

// ---------------------------------------------------------------- models ---

void GeneratorJumpModel::outgoing(StateIndex from, std::vector<Edge>& out) const {
  for (const Edge& e : q_->row(from)) out.push_back(e);
}

BirthDeathJumpModel::BirthDeathJumpModel(RateFn birth, RateFn death, std::size_t cap)
    : birth_(std::move(birth)), death_(std::move(death)), cap_(cap) {
  if (cap_ == 0) fail(ErrorKind::kInvalidInput, "cap must be at least 1");
}

void BirthDeathJumpModel::outgoing(StateIndex from, std::vector<Edge>& out) const {
  const std::size_t j = from.id;
  const double d = death_(j);
  const double b = birth_(j);
  check_rate(d, j, "death");
  check_rate(b, j, "birth");
  if (d > 0.0) out.push_back({StateIndex{j - 1}, d});
  if (b > 0.0) out.push_back({StateIndex{j + 1}, b});
}

// ------------------------------------------------------------ trajectory ---

std::string to_string(EventFlag flag) {
  switch (flag) {
    case EventFlag::kStart: return "start";
    case EventFlag::kJump: return "jump";
    case EventFlag::kLeave: return "leave";
    case EventFlag::kRedirect: return "redirect";
  }
  return "?";
}

std::string to_string(Terminal terminal) {
  switch (terminal) {
    case Terminal::kAbsorbed: return "absorbed";
    case Terminal::kTruncatedAtTMax: return "truncated-at-t_max";
    case Terminal::kCapExceeded: return "cap-exceeded";
  }
  return "?";
}

StateIndex Trajectory::state_at(double t) const {
  StateIndex current;
  for (const Event& e : events) {
    if (e.time > t) break;
    current = e.state;
  }
  return current;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& path) {
  out << "time,state,flag\n";
  out.precision(17);
  for (const Event& e : path.events) {
    out << e.time << ',' << e.state.id << ',' << to_string(e.flag) << '\n';
  }
}

// ------------------------------------------------------------------- rng ---

Stream::Stream(std::uint64_t seed, std::uint64_t replicate) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(replicate),
                    static_cast<std::uint32_t>(replicate >> 32)};
  engine_.seed(seq);
}

double Stream::uniform() {
  return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
}

double Stream::exponential(double rate) { return -std::log(uniform()) / rate; }

// ------------------------------------------------------------- simulator ---

Terminal run(const JumpModel& model, StateIndex init, const Mode& mode, const RunLimits& limits,
             Stream& rng, Observer& observer) {
  const Prepared prep = prepare(model, init, mode);
  const std::size_t cap = model.cap();
  std::vector<Edge> edges;
  StateIndex x = init;
  double t = 0.0;
  std::uint64_t count = 0;

  auto finish = [&](double when, Terminal term) {
    observer.on_finish(when, term);
    return term;
  };
  if (!observer.on_event({0.0, x, EventFlag::kStart})) {
    return finish(0.0, Terminal::kTruncatedAtTMax);
  }

  for (;;) {
    if (++count > limits.max_events) {
      fail(ErrorKind::kNumericalFailure,
           "simulation exceeded " + std::to_string(limits.max_events) + " events");
    }
    edges.clear();
    model.outgoing(x, edges);
    double total = 0.0;
    for (const Edge& e : edges) total += e.rate;
    if (!(total > 0.0)) return finish(limits.t_max, Terminal::kTruncatedAtTMax);

    const double dt = rng.exponential(total);
    if (t + dt > limits.t_max) return finish(limits.t_max, Terminal::kTruncatedAtTMax);
    t += dt;

    double u = rng.uniform() * total;
    StateIndex y = edges.back().to;
    for (const Edge& e : edges) {
      if (u <= e.rate) {
        y = e.to;
        break;
      }
      u -= e.rate;
    }

    switch (prep.kind) {
      case Prepared::Kind::kAbsorbing:
      case Prepared::Kind::kReturned:
        if (y.id > cap) {
          observer.on_event({t, y, EventFlag::kJump});
          return finish(t, Terminal::kCapExceeded);
        }
        if (y.is_cemetery()) {
          if (prep.kind == Prepared::Kind::kAbsorbing) {
            observer.on_event({t, y, EventFlag::kJump});
            return finish(t, Terminal::kAbsorbed);
          }
          if (!observer.on_event({t, y, EventFlag::kLeave})) {
            return finish(t, Terminal::kTruncatedAtTMax);
          }
          y = draw_return(prep, rng);
          if (!observer.on_event({t, y, EventFlag::kRedirect})) {
            return finish(t, Terminal::kTruncatedAtTMax);
          }
          x = y;
          continue;
        }
        break;
      case Prepared::Kind::kAccelerated:
        if (!prep.is_member(y)) {
          if (!observer.on_event({t, y, EventFlag::kLeave})) {
            return finish(t, Terminal::kTruncatedAtTMax);
          }
          y = prep.s;
          if (!observer.on_event({t, y, EventFlag::kRedirect})) {
            return finish(t, Terminal::kTruncatedAtTMax);
          }
          x = y;
          continue;
        }
        break;
    }
    x = y;
    if (!observer.on_event({t, x, EventFlag::kJump})) return finish(t, Terminal::kTruncatedAtTMax);
  }
}

Trajectory simulate(const JumpModel& model, StateIndex init, double t_max, std::uint64_t seed,
                    const Mode& mode, std::uint64_t replicate) {
  if (!(t_max >= 0.0)) fail(ErrorKind::kInvalidInput, "t_max must be nonnegative");
  Trajectory path;
  path.seed = seed;
  path.replicate = replicate;
  path.t_max = t_max;
  Stream rng(seed, replicate);
  Recorder rec(path);
  path.terminal = run(model, init, mode, {t_max}, rng, rec);
  return path;
}

// ------------------------------------------------------------ estimators ---

namespace {

class HittingObserver final : public Observer {
 public:
  explicit HittingObserver(StateIndex s) : s_(s) {}
  bool on_event(const Event& e) override {
    if (e.flag == EventFlag::kStart) return true;
    if (e.state == s_) {
      hit_ = true;
      time_ = e.time;
      return false;
    }
    if (e.state.is_cemetery()) {
      time_ = e.time;
      return false;
    }
    return true;
  }
  void on_finish(double, Terminal terminal) override { terminal_ = terminal; }

  bool hit_ = false;
  double time_ = 0.0;
  Terminal terminal_ = Terminal::kTruncatedAtTMax;

 private:
  StateIndex s_;
};

class LawObserver final : public Observer {
 public:
  explicit LawObserver(double t) : t_(t) {}
  bool on_event(const Event& e) override {
    if (e.time > t_) return false;
    state_ = e.state;
    return true;
  }
  StateIndex state_;

 private:
  double t_;
};

// Decides A = {hit s before 0 or a non-member} and records X(t).
class ConditionedObserver final : public Observer {
 public:
  ConditionedObserver(const std::vector<bool>& member, StateIndex s, double t)
      : member_(member), s_(s), t_(t) {}
  bool on_event(const Event& e) override {
    if (!have_law_ && e.time > t_) {
      law_ = current_;
      have_law_ = true;
    }
    current_ = e.state;
    if (!decided_) {
      if (e.state == s_) {
        decided_ = accepted_ = true;
      } else if (e.state.is_cemetery() || e.state.id >= member_.size() || !member_[e.state.id]) {
        decided_ = true;
        return false;
      }
    }
    return !(decided_ && have_law_);
  }
  void on_finish(double, Terminal terminal) override {
    terminal_ = terminal;
    if (!have_law_) {
      law_ = current_;
      have_law_ = true;
    }
  }

  bool decided_ = false;
  bool accepted_ = false;
  bool have_law_ = false;
  StateIndex law_;
  Terminal terminal_ = Terminal::kTruncatedAtTMax;

 private:
  const std::vector<bool>& member_;
  StateIndex s_;
  double t_;
  StateIndex current_;
};

class OccupationObserver final : public Observer {
 public:
  explicit OccupationObserver(std::vector<double>& time_in) : time_in_(time_in) {}
  bool on_event(const Event& e) override {
    add(e.time);
    current_ = e.state;
    return true;
  }
  void on_finish(double time, Terminal terminal) override {
    terminal_ = terminal;
    if (terminal == Terminal::kTruncatedAtTMax || terminal == Terminal::kAbsorbed) {
      add(time);
    }
  }
  double last_ = 0.0;
  Terminal terminal_ = Terminal::kTruncatedAtTMax;

 private:
  void add(double t) {
    if (current_.id < time_in_.size()) time_in_[current_.id] += t - last_;
    last_ = t;
  }
  std::vector<double>& time_in_;
  StateIndex current_;
};

ctmc::ProbabilityVector law_from_counts(std::span<const double> by_id, double denom) {
  std::vector<double> over_c(by_id.size() - 1);
  for (std::size_t i = 1; i < by_id.size(); ++i) over_c[i - 1] = by_id[i] / denom;
  return ctmc::ProbabilityVector(std::move(over_c), by_id[0] / denom);
}

}  // namespace

HittingEstimate estimate_hitting(const JumpModel& model, StateIndex s, StateIndex k,
                                 std::size_t replicates, std::uint64_t seed,
                                 ParallelOptions parallel) {
  if (replicates < 100) fail(ErrorKind::kInvalidInput, "estimate_hitting needs >= 100 replicates");
  if (s.is_cemetery() || s.id > model.cap()) {
    fail(ErrorKind::kInvalidInput, "center state is outside C");
  }
  std::vector<double> hit(replicates, 0.0);
  std::vector<double> time(replicates, 0.0);
  std::vector<char> lost(replicates, 0);
  for_each_chunk(replicates, parallel, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Stream rng(seed, i);
      HittingObserver obs(s);
      run(model, k, Absorbing{}, {kInf}, rng, obs);
      if (obs.terminal_ == Terminal::kCapExceeded) {
        lost[i] = 1;
        continue;
      }
      hit[i] = obs.hit_ ? 1.0 : 0.0;
      time[i] = obs.time_;
    }
  });
  // Paths that overflow the cap carry no value for either estimator.
  std::vector<double> h;
  std::vector<double> tt;
  HittingEstimate out;
  out.s = s;
  out.k = k;
  for (std::size_t i = 0; i < replicates; ++i) {
    if (lost[i]) {
      ++out.cap_exceeded;
      continue;
    }
    h.push_back(hit[i]);
    tt.push_back(time[i]);
  }
  out.p = summarize(h);
  out.T = summarize(tt);
  return out;
}

EmpiricalLaw empirical_law_at(const JumpModel& model, StateIndex init, double t,
                              std::size_t replicates, std::uint64_t seed, const Mode& mode,
                              ParallelOptions parallel) {
  if (replicates < 1000) fail(ErrorKind::kInvalidInput, "empirical_law_at needs >= 1000 replicates");
  if (!(t >= 0.0)) fail(ErrorKind::kInvalidInput, "t must be nonnegative");
  const std::size_t cap = model.cap();
  std::vector<std::size_t> where(replicates, 0);
  std::vector<char> lost(replicates, 0);
  for_each_chunk(replicates, parallel, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Stream rng(seed, i);
      LawObserver obs(t);
      const Terminal term = run(model, init, mode, {t}, rng, obs);
      if (term == Terminal::kCapExceeded) {
        lost[i] = 1;
        continue;
      }
      where[i] = obs.state_.id;
    }
  });
  std::vector<double> counts(cap + 1, 0.0);
  EmpiricalLaw out;
  out.attempted = replicates;
  for (std::size_t i = 0; i < replicates; ++i) {
    if (lost[i]) {
      ++out.cap_exceeded;
    } else {
      counts[where[i]] += 1.0;
    }
  }
  out.replicates = replicates;
  out.law = law_from_counts(counts, static_cast<double>(replicates));
  return out;
}

EmpiricalLaw empirical_law_given_return(const JumpModel& model, StateIndex init,
                                        std::span<const StateIndex> members, StateIndex s,
                                        double t, std::size_t accepted, std::uint64_t seed,
                                        std::size_t max_attempts, ParallelOptions parallel) {
  if (accepted < 1000) fail(ErrorKind::kInvalidInput, "conditioned law needs >= 1000 replicates");
  if (!(t >= 0.0)) fail(ErrorKind::kInvalidInput, "t must be nonnegative");
  const std::size_t cap = model.cap();
  std::vector<bool> member(cap + 2, false);
  for (StateIndex k : members) {
    if (k.is_cemetery() || k.id > cap) fail(ErrorKind::kInvalidTruncation, "member outside C");
    member[k.id] = true;
  }
  if (!member[s.id]) fail(ErrorKind::kInvalidTruncation, "members must contain s");
  if (init.is_cemetery() || init.id > cap || !member[init.id]) {
    fail(ErrorKind::kInvalidInput, "initial state must be a member");
  }

  std::vector<double> counts(cap + 1, 0.0);
  EmpiricalLaw out;
  std::size_t kept = 0;
  std::size_t drawn = 0;
  // Batches are processed in replicate order and the tally stops at exactly
  // `accepted` kept paths, so the result does not depend on thread timing.
  const std::size_t batch = std::max<std::size_t>(accepted, 16 * kChunk);
  while (kept < accepted && drawn < max_attempts) {
    const std::size_t n = std::min(batch, max_attempts - drawn);
    std::vector<std::size_t> where(n, 0);
    std::vector<char> status(n, 0);  // 0 rejected, 1 accepted, 2 cap exceeded
    for_each_chunk(n, parallel, [&](std::size_t, std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        Stream rng(seed, drawn + i);
        ConditionedObserver obs(member, s, t);
        run(model, init, Absorbing{}, {kInf}, rng, obs);
        if (obs.terminal_ == Terminal::kCapExceeded && !obs.decided_) {
          status[i] = 2;
        } else if (obs.accepted_) {
          status[i] = obs.terminal_ == Terminal::kCapExceeded && obs.law_.id > cap ? 2 : 1;
          where[i] = obs.law_.id;
        }
      }
    });
    for (std::size_t i = 0; i < n && kept < accepted; ++i) {
      ++out.attempted;
      if (status[i] == 2) {
        ++out.cap_exceeded;
      } else if (status[i] == 1) {
        counts[where[i]] += 1.0;
        ++kept;
      }
    }
    drawn += n;
  }
  if (kept == 0) fail(ErrorKind::kNumericalFailure, "no path satisfied the conditioning event");
  out.replicates = kept;
  out.law = law_from_counts(counts, static_cast<double>(kept));
  return out;
}

EmpiricalLaw occupation_fractions(const JumpModel& model, StateIndex init, double t_max,
                                  std::size_t replicates, std::uint64_t seed, const Mode& mode,
                                  ParallelOptions parallel) {
  if (replicates == 0) fail(ErrorKind::kInvalidInput, "need at least one replicate");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) {
    fail(ErrorKind::kInvalidInput, "t_max must be positive and finite");
  }
  const std::size_t cap = model.cap();
  const std::size_t chunks = (replicates + kChunk - 1) / kChunk;
  std::vector<std::vector<double>> partial(chunks);
  std::vector<std::size_t> lost(chunks, 0);
  for_each_chunk(replicates, parallel, [&](std::size_t c, std::size_t begin, std::size_t end) {
    std::vector<double> acc(cap + 1, 0.0);
    std::vector<double> one(cap + 1, 0.0);
    for (std::size_t i = begin; i < end; ++i) {
      std::fill(one.begin(), one.end(), 0.0);
      Stream rng(seed, i);
      OccupationObserver obs(one);
      const Terminal term = run(model, init, mode, {t_max}, rng, obs);
      if (term == Terminal::kCapExceeded) {
        ++lost[c];
        continue;
      }
      if (term == Terminal::kAbsorbed) one[0] += t_max - obs.last_;
      for (std::size_t j = 0; j <= cap; ++j) acc[j] += one[j];
    }
    partial[c] = std::move(acc);
  });
  std::vector<double> total(cap + 1, 0.0);
  EmpiricalLaw out;
  out.attempted = replicates;
  for (std::size_t c = 0; c < chunks; ++c) {
    out.cap_exceeded += lost[c];
    for (std::size_t j = 0; j <= cap; ++j) total[j] += partial[c][j];
  }
  out.replicates = replicates - out.cap_exceeded;
  if (out.replicates == 0) fail(ErrorKind::kNumericalFailure, "every path exceeded the cap");
  out.law = law_from_counts(total, t_max * static_cast<double>(out.replicates));
  return out;
}

std::string to_json(const EstimatorResult& r) {
  const nlohmann::json j{{"estimate", r.estimate},
                         {"standard_error", r.standard_error},
                         {"replicates", r.replicates}};
  return j.dump();
}

std::string to_json(const HittingEstimate& h) {
  const nlohmann::json j{
      {"s", h.s.id},
      {"k", h.k.id},
      {"p", nlohmann::json::parse(to_json(h.p))},
      {"T", nlohmann::json::parse(to_json(h.T))},
      {"cap_exceeded", h.cap_exceeded},
  };
  return j.dump();
}

}  // namespace quasieq::simulate
