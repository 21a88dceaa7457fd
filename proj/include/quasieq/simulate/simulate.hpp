#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "quasieq/ctmc/generator.hpp"
#include "quasieq/ctmc/types.hpp"

namespace quasieq::simulate {

using ctmc::Edge;
using ctmc::StateIndex;

/// Source of outgoing rates for the simulator. States above cap() are not
/// represented; a jump there ends the path with kCapExceeded.
class JumpModel {
 public:
  virtual ~JumpModel() = default;
  virtual std::size_t cap() const = 0;
  /// Appends the positive-rate edges leaving `from` (a state of C) to `out`.
  virtual void outgoing(StateIndex from, std::vector<Edge>& out) const = 0;
};

/// Wraps a finite generator; states 1..n.
class GeneratorJumpModel final : public JumpModel {
 public:
  explicit GeneratorJumpModel(const ctmc::SparseGenerator& q) : q_(&q) {}
  std::size_t cap() const override { return q_->size(); }
  void outgoing(StateIndex from, std::vector<Edge>& out) const override;

 private:
  const ctmc::SparseGenerator* q_;
};

/// Birth-death rates given as functions of the state. Birth out of the cap
/// state goes to cap+1 and so trips the cap check.
class BirthDeathJumpModel final : public JumpModel {
 public:
  using RateFn = std::function<double(std::size_t)>;
  BirthDeathJumpModel(RateFn birth, RateFn death, std::size_t cap);
  std::size_t cap() const override { return cap_; }
  void outgoing(StateIndex from, std::vector<Edge>& out) const override;

 private:
  RateFn birth_;
  RateFn death_;
  std::size_t cap_;
};

// ---------------------------------------------------------------- modes ---

struct Absorbing {};
/// On reaching 0 the chain is put back into C according to mu.
struct Returned {
  ctmc::ReturnDistribution mu;
};
/// Restricted to `members`; every jump leaving them (0 included) is sent
/// back to s.
struct Accelerated {
  std::vector<StateIndex> members;
  StateIndex s;
};
using Mode = std::variant<Absorbing, Returned, Accelerated>;

// ----------------------------------------------------------- trajectory ---

enum class EventFlag : std::uint8_t {
  kStart,
  kJump,
  kLeave,     // target of a jump that is immediately redirected
  kRedirect,  // state the chain was put into, same time as the kLeave entry
};

enum class Terminal : std::uint8_t { kAbsorbed, kTruncatedAtTMax, kCapExceeded };

std::string to_string(EventFlag flag);
std::string to_string(Terminal terminal);

struct Event {
  double time = 0.0;
  StateIndex state;
  EventFlag flag = EventFlag::kJump;
};

struct Trajectory {
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
  std::vector<Event> events;
  Terminal terminal = Terminal::kTruncatedAtTMax;
  double t_max = 0.0;

  /// State occupied at time t (right-continuous); cemetery after absorption.
  StateIndex state_at(double t) const;
};

/// CSV with header "time,state,flag".
void write_trajectory_csv(std::ostream& out, const Trajectory& path);

// ------------------------------------------------------------------ rng ---

/// Independent stream per (master seed, replicate). Uniforms are built from
/// the top 53 bits so the sequence is identical across standard libraries.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t replicate);

  /// Uniform on (0, 1].
  double uniform();
  double exponential(double rate);

 private:
  std::mt19937_64 engine_;
};

// ------------------------------------------------------------ simulator ---

/// Receives the path as it is generated. `on_event` is called for every
/// entry of the trajectory; returning false stops the run early.
class Observer {
 public:
  virtual ~Observer() = default;
  virtual bool on_event(const Event& event) = 0;
  /// Called once with the final time reached (t_max unless stopped earlier).
  virtual void on_finish(double /*time*/, Terminal /*terminal*/) {}
};

struct RunLimits {
  double t_max = 0.0;
  std::uint64_t max_events = 100'000'000;
};

/// Streams one path to `observer` and returns how it ended. Throws
/// kInvalidInput for a bad initial state or mode, kNumericalFailure when the
/// event budget is exhausted.
Terminal run(const JumpModel& model, StateIndex init, const Mode& mode, const RunLimits& limits,
             Stream& rng, Observer& observer);

Trajectory simulate(const JumpModel& model, StateIndex init, double t_max, std::uint64_t seed,
                    const Mode& mode, std::uint64_t replicate = 0);

// ----------------------------------------------------------- estimators ---

struct EstimatorResult {
  double estimate = 0.0;
  double standard_error = 0.0;  // sample sd / sqrt(replicates)
  std::size_t replicates = 0;
};

struct HittingEstimate {
  StateIndex s;
  StateIndex k;
  EstimatorResult p;  // P_k[hit s before 0]; from s, after the first jump
  EstimatorResult T;  // E_k[time to hit {s, 0}]
  std::size_t cap_exceeded = 0;
};

struct ParallelOptions {
  unsigned threads = 0;  // 0 means hardware concurrency
};

/// Requires replicates >= 100.
HittingEstimate estimate_hitting(const JumpModel& model, StateIndex s, StateIndex k,
                                 std::size_t replicates, std::uint64_t seed,
                                 ParallelOptions parallel = {});

struct EmpiricalLaw {
  ctmc::ProbabilityVector law;  // over 1..cap, absorbed mass on the cemetery
  std::size_t replicates = 0;   // paths contributing
  std::size_t attempted = 0;    // paths simulated (differs under rejection)
  std::size_t cap_exceeded = 0;
};

/// Empirical law of X(t) from `init`. Requires replicates >= 1000.
EmpiricalLaw empirical_law_at(const JumpModel& model, StateIndex init, double t,
                              std::size_t replicates, std::uint64_t seed, const Mode& mode,
                              ParallelOptions parallel = {});

/// Law of X(t) from `init` given A: the absorbing chain hits s before
/// {0} or any state outside `members`. Paths failing A are rejected;
/// sampling continues until `accepted` paths are kept or `max_attempts`
/// paths have been drawn.
EmpiricalLaw empirical_law_given_return(const JumpModel& model, StateIndex init,
                                        std::span<const StateIndex> members, StateIndex s,
                                        double t, std::size_t accepted, std::uint64_t seed,
                                        std::size_t max_attempts, ParallelOptions parallel = {});

/// Fraction of [0, t_max] spent in each state, averaged over replicates.
EmpiricalLaw occupation_fractions(const JumpModel& model, StateIndex init, double t_max,
                                  std::size_t replicates, std::uint64_t seed, const Mode& mode,
                                  ParallelOptions parallel = {});

/// JSON object {"estimate", "standard_error", "replicates"}.
std::string to_json(const EstimatorResult& r);
std::string to_json(const HittingEstimate& h);

}  // namespace quasieq::simulate
