#pragma once

// Finite, fully observed environments (observation == state) and the
// scripted decision scenarios used to illustrate value freedom.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "liberum/error.hpp"
#include "liberum/freedom.hpp"
#include "liberum/random.hpp"

namespace liberum {

using StateId = std::size_t;

struct Observation {
  StateId state_id = 0;
  friend bool operator==(const Observation&, const Observation&) = default;
};

struct StepResult {
  Observation next_obs;
  double reward = 0.0;
  bool terminal = false;   // the episode is over (terminal state or horizon)
  bool truncated = false;  // ended by the horizon rather than a terminal state
};

struct EnvSpec {
  std::size_t num_states = 1;
  std::size_t num_actions = 1;
  std::string name;
  std::size_t horizon = 1;
  std::uint64_t seed = 0;
};

/// Exact tabular dynamics: P(s'|s,a), E[r|s,a] and the set of absorbing
/// terminal states (which self-loop with zero reward in the tables).
class Dynamics {
 public:
  Dynamics(std::size_t num_states, std::size_t num_actions)
      : num_states_(num_states),
        num_actions_(num_actions),
        transition_(num_states * num_actions * num_states, 0.0),
        reward_(num_states * num_actions, 0.0),
        terminal_(num_states, false) {
    if (num_states == 0 || num_actions == 0) throw InvalidInput("dynamics need states and actions");
  }

  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_actions() const noexcept { return num_actions_; }

  double& p(StateId s, ActionId a, StateId next) { return transition_[index(s, a) * num_states_ + next]; }
  double p(StateId s, ActionId a, StateId next) const { return transition_[index(s, a) * num_states_ + next]; }
  double& r(StateId s, ActionId a) { return reward_[index(s, a)]; }
  double r(StateId s, ActionId a) const { return reward_[index(s, a)]; }

  std::span<const double> row(StateId s, ActionId a) const {
    return {transition_.data() + index(s, a) * num_states_, num_states_};
  }

  bool terminal(StateId s) const { return terminal_.at(s); }

  // Marks s absorbing: every action self-loops with zero reward.
  void set_terminal(StateId s) {
    terminal_.at(s) = true;
    for (ActionId a = 0; a < num_actions_; ++a) {
      for (StateId n = 0; n < num_states_; ++n) p(s, a, n) = 0.0;
      p(s, a, s) = 1.0;
      r(s, a) = 0.0;
    }
  }

  bool deterministic() const {
    for (double x : transition_)
      if (x != 0.0 && x != 1.0) return false;
    return true;
  }

  void validate(double tol = 1e-9) const {
    for (StateId s = 0; s < num_states_; ++s)
      for (ActionId a = 0; a < num_actions_; ++a) {
        double total = 0.0;
        for (double x : row(s, a)) {
          if (!(x >= 0.0)) throw InvalidInput("negative transition probability");
          total += x;
        }
        if (std::abs(total - 1.0) > tol)
          throw InvalidInput("transition row (" + std::to_string(s) + "," + std::to_string(a) +
                             ") is not stochastic");
        if (!std::isfinite(r(s, a))) throw InvalidInput("non-finite reward");
      }
  }

  friend bool operator==(const Dynamics&, const Dynamics&) = default;

 private:
  std::size_t index(StateId s, ActionId a) const {
    if (s >= num_states_ || a >= num_actions_) throw InvalidInput("dynamics index out of range");
    return s * num_actions_ + a;
  }

  std::size_t num_states_;
  std::size_t num_actions_;
  std::vector<double> transition_;
  std::vector<double> reward_;
  std::vector<bool> terminal_;
};

/// One sampled transition of a simulator.
struct Transition {
  StateId next = 0;
  double reward = 0.0;
};

/// Episodic simulator over a finite MDP. Subclasses provide the kernel via
/// simulate() and its exact tables via true_dynamics().
class Environment {
 public:
  virtual ~Environment() = default;

  const EnvSpec& spec() const noexcept { return spec_; }
  std::size_t num_states() const noexcept { return spec_.num_states; }
  std::size_t num_actions() const noexcept { return spec_.num_actions; }

  Observation reset(std::uint64_t seed) {
    rng_.seed(seed);
    state_ = start_state();
    steps_ = 0;
    finished_ = false;
    return {state_};
  }

  StepResult step(ActionId action) {
    if (action >= spec_.num_actions)
      throw InvalidAction("action " + std::to_string(action) + " out of range for " + spec_.name);
    if (finished_) throw EpisodeFinished(spec_.name + ": step after the episode ended");
    const Transition tr = simulate(state_, action, rng_);
    state_ = tr.next;
    ++steps_;
    StepResult out{{state_}, tr.reward, false, false};
    if (is_terminal(state_)) {
      out.terminal = true;
    } else if (steps_ >= spec_.horizon) {
      out.terminal = true;
      out.truncated = true;
    }
    finished_ = out.terminal;
    return out;
  }

  Observation observation() const noexcept { return {state_}; }
  bool finished() const noexcept { return finished_; }
  std::size_t steps_taken() const noexcept { return steps_; }

  virtual StateId start_state() const = 0;
  virtual bool is_terminal(StateId s) const = 0;
  virtual Dynamics true_dynamics() const = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;
  virtual std::string action_label(ActionId a) const { return "a" + std::to_string(a); }

 protected:
  explicit Environment(EnvSpec spec) : spec_(std::move(spec)) {
    if (spec_.num_states == 0 || spec_.num_actions == 0)
      throw InvalidInput("environment needs at least one state and one action");
    if (spec_.horizon == 0) throw InvalidInput("horizon must be at least 1");
  }

  // Must be deterministic given the rng state.
  virtual Transition simulate(StateId s, ActionId a, Rng& rng) const = 0;

  void init() { reset(spec_.seed); }

 private:
  EnvSpec spec_;
  Rng rng_{0};
  StateId state_ = 0;
  std::size_t steps_ = 0;
  bool finished_ = false;
};

// ---------------------------------------------------------------------------

/// Single-state bandit; every pull ends the episode (horizon 1 by default).
class KArmedBandit final : public Environment {
 public:
  explicit KArmedBandit(std::vector<double> means, double noise_sd = 0.0, std::uint64_t seed = 0,
                        std::size_t horizon = 1)
      : Environment({1, means.size(), "k_armed_bandit", horizon, seed}),
        means_(std::move(means)),
        noise_sd_(noise_sd) {
    if (means_.empty()) throw InvalidInput("bandit needs at least one arm");
    if (!(noise_sd_ >= 0.0)) throw InvalidInput("bandit noise must be non-negative");
    init();
  }

  const std::vector<double>& means() const noexcept { return means_; }
  double noise_sd() const noexcept { return noise_sd_; }

  StateId start_state() const override { return 0; }
  bool is_terminal(StateId) const override { return false; }

  Dynamics true_dynamics() const override {
    Dynamics d(1, means_.size());
    for (ActionId a = 0; a < means_.size(); ++a) {
      d.p(0, a, 0) = 1.0;
      d.r(0, a) = means_[a];
    }
    return d;
  }

  std::unique_ptr<Environment> clone() const override { return std::make_unique<KArmedBandit>(*this); }
  std::string action_label(ActionId a) const override { return "arm" + std::to_string(a); }

 protected:
  Transition simulate(StateId, ActionId a, Rng& rng) const override {
    double r = means_[a];
    if (noise_sd_ > 0.0) r += noise_sd_ * standard_normal(rng);
    return {0, r};
  }

 private:
  std::vector<double> means_;
  double noise_sd_;
};

// ---------------------------------------------------------------------------

/// Grid with a key and a locked door. The agent starts in the top-left
/// corner, the key lies in the bottom-left corner and the door occupies the
/// top-right corner. The door cell cannot be walked into; using OpenDoor from
/// an orthogonally adjacent cell while holding the key moves the agent through
/// the door (a terminal state) and pays +1. Every other transition pays 0.
///
/// State id = cell + has_key * width * height, cell = y * width + x.
class KeyDoorGridworld final : public Environment {
 public:
  enum Action : ActionId { Up = 0, Down, Left, Right, PickKey, OpenDoor, NoOp, kNumActions };

  KeyDoorGridworld(std::size_t width, std::size_t height, std::size_t horizon = 50,
                   std::uint64_t seed = 0)
      : Environment({width * height * 2, kNumActions, "key_door", horizon, seed}),
        width_(width),
        height_(height) {
    if (width < 2 || height < 2) throw InvalidInput("key-door grid must be at least 2x2");
    init();
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t num_cells() const noexcept { return width_ * height_; }

  std::size_t cell(std::size_t x, std::size_t y) const { return y * width_ + x; }
  StateId state(std::size_t x, std::size_t y, bool has_key) const {
    return cell(x, y) + (has_key ? num_cells() : 0);
  }
  std::size_t x_of(StateId s) const { return (s % num_cells()) % width_; }
  std::size_t y_of(StateId s) const { return (s % num_cells()) / width_; }
  bool has_key(StateId s) const { return s >= num_cells(); }

  std::size_t key_cell() const { return cell(0, height_ - 1); }
  std::size_t door_cell() const { return cell(width_ - 1, 0); }
  bool adjacent_to_door(StateId s) const {
    const std::size_t x = x_of(s), y = y_of(s);
    const std::size_t dx = width_ - 1, dy = 0;
    const std::size_t manhattan = (x > dx ? x - dx : dx - x) + (y > dy ? y - dy : dy - y);
    return manhattan == 1;
  }

  StateId start_state() const override { return state(0, 0, false); }
  bool is_terminal(StateId s) const override { return s % num_cells() == door_cell(); }

  /// Deterministic kernel.
  Transition transition(StateId s, ActionId a) const {
    if (is_terminal(s)) return {s, 0.0};
    const bool key = has_key(s);
    std::size_t x = x_of(s), y = y_of(s);
    switch (a) {
      case Up:
      case Down:
      case Left:
      case Right: {
        std::size_t nx = x, ny = y;
        if (a == Up && y > 0) ny = y - 1;
        if (a == Down && y + 1 < height_) ny = y + 1;
        if (a == Left && x > 0) nx = x - 1;
        if (a == Right && x + 1 < width_) nx = x + 1;
        if (cell(nx, ny) == door_cell()) return {s, 0.0};
        return {state(nx, ny, key), 0.0};
      }
      case PickKey:
        if (!key && cell(x, y) == key_cell()) return {state(x, y, true), 0.0};
        return {s, 0.0};
      case OpenDoor:
        if (key && adjacent_to_door(s)) return {door_cell() + num_cells(), 1.0};
        return {s, 0.0};
      default:
        return {s, 0.0};
    }
  }

  Dynamics true_dynamics() const override {
    Dynamics d(num_states(), num_actions());
    for (StateId s = 0; s < num_states(); ++s) {
      if (is_terminal(s)) {
        d.set_terminal(s);
        continue;
      }
      for (ActionId a = 0; a < num_actions(); ++a) {
        const Transition t = transition(s, a);
        d.p(s, a, t.next) = 1.0;
        d.r(s, a) = t.reward;
      }
    }
    return d;
  }

  std::unique_ptr<Environment> clone() const override { return std::make_unique<KeyDoorGridworld>(*this); }

  std::string action_label(ActionId a) const override {
    static const char* names[] = {"up", "down", "left", "right", "pick_key", "open_door", "noop"};
    return a < kNumActions ? names[a] : "invalid";
  }

 protected:
  Transition simulate(StateId s, ActionId a, Rng&) const override { return transition(s, a); }

 private:
  std::size_t width_;
  std::size_t height_;
};

// ---------------------------------------------------------------------------

/// A trader's day repeated over the horizon, interleaving a rewarded trading
/// task with a cosmetic wardrobe task:
///
///   desk (0)        action 0 goes long, 1 goes short; the market turns to
///                   boom with probability boom_probability, else calm
///   wardrobe (1)    the action picks today's tie; nothing else changes
///   commute (2)     no effect
///   office (3)      no effect
///   settlement (4)  pays +payoff(market) when long, -payoff when short,
///                   then the position is closed
///
/// The tie sits kTieToSettlement steps before the payout and never touches
/// the trading component of the state.
class InterleavedTasks final : public Environment {
 public:
  enum Phase : std::size_t { Desk = 0, Wardrobe, Commute, Office, Settlement, kNumPhases };
  enum Position : std::size_t { Flat = 0, Long, Short, kNumPositions };
  static constexpr std::size_t kNumTies = 2;
  static constexpr std::size_t kNumMarkets = 2;  // 0 calm, 1 boom
  static constexpr std::size_t kTieToSettlement = Settlement - Wardrobe;

  explicit InterleavedTasks(std::size_t horizon = 20, std::uint64_t seed = 0,
                            double boom_probability = 0.5, double calm_payoff = 0.5,
                            double boom_payoff = 1.5)
      : Environment({std::size_t{kNumPhases} * std::size_t{kNumPositions} * kNumTies * kNumMarkets, 2, "interleaved_tasks",
                     horizon, seed}),
        boom_probability_(boom_probability),
        payoff_{calm_payoff, boom_payoff} {
    if (!(boom_probability >= 0.0 && boom_probability <= 1.0))
      throw InvalidInput("boom probability must lie in [0, 1]");
    init();
  }

  struct Decoded {
    std::size_t phase, position, tie, market;
  };

  static StateId encode(std::size_t phase, std::size_t position, std::size_t tie, std::size_t market) {
    return ((phase * kNumPositions + position) * kNumTies + tie) * kNumMarkets + market;
  }
  static Decoded decode(StateId s) {
    Decoded d{};
    d.market = s % kNumMarkets;
    s /= kNumMarkets;
    d.tie = s % kNumTies;
    s /= kNumTies;
    d.position = s % kNumPositions;
    d.phase = s / kNumPositions;
    return d;
  }

  double payoff(std::size_t market) const { return payoff_[market]; }
  double boom_probability() const noexcept { return boom_probability_; }

  StateId start_state() const override { return encode(Desk, Flat, 0, 0); }
  bool is_terminal(StateId) const override { return false; }

  Dynamics true_dynamics() const override {
    Dynamics d(num_states(), num_actions());
    for (StateId s = 0; s < num_states(); ++s)
      for (ActionId a = 0; a < num_actions(); ++a) {
        for (const auto& [next, prob, reward] : outcomes(s, a)) {
          d.p(s, a, next) += prob;
          d.r(s, a) += prob * reward;
        }
      }
    return d;
  }

  std::unique_ptr<Environment> clone() const override { return std::make_unique<InterleavedTasks>(*this); }

  std::string action_label(ActionId a) const override { return a == 0 ? "a0" : "a1"; }

 protected:
  Transition simulate(StateId s, ActionId a, Rng& rng) const override {
    const auto outs = outcomes(s, a);
    if (outs.size() == 1) return {outs[0].next, outs[0].reward};
    // Desk step: draw the market.
    const bool boom = uniform01(rng) < boom_probability_;
    const auto& o = outs[boom ? 1 : 0];
    return {o.next, o.reward};
  }

 private:
  struct Outcome {
    StateId next;
    double prob;
    double reward;
  };

  std::vector<Outcome> outcomes(StateId s, ActionId a) const {
    const Decoded d = decode(s);
    switch (d.phase) {
      case Desk: {
        const std::size_t pos = a == 0 ? Long : Short;
        return {{encode(Wardrobe, pos, d.tie, 0), 1.0 - boom_probability_, 0.0},
                {encode(Wardrobe, pos, d.tie, 1), boom_probability_, 0.0}};
      }
      case Wardrobe:
        return {{encode(Commute, d.position, a, d.market), 1.0, 0.0}};
      case Commute:
        return {{encode(Office, d.position, d.tie, d.market), 1.0, 0.0}};
      case Office:
        return {{encode(Settlement, d.position, d.tie, d.market), 1.0, 0.0}};
      default: {
        const double sign = d.position == Long ? 1.0 : d.position == Short ? -1.0 : 0.0;
        return {{encode(Desk, Flat, d.tie, d.market), 1.0, sign * payoff_[d.market]}};
      }
    }
  }

  double boom_probability_;
  double payoff_[kNumMarkets];
};

// ---------------------------------------------------------------------------

/// Hard-exploration corridor: in cell i exactly one action (the combination
/// digit) advances to i+1; every other action sends the agent back to cell 0.
/// Reaching the last cell is terminal and pays +1. The combination is a pure
/// function of the construction seed.
class CombinationLock final : public Environment {
 public:
  CombinationLock(std::size_t length, std::size_t num_actions, std::size_t horizon = 60,
                  std::uint64_t seed = 0)
      : Environment({length, num_actions, "combination_lock", horizon, seed}) {
    if (length < 2) throw InvalidInput("corridor needs at least two cells");
    Rng rng(derive_seed(seed, 0xc0b));
    combination_.resize(length - 1);
    for (auto& c : combination_) c = uniform_index(rng, num_actions);
    init();
  }

  const std::vector<ActionId>& combination() const noexcept { return combination_; }
  std::size_t length() const noexcept { return num_states(); }

  StateId start_state() const override { return 0; }
  bool is_terminal(StateId s) const override { return s + 1 == length(); }

  Transition transition(StateId s, ActionId a) const {
    if (is_terminal(s)) return {s, 0.0};
    if (a == combination_[s]) return {s + 1, s + 2 == length() ? 1.0 : 0.0};
    return {0, 0.0};
  }

  Dynamics true_dynamics() const override {
    Dynamics d(num_states(), num_actions());
    for (StateId s = 0; s < num_states(); ++s) {
      if (is_terminal(s)) {
        d.set_terminal(s);
        continue;
      }
      for (ActionId a = 0; a < num_actions(); ++a) {
        const Transition t = transition(s, a);
        d.p(s, a, t.next) = 1.0;
        d.r(s, a) = t.reward;
      }
    }
    return d;
  }

  std::unique_ptr<Environment> clone() const override { return std::make_unique<CombinationLock>(*this); }

 protected:
  Transition simulate(StateId s, ActionId a, Rng&) const override { return transition(s, a); }

 private:
  std::vector<ActionId> combination_;
};

// ---------------------------------------------------------------------------

/// Simulator driven directly by a Dynamics table. Rewards are the table means.
class TabularEnv final : public Environment {
 public:
  TabularEnv(Dynamics dynamics, StateId start, std::size_t horizon, std::uint64_t seed = 0,
             std::string name = "tabular")
      : Environment({dynamics.num_states(), dynamics.num_actions(), std::move(name), horizon, seed}),
        dynamics_(std::move(dynamics)),
        start_(start) {
    dynamics_.validate();
    if (start_ >= dynamics_.num_states()) throw InvalidInput("start state out of range");
    init();
  }

  StateId start_state() const override { return start_; }
  bool is_terminal(StateId s) const override { return dynamics_.terminal(s); }
  Dynamics true_dynamics() const override { return dynamics_; }
  std::unique_ptr<Environment> clone() const override { return std::make_unique<TabularEnv>(*this); }

 protected:
  Transition simulate(StateId s, ActionId a, Rng& rng) const override {
    return {sample_categorical(rng, dynamics_.row(s, a)), dynamics_.r(s, a)};
  }

 private:
  Dynamics dynamics_;
  StateId start_;
};

// ---------------------------------------------------------------------------

/// A scripted decision point with hand-set action values.
struct ScenarioSpec {
  std::string name;
  std::vector<std::string> action_labels;
  ActionValues q_values;
  std::string description;
  std::string expected_label;  // qualitative freedom level, empty if none is claimed
};

/// Magnitude used for "large" positive or negative action values.
inline constexpr double kLargeValue = 10.0;

/// Built-in scenarios: the two arm-raising situations, the six binary value
/// patterns (0, +, -) and the restaurant menu before and after committing.
inline std::vector<ScenarioSpec> scenario_catalog() {
  std::vector<ScenarioSpec> out;
  const std::vector<std::string> arm = {"raise arm", "keep arm down"};
  out.push_back({"arm-lawn", arm, ActionValues({0.0, 0.0}),
                 "Asked politely on a lawn to raise your arm; nothing follows either way.", "High"});
  out.push_back({"arm-precipice", arm,
                 values_for_distribution(ActionDistribution({0.99, 0.01})),
                 "Threatened at a cliff edge unless you raise your arm; raising is chosen 99% of the time.",
                 ""});

  struct Row {
    const char* name;
    double q1, q2;
    const char* label;
    const char* description;
  };
  const double L = kLargeValue;
  const Row rows[] = {
      {"binary-0-0", 0.0, 0.0, "High", "Indifferent between the two actions."},
      {"binary-0-plus", 0.0, L, "Low", "The second action promises a reward too good to skip."},
      {"binary-0-minus", 0.0, -L, "Low", "The second action promises a penalty."},
      {"binary-plus-plus", L, L, "High", "Every choice looks good."},
      {"binary-minus-minus", -L, -L, "High", "A bad place to be, but both options are equally bad."},
      {"binary-plus-minus", L, -L, "Very low", "The first action is overwhelmingly better."},
  };
  for (const auto& r : rows)
    out.push_back({r.name, {"a1", "a2"}, ActionValues({r.q1, r.q2}), r.description, r.label});

  const std::vector<std::string> menu = {"meatballs", "herring", "pasta", "salad", "soup"};
  out.push_back({"restaurant-before", menu, ActionValues(std::vector<double>(menu.size(), 0.0)),
                 "Skimming the menu with no particular preference.", "High"});
  out.push_back({"restaurant-after", menu, ActionValues({1.0, 0.0, 0.0, 0.0, 0.0}),
                 "After settling on meatballs the choice itself raised their value.", ""});
  return out;
}

}  // namespace liberum
