#pragma once

// Learned tabular world model, exact planning (value iteration, policy
// evaluation), model rollouts and counterfactual replay.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "liberum/environments.hpp"
#include "liberum/error.hpp"
#include "liberum/random.hpp"
#include "liberum/trajectory.hpp"

namespace liberum {

/// Anything that can be stepped forward for planning or replay.
template <class M>
concept TransitionModel = requires(const M& m, StateId s, ActionId a, Rng& rng) {
  { m.num_states() } -> std::convertible_to<std::size_t>;
  { m.num_actions() } -> std::convertible_to<std::size_t>;
  { m.sample(s, a, rng) } -> std::same_as<std::optional<Transition>>;
  { m.is_terminal(s) } -> std::convertible_to<bool>;
  { m.deterministic() } -> std::convertible_to<bool>;
};

struct Prediction {
  std::vector<double> next_state_probs;
  double expected_reward = 0.0;
};

/// Maximum-likelihood tabular model learned from observed transitions.
///
/// Unvisited (s, a) pairs raise UnknownTransition unless the model was built
/// with a prior, in which case they predict a uniform next state and zero
/// reward.
class WorldModel {
 public:
  WorldModel(std::size_t num_states, std::size_t num_actions, bool uniform_prior = false)
      : num_states_(num_states),
        num_actions_(num_actions),
        uniform_prior_(uniform_prior),
        transition_counts_(num_states * num_actions * num_states, 0),
        reward_sums_(num_states * num_actions, 0.0),
        visit_counts_(num_states * num_actions, 0),
        successors_(num_states * num_actions),
        terminal_(num_states, false) {
    if (num_states == 0 || num_actions == 0) throw InvalidInput("world model needs states and actions");
  }

  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_actions() const noexcept { return num_actions_; }
  bool uniform_prior() const noexcept { return uniform_prior_; }
  void set_uniform_prior(bool on) noexcept { uniform_prior_ = on; }

  void observe(Observation s, ActionId a, double r, Observation next) {
    check(s.state_id, a);
    if (next.state_id >= num_states_) throw InvalidInput("next state out of range");
    if (!std::isfinite(r)) throw InvalidInput("reward must be finite");
    const std::size_t i = index(s.state_id, a);
    std::uint64_t& c = transition_counts_[i * num_states_ + next.state_id];
    if (c == 0) {
      successors_[i].push_back(next.state_id);
      std::sort(successors_[i].begin(), successors_[i].end());
      if (successors_[i].size() == 2) ++branching_pairs_;
    }
    ++c;
    if (visit_counts_[i]++ == 0) ++visited_pairs_;
    reward_sums_[i] += r;
  }

  /// Records every step; when the trajectory ended in a terminal state that
  /// state becomes absorbing in the model.
  void observe(const Trajectory& traj) {
    for (const auto& st : traj.steps) observe(st.obs, st.action, st.reward, st.next_obs);
    if (traj.terminated && !traj.empty()) mark_terminal(traj.steps.back().next_obs.state_id);
  }

  void mark_terminal(StateId s) { terminal_.at(s) = true; }
  bool is_terminal(StateId s) const { return terminal_.at(s); }

  bool visited(StateId s, ActionId a) const { return visit_counts_[index(s, a)] > 0; }
  std::uint64_t visits(StateId s, ActionId a) const { return visit_counts_[index(s, a)]; }
  std::uint64_t count(StateId s, ActionId a, StateId next) const {
    return transition_counts_[index(s, a) * num_states_ + next];
  }
  double reward_sum(StateId s, ActionId a) const { return reward_sums_[index(s, a)]; }

  /// True when every visited pair has been seen to lead to a single successor.
  bool deterministic() const noexcept {
    return branching_pairs_ == 0 && !(uniform_prior_ && visited_pairs_ < visit_counts_.size());
  }

  Prediction predict(StateId s, ActionId a) const { return predict(s, a, uniform_prior_); }

  /// As predict(), with the uniform prior switched on or off for this call.
  Prediction predict(StateId s, ActionId a, bool allow_prior) const {
    check(s, a);
    if (is_terminal(s)) {
      Prediction p{std::vector<double>(num_states_, 0.0), 0.0};
      p.next_state_probs[s] = 1.0;
      return p;
    }
    const std::size_t i = index(s, a);
    if (visit_counts_[i] == 0) {
      if (!allow_prior)
        throw UnknownTransition("no data for state " + std::to_string(s) + ", action " +
                                std::to_string(a));
      return {std::vector<double>(num_states_, 1.0 / static_cast<double>(num_states_)), 0.0};
    }
    Prediction p{std::vector<double>(num_states_, 0.0), 0.0};
    const double n = static_cast<double>(visit_counts_[i]);
    for (StateId next : successors_[i])
      p.next_state_probs[next] = static_cast<double>(transition_counts_[i * num_states_ + next]) / n;
    p.expected_reward = reward_sums_[i] / n;
    return p;
  }

  /// Draws one transition; nullopt for an unvisited pair without a prior.
  std::optional<Transition> sample(StateId s, ActionId a, Rng& rng) const {
    if (is_terminal(s)) return Transition{s, 0.0};
    const std::size_t i = index(s, a);
    const std::uint64_t n = visit_counts_[i];
    if (n == 0) {
      if (!uniform_prior_) return std::nullopt;
      return Transition{uniform_index(rng, num_states_), 0.0};
    }
    const double reward = reward_sums_[i] / static_cast<double>(n);
    const auto& succ = successors_[i];
    if (succ.size() == 1) return Transition{succ.front(), reward};
    double u = uniform01(rng) * static_cast<double>(n);
    for (StateId next : succ) {
      const double c = static_cast<double>(transition_counts_[i * num_states_ + next]);
      if (u < c) return Transition{next, reward};
      u -= c;
    }
    return Transition{succ.back(), reward};
  }

  /// Snapshot of the estimated tables. Unvisited pairs follow the prior if
  /// enabled, otherwise they are left as zero-reward self-loops.
  Dynamics to_dynamics() const {
    Dynamics d(num_states_, num_actions_);
    for (StateId s = 0; s < num_states_; ++s) {
      if (is_terminal(s)) {
        d.set_terminal(s);
        continue;
      }
      for (ActionId a = 0; a < num_actions_; ++a) {
        if (!visited(s, a) && !uniform_prior_) {
          d.p(s, a, s) = 1.0;
          continue;
        }
        const Prediction p = predict(s, a);
        for (StateId n = 0; n < num_states_; ++n) d.p(s, a, n) = p.next_state_probs[n];
        d.r(s, a) = p.expected_reward;
      }
    }
    return d;
  }

  // Raw storage, row-major [state][action][next] / [state][action].
  const std::vector<std::uint64_t>& transition_counts() const noexcept { return transition_counts_; }
  const std::vector<double>& reward_sums() const noexcept { return reward_sums_; }
  const std::vector<std::uint64_t>& visit_counts() const noexcept { return visit_counts_; }
  const std::vector<bool>& terminal_states() const noexcept { return terminal_; }

  /// Rebuilds a model from raw storage; validates row sums against visits.
  static WorldModel from_counts(std::size_t num_states, std::size_t num_actions,
                                const std::vector<std::uint64_t>& transition_counts,
                                const std::vector<double>& reward_sums,
                                const std::vector<std::uint64_t>& visit_counts,
                                const std::vector<bool>& terminal, bool uniform_prior = false) {
    WorldModel m(num_states, num_actions, uniform_prior);
    if (transition_counts.size() != m.transition_counts_.size() ||
        reward_sums.size() != m.reward_sums_.size() || visit_counts.size() != m.visit_counts_.size() ||
        terminal.size() != m.terminal_.size())
      throw InvalidInput("world model storage has the wrong shape");
    m.transition_counts_ = transition_counts;
    m.reward_sums_ = reward_sums;
    m.visit_counts_ = visit_counts;
    m.terminal_ = terminal;
    for (std::size_t i = 0; i < m.visit_counts_.size(); ++i) {
      std::uint64_t total = 0;
      for (StateId n = 0; n < num_states; ++n) {
        const std::uint64_t c = m.transition_counts_[i * num_states + n];
        if (c > 0) m.successors_[i].push_back(n);
        total += c;
      }
      if (total > 0) ++m.visited_pairs_;
      if (total != m.visit_counts_[i]) throw InvalidInput("transition counts disagree with visit counts");
      if (m.successors_[i].size() > 1) ++m.branching_pairs_;
    }
    return m;
  }

  friend bool operator==(const WorldModel& a, const WorldModel& b) {
    return a.num_states_ == b.num_states_ && a.num_actions_ == b.num_actions_ &&
           a.transition_counts_ == b.transition_counts_ && a.reward_sums_ == b.reward_sums_ &&
           a.visit_counts_ == b.visit_counts_ && a.terminal_ == b.terminal_;
  }

 private:
  std::size_t index(StateId s, ActionId a) const { return s * num_actions_ + a; }
  void check(StateId s, ActionId a) const {
    if (s >= num_states_ || a >= num_actions_) throw InvalidInput("state or action out of range");
  }

  std::size_t num_states_;
  std::size_t num_actions_;
  bool uniform_prior_;
  std::vector<std::uint64_t> transition_counts_;
  std::vector<double> reward_sums_;
  std::vector<std::uint64_t> visit_counts_;
  std::vector<std::vector<StateId>> successors_;
  std::vector<bool> terminal_;
  std::size_t branching_pairs_ = 0;
  std::size_t visited_pairs_ = 0;
};

/// Perfect model: samples straight from exact dynamics.
class ExactModel {
 public:
  explicit ExactModel(Dynamics dynamics) : dynamics_(std::move(dynamics)) {
    dynamics_.validate();
    deterministic_ = dynamics_.deterministic();
  }

  std::size_t num_states() const noexcept { return dynamics_.num_states(); }
  std::size_t num_actions() const noexcept { return dynamics_.num_actions(); }
  bool is_terminal(StateId s) const { return dynamics_.terminal(s); }
  bool deterministic() const noexcept { return deterministic_; }
  const Dynamics& dynamics() const noexcept { return dynamics_; }

  std::optional<Transition> sample(StateId s, ActionId a, Rng& rng) const {
    return Transition{sample_categorical(rng, dynamics_.row(s, a)), dynamics_.r(s, a)};
  }

 private:
  Dynamics dynamics_;
  bool deterministic_ = false;
};

static_assert(TransitionModel<WorldModel>);
static_assert(TransitionModel<ExactModel>);

// ---------------------------------------------------------------------------

inline constexpr double kDefaultGamma = 0.95;
inline constexpr double kDefaultTolerance = 1e-8;
inline constexpr std::size_t kMaxIterations = 1'000'000;

struct OptimalValues {
  std::vector<double> v_star;
  std::vector<double> q_star;  // row-major [state][action]
  std::size_t num_actions = 0;
  double gamma = kDefaultGamma;
  double residual = 0.0;
  std::size_t iterations = 0;

  double q(StateId s, ActionId a) const { return q_star[s * num_actions + a]; }
  std::vector<double> q_row(StateId s) const {
    return {q_star.begin() + static_cast<std::ptrdiff_t>(s * num_actions),
            q_star.begin() + static_cast<std::ptrdiff_t>((s + 1) * num_actions)};
  }
};

namespace detail {
inline void bellman_q(const Dynamics& d, double gamma, const std::vector<double>& v, std::vector<double>& q) {
  const std::size_t S = d.num_states(), A = d.num_actions();
  for (StateId s = 0; s < S; ++s)
    for (ActionId a = 0; a < A; ++a) {
      double acc = d.r(s, a);
      const auto row = d.row(s, a);
      for (StateId n = 0; n < S; ++n)
        if (row[n] != 0.0) acc += gamma * row[n] * v[n];
      q[s * A + a] = acc;
    }
}
}  // namespace detail

/// Bellman optimality iteration until the max-norm change drops below tol.
inline OptimalValues value_iteration(const Dynamics& dynamics, double gamma = kDefaultGamma,
                                     double tol = kDefaultTolerance,
                                     std::size_t max_iterations = kMaxIterations) {
  dynamics.validate();
  if (!(gamma >= 0.0) || gamma > 1.0) throw InvalidInput("gamma must lie in [0, 1]");
  if (!(tol > 0.0)) throw InvalidInput("tolerance must be positive");
  const std::size_t S = dynamics.num_states(), A = dynamics.num_actions();
  OptimalValues out;
  out.num_actions = A;
  out.gamma = gamma;
  std::vector<double> v(S, 0.0), next(S), q(S * A);
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    detail::bellman_q(dynamics, gamma, v, q);
    double delta = 0.0;
    for (StateId s = 0; s < S; ++s) {
      next[s] = *std::max_element(q.begin() + static_cast<std::ptrdiff_t>(s * A),
                                  q.begin() + static_cast<std::ptrdiff_t>((s + 1) * A));
      delta = std::max(delta, std::abs(next[s] - v[s]));
    }
    v.swap(next);
    if (delta < tol) {
      out.v_star = std::move(v);
      out.q_star = std::move(q);
      out.residual = delta;
      out.iterations = it;
      return out;
    }
  }
  throw NoConvergence("value iteration did not converge within " + std::to_string(max_iterations) +
                      " iterations");
}

/// Greedy action per state; ties go to the lowest action id.
inline std::vector<ActionId> greedy_policy(const OptimalValues& values, double tie_tol = 1e-12) {
  const std::size_t A = values.num_actions;
  const std::size_t S = values.v_star.size();
  std::vector<ActionId> pi(S, 0);
  for (StateId s = 0; s < S; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (ActionId a = 0; a < A; ++a)
      if (values.q(s, a) > best + tie_tol) {
        best = values.q(s, a);
        pi[s] = a;
      }
  }
  return pi;
}

/// V^pi for a deterministic stationary policy, by iterating the linear backup.
inline std::vector<double> evaluate_policy(const Dynamics& d, const std::vector<ActionId>& policy,
                                           double gamma, double tol = kDefaultTolerance,
                                           std::size_t max_iterations = kMaxIterations) {
  if (policy.size() != d.num_states()) throw InvalidInput("policy must give one action per state");
  const std::size_t S = d.num_states();
  std::vector<double> v(S, 0.0), next(S);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    double delta = 0.0;
    for (StateId s = 0; s < S; ++s) {
      const ActionId a = policy[s];
      double acc = d.r(s, a);
      const auto row = d.row(s, a);
      for (StateId n = 0; n < S; ++n)
        if (row[n] != 0.0) acc += gamma * row[n] * v[n];
      next[s] = acc;
      delta = std::max(delta, std::abs(next[s] - v[s]));
    }
    v.swap(next);
    if (delta < tol) return v;
  }
  throw NoConvergence("policy evaluation did not converge");
}

/// Best expected undiscounted return reachable from `start` within `horizon`
/// steps (finite-horizon backward induction).
inline double optimal_episode_return(const Dynamics& d, StateId start, std::size_t horizon) {
  const std::size_t S = d.num_states(), A = d.num_actions();
  std::vector<double> v(S, 0.0), next(S);
  for (std::size_t k = 0; k < horizon; ++k) {
    for (StateId s = 0; s < S; ++s) {
      if (d.terminal(s)) {
        next[s] = 0.0;
        continue;
      }
      double best = -std::numeric_limits<double>::infinity();
      for (ActionId a = 0; a < A; ++a) {
        double acc = d.r(s, a);
        const auto row = d.row(s, a);
        for (StateId n = 0; n < S; ++n)
          if (row[n] != 0.0) acc += row[n] * v[n];
        best = std::max(best, acc);
      }
      next[s] = best;
    }
    v.swap(next);
  }
  return v.at(start);
}

// ---------------------------------------------------------------------------

/// Policy used inside a model: maps (state, rng) to an action.
using ModelPolicy = std::function<ActionId(StateId, Rng&)>;

/// Simulated episode of at most `horizon` steps; stops at model-terminal
/// states. An unvisited pair without a prior raises UnknownTransition.
template <TransitionModel Model>
Trajectory rollout(const Model& model, Observation s0, const ModelPolicy& policy, std::size_t horizon,
                   std::uint64_t seed) {
  Trajectory traj;
  traj.seed = seed;
  Rng rng(seed);
  StateId s = s0.state_id;
  for (std::size_t k = 0; k < horizon; ++k) {
    if (model.is_terminal(s)) break;
    const ActionId a = policy(s, rng);
    const auto tr = model.sample(s, a, rng);
    if (!tr)
      throw UnknownTransition("rollout reached unmodelled pair (" + std::to_string(s) + ", " +
                              std::to_string(a) + ")");
    traj.push({{s}, a, tr->reward, {tr->next}});
    s = tr->next;
  }
  traj.terminated = model.is_terminal(s);
  return traj;
}

struct CounterfactualReturn {
  double mean_return = 0.0;
  std::size_t valid_samples = 0;  // samples that never hit an unmodelled pair
  std::size_t num_samples = 0;
};

/// Discounted return from step t had `alt_action` been taken there instead of
/// the recorded action. The factual prefix fixes the state at t; from there
/// the model is stepped with alt_action and then with the trajectory's own
/// recorded actions for the remaining steps (open-loop replay), stopping at
/// model-terminal states. Exogenous randomness is resampled per sample.
/// A sample that reaches an unmodelled pair continues as a zero-reward
/// absorbing state and does not count as valid.
template <TransitionModel Model>
CounterfactualReturn counterfactual_return(const Model& model, const Trajectory& traj, std::size_t t,
                                           ActionId alt_action, std::size_t num_samples,
                                           std::uint64_t seed, double gamma) {
  if (t >= traj.size()) throw InvalidInput("counterfactual step index outside the trajectory");
  if (alt_action >= model.num_actions()) throw InvalidInput("counterfactual action out of range");
  if (num_samples == 0) throw InvalidInput("counterfactual needs at least one sample");

  const auto one_sample = [&](Rng& rng, bool& valid) {
    StateId s = traj.steps[t].obs.state_id;
    ActionId a = alt_action;
    double g = 0.0, discount = 1.0;
    valid = true;
    for (std::size_t k = t; k < traj.size(); ++k) {
      if (k > t) a = traj.steps[k].action;
      if (model.is_terminal(s)) break;
      const auto tr = model.sample(s, a, rng);
      if (!tr) {
        valid = false;
        break;
      }
      g += discount * tr->reward;
      discount *= gamma;
      s = tr->next;
    }
    return g;
  };

  CounterfactualReturn out;
  out.num_samples = num_samples;
  // One sample is exact when nothing is random.
  const std::size_t draws = model.deterministic() ? 1 : num_samples;
  double total = 0.0;
  std::size_t valid_count = 0;
  for (std::size_t i = 0; i < draws; ++i) {
    Rng rng(derive_seed(seed, i));
    bool valid = true;
    total += one_sample(rng, valid);
    valid_count += valid;
  }
  out.mean_return = total / static_cast<double>(draws);
  out.valid_samples = draws == num_samples ? valid_count : valid_count * num_samples;
  return out;
}

}  // namespace liberum
