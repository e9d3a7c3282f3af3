#pragma once

// Tabular agents: action selection over Q rows, credit-driven episodic
// updates, a selection-time freedom bonus and teacher-skewed selection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "liberum/credit.hpp"
#include "liberum/environments.hpp"
#include "liberum/error.hpp"
#include "liberum/freedom.hpp"
#include "liberum/random.hpp"
#include "liberum/trajectory.hpp"
#include "liberum/world_model.hpp"

namespace liberum {

class QTable {
 public:
  QTable(std::size_t num_states, std::size_t num_actions, double init_value = 0.0)
      : num_states_(num_states),
        num_actions_(num_actions),
        init_value_(init_value),
        values_(num_states * num_actions, init_value) {
    if (num_states == 0 || num_actions == 0) throw InvalidInput("Q table needs states and actions");
    if (!std::isfinite(init_value)) throw InvalidInput("Q init value must be finite");
  }

  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_actions() const noexcept { return num_actions_; }
  double init_value() const noexcept { return init_value_; }

  double& at(StateId s, ActionId a) { return values_.at(s * num_actions_ + a); }
  double at(StateId s, ActionId a) const { return values_.at(s * num_actions_ + a); }

  std::vector<double> row(StateId s) const {
    if (s >= num_states_) throw InvalidInput("Q row out of range");
    return {values_.begin() + static_cast<std::ptrdiff_t>(s * num_actions_),
            values_.begin() + static_cast<std::ptrdiff_t>((s + 1) * num_actions_)};
  }
  ActionValues row_values(StateId s) const { return ActionValues(row(s)); }

  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  std::size_t num_states_;
  std::size_t num_actions_;
  double init_value_;
  std::vector<double> values_;
};

enum class PolicyKind { Greedy, EpsilonGreedy, Softmax };

struct PolicySpec {
  PolicyKind kind = PolicyKind::Greedy;
  double epsilon = 0.0;
  double temperature = kDefaultTemperature;

  static PolicySpec greedy() { return {PolicyKind::Greedy, 0.0, kDefaultTemperature}; }
  static PolicySpec epsilon_greedy(double eps) { return {PolicyKind::EpsilonGreedy, eps, kDefaultTemperature}; }
  static PolicySpec softmax(double temperature) { return {PolicyKind::Softmax, 0.0, temperature}; }

  void validate() const {
    if (kind == PolicyKind::EpsilonGreedy && !(epsilon >= 0.0 && epsilon <= 1.0))
      throw InvalidInput("epsilon must lie in [0, 1]");
    if (kind == PolicyKind::Softmax && !(temperature > 0.0 && std::isfinite(temperature)))
      throw InvalidInput("softmax temperature must be positive");
  }
};

inline std::string to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::Greedy: return "greedy";
    case PolicyKind::EpsilonGreedy: return "epsilon_greedy";
    case PolicyKind::Softmax: return "softmax";
  }
  return "unknown";
}

/// Lowest-id maximizer.
inline ActionId argmax(const std::vector<double>& v) {
  return static_cast<ActionId>(std::max_element(v.begin(), v.end()) - v.begin());
}

/// Returns an index into q_row (its position, not its opaque id).
inline ActionId select_action(const ActionValues& q_row, const PolicySpec& policy, Rng& rng) {
  policy.validate();
  switch (policy.kind) {
    case PolicyKind::Greedy:
      return argmax(q_row.values());
    case PolicyKind::EpsilonGreedy:
      if (uniform01(rng) < policy.epsilon) return uniform_index(rng, q_row.size());
      return argmax(q_row.values());
    case PolicyKind::Softmax: {
      const auto p = normalize(q_row, policy.temperature);
      return sample_categorical(rng, p.probs());
    }
  }
  return 0;
}

inline ActionId select_action(const ActionValues& q_row, const PolicySpec& policy, std::uint64_t seed) {
  Rng rng(seed);
  return select_action(q_row, policy, rng);
}

/// Q[s_t, a_t] += alpha * (credit_t - Q[s_t, a_t]) for every step, in order.
inline void episodic_update(QTable& q, const Trajectory& traj, const CreditVector& credits, double alpha) {
  if (credits.size() != traj.size()) throw InvalidInput("credit vector and trajectory differ in length");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidInput("alpha must lie in (0, 1]");
  for (std::size_t t = 0; t < traj.size(); ++t) {
    double& cell = q.at(traj.steps[t].obs.state_id, traj.steps[t].action);
    cell += alpha * (credits[t] - cell);
  }
}

/// Additive selection-time bias supplied by a teacher.
struct Teacher {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::vector<double> bias;  // row-major [state][action]
  double strength = 0.0;

  Teacher(std::size_t states, std::size_t actions, std::vector<double> b, double s)
      : num_states(states), num_actions(actions), bias(std::move(b)), strength(s) {
    if (bias.size() != states * actions) throw InvalidInput("teacher bias has the wrong shape");
    if (!(strength >= 0.0) || !std::isfinite(strength)) throw InvalidInput("teacher strength must be >= 0");
    for (double x : bias)
      if (!std::isfinite(x)) throw InvalidInput("teacher bias must be finite");
  }

  /// Bias 1 on every optimal action (within tol) and 0 elsewhere.
  static Teacher from_optimal(const OptimalValues& opt, double strength, double tol = 1e-9) {
    const std::size_t S = opt.v_star.size(), A = opt.num_actions;
    std::vector<double> b(S * A, 0.0);
    for (StateId s = 0; s < S; ++s)
      for (ActionId a = 0; a < A; ++a)
        if (opt.q(s, a) >= opt.v_star[s] - tol) b[s * A + a] = 1.0;
    return Teacher(S, A, std::move(b), strength);
  }

  double at(StateId s, ActionId a) const { return bias.at(s * num_actions + a); }
};

/// q_row + strength * bias_row(s). The learner's stored values are untouched.
inline ActionValues teach(const ActionValues& q_row, const Teacher& teacher, StateId s) {
  if (s >= teacher.num_states) throw InvalidInput("teacher has no bias row for this state");
  if (q_row.size() != teacher.num_actions) throw InvalidInput("teacher bias row has the wrong width");
  std::vector<double> v = q_row.values();
  for (ActionId a = 0; a < v.size(); ++a) v[a] += teacher.strength * teacher.at(s, a);
  return ActionValues(std::move(v), q_row.action_ids());
}

/// beta * E_{s' ~ model(s, a)}[value_freedom(Q(s'), temperature)].
/// Unvisited pairs raise UnknownTransition unless allow_prior is set.
inline double freedom_bonus(const WorldModel& model, const QTable& q, StateId s, ActionId a, double beta,
                            double temperature, bool allow_prior = false) {
  if (!(beta >= 0.0)) throw InvalidInput("bonus beta must be non-negative");
  if (beta == 0.0) return 0.0;
  const Prediction pred = model.predict(s, a, allow_prior || model.uniform_prior());
  double expected = 0.0;
  for (StateId next = 0; next < pred.next_state_probs.size(); ++next) {
    const double p = pred.next_state_probs[next];
    if (p > 0.0) expected += p * value_freedom(q.row_values(next), temperature);
  }
  return beta * expected;
}

struct BonusConfig {
  const WorldModel* model = nullptr;
  double beta = 0.0;
  double temperature = kDefaultTemperature;
  bool allow_prior = true;
};

/// The values an agent actually selects from in state s: stored Q, plus the
/// teacher's bias and the freedom bonus when present.
inline ActionValues selection_row(const QTable& q, StateId s, const Teacher* teacher, const BonusConfig* bonus) {
  ActionValues row = q.row_values(s);
  if (teacher) row = teach(row, *teacher, s);
  if (bonus && bonus->model && bonus->beta > 0.0) {
    std::vector<double> v = row.values();
    for (ActionId a = 0; a < v.size(); ++a)
      v[a] += freedom_bonus(*bonus->model, q, s, a, bonus->beta, bonus->temperature, bonus->allow_prior);
    row = ActionValues(std::move(v), row.action_ids());
  }
  return row;
}

struct EpisodeOptions {
  PolicySpec policy;
  const Teacher* teacher = nullptr;
  const BonusConfig* bonus = nullptr;
  double freedom_temperature = kDefaultTemperature;
  double historic_decay = 1.0;                    // 1 = uniform over the episode so far
  const OptimalValues* oracle = nullptr;          // enables quality_score
  const Dynamics* outcomes = nullptr;             // enables outcome-merged freedom
  double outcome_epsilon = 0.0;
};

struct EpisodeResult {
  Trajectory trajectory;
  std::vector<FreedomReport> freedom;  // one per step, logged before acting

  std::vector<double> momentary_bits() const {
    std::vector<double> b;
    b.reserve(freedom.size());
    for (const auto& f : freedom) b.push_back(f.momentary_bits);
    return b;
  }
};

/// Plays one episode from env.reset(); all randomness derives from `seed`.
inline EpisodeResult run_episode(Environment& env, const QTable& q, const EpisodeOptions& opt,
                                 std::uint64_t seed) {
  if (q.num_states() != env.num_states() || q.num_actions() != env.num_actions())
    throw InvalidInput("Q table does not match the environment");
  opt.policy.validate();
  EpisodeResult out;
  out.trajectory.seed = seed;
  Observation obs = env.reset(derive_seed(seed, 1));
  Rng rng(derive_seed(seed, 2));
  std::vector<double> history;
  while (true) {
    const StateId s = obs.state_id;
    const ActionValues row = selection_row(q, s, opt.teacher, opt.bonus);

    FreedomReport rep;
    rep.num_actions = row.size();
    rep.momentary_bits = value_freedom(row, opt.freedom_temperature);
    history.push_back(rep.momentary_bits);
    rep.historic_bits = historic_freedom(history, recency_weights(history.size(), opt.historic_decay));
    rep.effective_bits = rep.momentary_bits;
    if (opt.outcomes) {
      std::vector<std::vector<double>> dists;
      for (ActionId a = 0; a < row.size(); ++a) {
        const auto r = opt.outcomes->row(s, a);
        dists.emplace_back(r.begin(), r.end());
      }
      rep.effective_bits = effective_freedom(row, dists, opt.freedom_temperature, opt.outcome_epsilon);
    }
    if (opt.oracle && row.size() >= 2)
      rep.quality_score = estimate_quality(row, ActionValues(opt.oracle->q_row(s)));
    out.freedom.push_back(rep);

    const ActionId a = select_action(row, opt.policy, rng);
    const StepResult res = env.step(a);
    out.trajectory.push({obs, a, res.reward, res.next_obs});
    obs = res.next_obs;
    if (res.terminal) {
      out.trajectory.terminated = !res.truncated;
      break;
    }
  }
  return out;
}

}  // namespace liberum
