#pragma once

// Credit assignment over finished episodes: uniform (same credit for every
// move), temporal discounting (return-to-go), and counterfactual credit
// computed by replaying the episode inside a world model with one action
// swapped. causal_necessity_oracle evaluates the counterfactual formula
// exactly on known dynamics.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "liberum/environments.hpp"
#include "liberum/error.hpp"
#include "liberum/random.hpp"
#include "liberum/trajectory.hpp"
#include "liberum/world_model.hpp"

namespace liberum {

inline constexpr std::size_t kDefaultStochasticSamples = 32;
inline constexpr std::size_t kOracleBudget = 1'000'000;

struct CreditVector {
  std::vector<double> credits;
  std::string strategy;
  std::size_t valid_samples = 0;

  std::size_t size() const noexcept { return credits.size(); }
  double operator[](std::size_t t) const { return credits[t]; }
};

inline CreditVector uniform_credit(const Trajectory& traj) {
  if (traj.empty()) throw InvalidInput("uniform_credit: empty trajectory");
  return {std::vector<double>(traj.size(), traj.episode_return), "uniform", 0};
}

inline CreditVector temporal_discount_credit(const Trajectory& traj, double gamma) {
  if (traj.empty()) throw InvalidInput("temporal_discount_credit: empty trajectory");
  if (!(gamma >= 0.0) || gamma > 1.0) throw InvalidInput("gamma must lie in [0, 1]");
  return {discounted_returns(traj.rewards(), gamma), "temporal", 0};
}

/// Samples per (step, alternative) for a model: one when it is deterministic.
template <TransitionModel Model>
std::size_t default_num_samples(const Model& model) {
  return model.deterministic() ? 1 : kDefaultStochasticSamples;
}

/// credit[t] = G(t) - mean_{a' != a_t} counterfactual_return(t, a'), where
/// G(t) is the factual discounted return-to-go. Sub-stream seeds derive from
/// (seed, t, a'). With a single action there is no alternative and the
/// credit is zero.
template <TransitionModel Model>
CreditVector counterfactual_credit(const Trajectory& traj, const Model& model, std::size_t num_samples,
                                   std::uint64_t seed, double gamma) {
  if (traj.empty()) throw InvalidInput("counterfactual_credit: empty trajectory");
  if (!(gamma >= 0.0) || gamma > 1.0) throw InvalidInput("gamma must lie in [0, 1]");
  CreditVector out{std::vector<double>(traj.size(), 0.0), "counterfactual", 0};
  const std::size_t A = model.num_actions();
  if (A < 2) return out;

  const auto factual = discounted_returns(traj.rewards(), gamma);
  std::size_t requested = 0;
  for (std::size_t t = 0; t < traj.size(); ++t) {
    double alt_total = 0.0;
    for (ActionId alt = 0; alt < A; ++alt) {
      if (alt == traj.steps[t].action) continue;
      const auto cf = counterfactual_return(model, traj, t, alt, num_samples, derive_seed(seed, t, alt), gamma);
      alt_total += cf.mean_return;
      out.valid_samples += cf.valid_samples;
      requested += cf.num_samples;
    }
    out.credits[t] = factual[t] - alt_total / static_cast<double>(A - 1);
  }
  if (requested > 0 && out.valid_samples == 0)
    throw OracleUnavailable("every counterfactual replay left the modelled region");
  return out;
}

/// Exact expected counterfactual return on known dynamics: the state
/// distribution is propagated through alt_action followed by the recorded
/// actions, with no sampling.
inline double exact_counterfactual_return(const Dynamics& d, const Trajectory& traj, std::size_t t,
                                          ActionId alt_action, double gamma) {
  if (t >= traj.size()) throw InvalidInput("step index outside the trajectory");
  const std::size_t S = d.num_states();
  std::vector<double> dist(S, 0.0), next(S);
  dist.at(traj.steps[t].obs.state_id) = 1.0;
  double g = 0.0, discount = 1.0;
  for (std::size_t k = t; k < traj.size(); ++k) {
    const ActionId a = k == t ? alt_action : traj.steps[k].action;
    std::fill(next.begin(), next.end(), 0.0);
    double expected_reward = 0.0;
    for (StateId s = 0; s < S; ++s) {
      if (dist[s] == 0.0) continue;
      expected_reward += dist[s] * d.r(s, a);
      const auto row = d.row(s, a);
      for (StateId n = 0; n < S; ++n) next[n] += dist[s] * row[n];
    }
    g += discount * expected_reward;
    discount *= gamma;
    dist.swap(next);
  }
  return g;
}

/// Ground-truth counterfactual credit for step t (see counterfactual_credit).
inline double causal_necessity_oracle(const Dynamics& d, const Trajectory& traj, std::size_t t,
                                      double gamma) {
  if (traj.empty()) throw InvalidInput("causal_necessity_oracle: empty trajectory");
  if (t >= traj.size()) throw InvalidInput("step index outside the trajectory");
  const std::size_t A = d.num_actions();
  const std::size_t expansions = d.num_states() * A * (traj.size() - t);
  if (expansions > kOracleBudget)
    throw OracleUnavailable("enumeration needs " + std::to_string(expansions) + " expansions");
  if (A < 2) return 0.0;
  const double factual = discounted_returns(traj.rewards(), gamma)[t];
  double alt_total = 0.0;
  for (ActionId alt = 0; alt < A; ++alt)
    if (alt != traj.steps[t].action) alt_total += exact_counterfactual_return(d, traj, t, alt, gamma);
  return factual - alt_total / static_cast<double>(A - 1);
}

inline double causal_necessity_oracle(const Environment& env, const Trajectory& traj, std::size_t t,
                                      double gamma) {
  return causal_necessity_oracle(env.true_dynamics(), traj, t, gamma);
}

/// Oracle credit at every step.
inline CreditVector causal_necessity_credit(const Dynamics& d, const Trajectory& traj, double gamma) {
  if (traj.empty()) throw InvalidInput("causal_necessity_credit: empty trajectory");
  CreditVector out{std::vector<double>(traj.size()), "oracle", 0};
  for (std::size_t t = 0; t < traj.size(); ++t) out.credits[t] = causal_necessity_oracle(d, traj, t, gamma);
  return out;
}

}  // namespace liberum
