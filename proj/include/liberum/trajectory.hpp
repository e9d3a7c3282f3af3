#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "liberum/environments.hpp"

namespace liberum {

struct Step {
  Observation obs;
  ActionId action = 0;
  double reward = 0.0;
  Observation next_obs;
};

/// Ordered record of one episode. episode_return is the undiscounted sum of
/// rewards; `terminated` is set when the last step entered a terminal state
/// (as opposed to running out of horizon).
struct Trajectory {
  std::vector<Step> steps;
  double episode_return = 0.0;
  std::uint64_t seed = 0;
  bool terminated = false;

  std::size_t size() const noexcept { return steps.size(); }
  bool empty() const noexcept { return steps.empty(); }

  void push(const Step& s) {
    steps.push_back(s);
    episode_return += s.reward;
  }

  std::vector<double> rewards() const {
    std::vector<double> r;
    r.reserve(steps.size());
    for (const auto& s : steps) r.push_back(s.reward);
    return r;
  }

  bool well_formed(double tol = 1e-9) const {
    double total = 0.0;
    for (std::size_t t = 0; t < steps.size(); ++t) {
      total += steps[t].reward;
      if (t + 1 < steps.size() && !(steps[t].next_obs == steps[t + 1].obs)) return false;
    }
    return std::abs(total - episode_return) <= tol;
  }
};

/// Discounted return-to-go sum_{k>=t} gamma^(k-t) r_k for every t.
inline std::vector<double> discounted_returns(const std::vector<double>& rewards, double gamma) {
  std::vector<double> g(rewards.size());
  double acc = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    acc = rewards[t] + gamma * acc;
    g[t] = acc;
  }
  return g;
}

}  // namespace liberum
