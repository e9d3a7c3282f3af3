#pragma once

// Value freedom: the entropy of softmax-normalized action values, and the
// auxiliary factors reported next to it (historic freedom, estimate quality,
// outcome-merged effective freedom).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "liberum/error.hpp"
#include "liberum/stats.hpp"

namespace liberum {

using ActionId = std::size_t;

inline constexpr double kDefaultTemperature = 1.0;
inline constexpr double kProbabilityTolerance = 1e-9;

/// Estimated action values at one decision point, parallel to opaque ids.
class ActionValues {
 public:
  /// Ids default to 0..n-1.
  explicit ActionValues(std::vector<double> values)
      : values_(std::move(values)), ids_(values_.size()) {
    std::iota(ids_.begin(), ids_.end(), ActionId{0});
    validate();
  }

  ActionValues(std::vector<double> values, std::vector<ActionId> ids)
      : values_(std::move(values)), ids_(std::move(ids)) {
    validate();
  }

  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<ActionId>& action_ids() const noexcept { return ids_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  void validate() const {
    if (values_.empty()) throw InvalidInput("action values must be non-empty");
    if (ids_.size() != values_.size())
      throw InvalidInput("action ids must be parallel to action values");
    for (double v : values_)
      if (!std::isfinite(v)) throw InvalidInput("action values must be finite");
    std::unordered_set<ActionId> seen(ids_.begin(), ids_.end());
    if (seen.size() != ids_.size()) throw InvalidInput("action ids must be unique");
  }

  std::vector<double> values_;
  std::vector<ActionId> ids_;
};

/// Selection probabilities over the same actions as an ActionValues.
class ActionDistribution {
 public:
  explicit ActionDistribution(std::vector<double> probs, double temperature = kDefaultTemperature)
      : probs_(std::move(probs)), ids_(probs_.size()), temperature_(temperature) {
    std::iota(ids_.begin(), ids_.end(), ActionId{0});
    validate();
  }

  ActionDistribution(std::vector<double> probs, std::vector<ActionId> ids, double temperature)
      : probs_(std::move(probs)), ids_(std::move(ids)), temperature_(temperature) {
    validate();
  }

  const std::vector<double>& probs() const noexcept { return probs_; }
  const std::vector<ActionId>& action_ids() const noexcept { return ids_; }
  double temperature() const noexcept { return temperature_; }
  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }

 private:
  void validate() const {
    if (probs_.empty()) throw InvalidInput("distribution must be non-empty");
    if (ids_.size() != probs_.size()) throw InvalidInput("distribution ids must be parallel");
    if (!(temperature_ > 0.0) || !std::isfinite(temperature_))
      throw InvalidInput("temperature must be positive");
    double total = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0) || p > 1.0 + kProbabilityTolerance)
        throw InvalidInput("probabilities must lie in [0, 1]");
      total += p;
    }
    if (std::abs(total - 1.0) > kProbabilityTolerance)
      throw InvalidInput("probabilities must sum to 1, got " + std::to_string(total));
  }

  std::vector<double> probs_;
  std::vector<ActionId> ids_;
  double temperature_;
};

/// Side-by-side freedom factors for one decision. The factors are never
/// combined into a single number.
struct FreedomReport {
  double momentary_bits = 0.0;
  double historic_bits = 0.0;
  double effective_bits = 0.0;
  double quality_score = 0.0;  // Kendall tau-b against an oracle, in [-1, 1]
  std::size_t num_actions = 1;

  bool consistent(double tol = 1e-9) const {
    return num_actions >= 1 && momentary_bits >= 0.0 && historic_bits >= 0.0 &&
           effective_bits >= 0.0 &&
           momentary_bits <= std::log2(static_cast<double>(num_actions)) + tol &&
           effective_bits <= momentary_bits + tol && quality_score >= -1.0 - tol &&
           quality_score <= 1.0 + tol;
  }
};

/// Softmax of values / temperature, computed with max subtraction.
inline ActionDistribution normalize(const ActionValues& q, double temperature = kDefaultTemperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw InvalidInput("temperature must be positive and finite");
  const auto& v = q.values();
  const double vmax = *std::max_element(v.begin(), v.end());
  std::vector<double> p(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    p[i] = std::exp((v[i] - vmax) / temperature);
    total += p[i];
  }
  for (double& x : p) x /= total;
  return ActionDistribution(std::move(p), q.action_ids(), temperature);
}

/// Shannon entropy in bits, with 0 log 0 = 0.
inline double entropy_bits(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log2(p);
  return std::max(0.0, h);
}

inline double entropy_bits(const ActionDistribution& p) { return entropy_bits(p.probs()); }

inline double value_freedom(const ActionValues& q, double temperature = kDefaultTemperature) {
  return entropy_bits(normalize(q, temperature));
}

/// Action values whose softmax at `temperature` is `p`; the largest value is 0.
/// Inverse of normalize up to the (irrecoverable) additive constant.
inline ActionValues values_for_distribution(const ActionDistribution& p,
                                            double temperature = kDefaultTemperature) {
  std::vector<double> v(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) throw InvalidInput("zero probability has no finite action value");
    v[i] = temperature * std::log(p[i]);
  }
  const double vmax = *std::max_element(v.begin(), v.end());
  for (double& x : v) x -= vmax;
  return ActionValues(std::move(v), p.action_ids());
}

/// Weighted mean of per-decision freedom along an episode.
inline double historic_freedom(std::span<const double> per_step_bits, std::span<const double> weights) {
  if (per_step_bits.empty()) throw InvalidInput("historic_freedom: empty history");
  if (per_step_bits.size() != weights.size())
    throw InvalidInput("historic_freedom: bits and weights differ in length");
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < weights.size(); ++t) {
    if (!(weights[t] >= 0.0) || !std::isfinite(weights[t]))
      throw InvalidInput("historic_freedom: weights must be finite and non-negative");
    num += weights[t] * per_step_bits[t];
    den += weights[t];
  }
  if (den <= 0.0) throw InvalidInput("historic_freedom: all weights are zero");
  return num / den;
}

inline double historic_freedom(std::span<const double> per_step_bits) {
  std::vector<double> w(per_step_bits.size(), 1.0);
  return historic_freedom(per_step_bits, w);
}

/// Weights decay^(T-1-t): the latest decision has weight 1. decay = 1 is uniform.
inline std::vector<double> recency_weights(std::size_t length, double decay) {
  if (!(decay > 0.0) || decay > 1.0) throw InvalidInput("recency decay must lie in (0, 1]");
  std::vector<double> w(length);
  double x = 1.0;
  for (std::size_t i = length; i-- > 0;) {
    w[i] = x;
    x *= decay;
  }
  return w;
}

inline double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InvalidInput("total_variation: support size mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - q[i]);
  return 0.5 * d;
}

/// Groups action indices whose outcome distributions are pairwise within
/// `epsilon` in total variation. Greedy, in action order: each action joins
/// the first existing group it is compatible with.
inline std::vector<std::vector<std::size_t>> group_by_outcome(
    const std::vector<std::vector<double>>& outcome_dists, double epsilon) {
  if (!(epsilon >= 0.0) || epsilon > 1.0) throw InvalidInput("epsilon must lie in [0, 1]");
  for (const auto& d : outcome_dists) {
    if (d.size() != outcome_dists.front().size())
      throw InvalidInput("outcome distributions must share one state set");
    double total = 0.0;
    for (double p : d) {
      if (!(p >= 0.0)) throw InvalidInput("outcome probabilities must be non-negative");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-6) throw InvalidInput("outcome distribution does not sum to 1");
  }
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t a = 0; a < outcome_dists.size(); ++a) {
    bool placed = false;
    for (auto& g : groups) {
      const bool fits = std::all_of(g.begin(), g.end(), [&](std::size_t b) {
        return total_variation(outcome_dists[a], outcome_dists[b]) <= epsilon;
      });
      if (fits) {
        g.push_back(a);
        placed = true;
        break;
      }
    }
    if (!placed) groups.push_back({a});
  }
  return groups;
}

/// Value freedom after merging actions with (near-)identical outcomes.
inline double effective_freedom(const ActionValues& q,
                                const std::vector<std::vector<double>>& outcome_dists,
                                double temperature, double epsilon) {
  if (outcome_dists.size() != q.size())
    throw InvalidInput("effective_freedom: one outcome distribution per action required");
  const auto p = normalize(q, temperature);
  const auto groups = group_by_outcome(outcome_dists, epsilon);
  if (groups.size() == 1) return 0.0;
  std::vector<double> merged;
  merged.reserve(groups.size());
  for (const auto& g : groups) {
    double s = 0.0;
    for (std::size_t a : g) s += p[a];
    merged.push_back(s);
  }
  return entropy_bits(merged);
}

/// Rank agreement (Kendall tau-b) between an agent's values and oracle values.
inline double estimate_quality(const ActionValues& agent_q, const ActionValues& oracle_q) {
  if (agent_q.size() != oracle_q.size())
    throw InvalidInput("estimate_quality: value vectors differ in length");
  if (agent_q.size() < 2) throw InvalidInput("estimate_quality: need at least two actions");
  return stats::kendall_tau_b(agent_q.values(), oracle_q.values());
}

}  // namespace liberum
