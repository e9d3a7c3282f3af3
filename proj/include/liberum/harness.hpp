#pragma once

// Declarative experiment runner: JSON configs, seeded learner runs, CSV/JSON
// outputs, credit-strategy comparison, freedom reports and the scenario
// evaluator behind the command-line tool.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "liberum/agents.hpp"
#include "liberum/credit.hpp"
#include "liberum/environments.hpp"
#include "liberum/error.hpp"
#include "liberum/freedom.hpp"
#include "liberum/io.hpp"
#include "liberum/stats.hpp"
#include "liberum/svg.hpp"
#include "liberum/world_model.hpp"

namespace liberum::harness {

using json = nlohmann::json;
namespace fs = std::filesystem;

// Qualitative freedom labels for binary (or n-ary) choices.
inline constexpr double kHighFraction = 0.9;   // High if H >= 0.9 log2(n)
inline constexpr double kVeryLowBits = 1e-5;   // Very low if H <= this

// A run has converged at episode e when episodes e .. e+window-1 all return
// within kConvergenceTolerance * |optimal| of the optimal return.
inline constexpr double kConvergenceTolerance = 0.05;
inline constexpr std::size_t kConvergenceWindow = 50;
inline constexpr std::size_t kAgreementEpisodes = 10;

inline const char* const kEpisodesHeader = "seed,episode,return,mean_freedom_bits,historic_freedom_bits,steps";

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Configuration

struct EnvConfig {
  std::string kind = "key_door";
  std::size_t horizon = 0;  // 0 selects the environment's default
  std::uint64_t seed = 0;
  // key_door
  std::size_t width = 5, height = 5;
  // k_armed_bandit
  std::vector<double> means;
  double noise_sd = 1.0;
  // interleaved_tasks
  double boom_probability = 0.5, calm_payoff = 0.5, boom_payoff = 1.5;
  // combination_lock
  std::size_t length = 6, num_actions = 4;

  friend bool operator==(const EnvConfig&, const EnvConfig&) = default;
};

struct AgentConfig {
  PolicySpec policy = PolicySpec::softmax(0.1);
  double alpha = 0.1;
  double init_value = 0.0;
  double freedom_temperature = kDefaultTemperature;
  double historic_decay = 0.9;
};

struct CreditConfig {
  std::string strategy = "counterfactual";  // uniform | temporal | counterfactual | oracle
  std::size_t num_samples = 0;              // 0 = 1 on deterministic models, 32 otherwise
  std::string model = "learned";            // learned | perfect (counterfactual only)
};

struct TeacherConfig {
  double strength = 1.0;  // bias of +1 on optimal actions, scaled by strength
};

struct ExperimentConfig {
  std::string name;
  EnvConfig env;
  AgentConfig agent;
  CreditConfig credit;
  std::optional<TeacherConfig> teacher;
  double bonus_beta = 0.0;
  std::size_t episodes = 1;
  std::vector<std::uint64_t> seeds = {0};
  double gamma = kDefaultGamma;
  std::string output_dir;
};

namespace detail {

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& path) {
  if (!obj.is_object()) throw ConfigError("field '" + path + "' must be an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ConfigError("unknown field '" + (path.empty() ? key : path + "." + key) + "'");
}

template <class T>
T field(const json& obj, const std::string& key, const std::string& path, T fallback) {
  const std::string full = path.empty() ? key : path + "." + key;
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field '" + full + "' has the wrong type");
  }
}

template <class T>
T required(const json& obj, const std::string& key, const std::string& path) {
  const std::string full = path.empty() ? key : path + "." + key;
  if (!obj.contains(key)) throw ConfigError("missing field '" + full + "'");
  return field<T>(obj, key, path, T{});
}

inline void require(bool ok, const std::string& field_name, const std::string& why) {
  if (!ok) throw ConfigError("field '" + field_name + "' " + why);
}

}  // namespace detail

inline EnvConfig parse_env(const json& j) {
  using namespace detail;
  reject_unknown(j, {"kind", "horizon", "seed", "width", "height", "means", "noise_sd", "boom_probability",
                     "calm_payoff", "boom_payoff", "length", "num_actions"},
                 "env");
  EnvConfig e;
  e.kind = required<std::string>(j, "kind", "env");
  e.horizon = field<std::size_t>(j, "horizon", "env", 0);
  e.seed = field<std::uint64_t>(j, "seed", "env", 0);
  e.width = field<std::size_t>(j, "width", "env", e.width);
  e.height = field<std::size_t>(j, "height", "env", e.height);
  e.means = field<std::vector<double>>(j, "means", "env", {});
  e.noise_sd = field<double>(j, "noise_sd", "env", e.noise_sd);
  e.boom_probability = field<double>(j, "boom_probability", "env", e.boom_probability);
  e.calm_payoff = field<double>(j, "calm_payoff", "env", e.calm_payoff);
  e.boom_payoff = field<double>(j, "boom_payoff", "env", e.boom_payoff);
  e.length = field<std::size_t>(j, "length", "env", e.length);
  e.num_actions = field<std::size_t>(j, "num_actions", "env", e.num_actions);
  static const std::set<std::string> kinds = {"key_door", "k_armed_bandit", "interleaved_tasks",
                                              "combination_lock"};
  require(kinds.count(e.kind) > 0, "env.kind", "names an unknown environment '" + e.kind + "'");
  if (e.kind == "k_armed_bandit") require(!e.means.empty(), "env.means", "must list at least one arm");
  return e;
}

inline json to_json(const EnvConfig& e) {
  json j = {{"kind", e.kind}, {"seed", e.seed}};
  if (e.horizon) j["horizon"] = e.horizon;
  if (e.kind == "key_door") j["width"] = e.width, j["height"] = e.height;
  if (e.kind == "k_armed_bandit") j["means"] = e.means, j["noise_sd"] = e.noise_sd;
  if (e.kind == "interleaved_tasks")
    j["boom_probability"] = e.boom_probability, j["calm_payoff"] = e.calm_payoff, j["boom_payoff"] = e.boom_payoff;
  if (e.kind == "combination_lock") j["length"] = e.length, j["num_actions"] = e.num_actions;
  return j;
}

inline std::unique_ptr<Environment> make_environment(const EnvConfig& e) {
  try {
    if (e.kind == "key_door")
      return std::make_unique<KeyDoorGridworld>(e.width, e.height, e.horizon ? e.horizon : 50, e.seed);
    if (e.kind == "k_armed_bandit")
      return std::make_unique<KArmedBandit>(e.means, e.noise_sd, e.seed, e.horizon ? e.horizon : 1);
    if (e.kind == "interleaved_tasks")
      return std::make_unique<InterleavedTasks>(e.horizon ? e.horizon : 20, e.seed, e.boom_probability,
                                                e.calm_payoff, e.boom_payoff);
    if (e.kind == "combination_lock")
      return std::make_unique<CombinationLock>(e.length, e.num_actions, e.horizon ? e.horizon : 60, e.seed);
  } catch (const InvalidInput& err) {
    throw ConfigError(std::string("env: ") + err.what());
  }
  throw ConfigError("field 'env.kind' names an unknown environment '" + e.kind + "'");
}

inline ExperimentConfig parse_config(const json& j) {
  using namespace detail;
  reject_unknown(j, {"name", "env", "agent", "credit", "teacher", "bonus_beta", "episodes", "seeds", "gamma",
                     "output_dir"},
                 "");
  ExperimentConfig c;
  c.name = field<std::string>(j, "name", "", "");
  if (!j.contains("env")) throw ConfigError("missing field 'env'");
  c.env = parse_env(j.at("env"));

  if (j.contains("agent")) {
    const json& a = j.at("agent");
    reject_unknown(a, {"policy", "epsilon", "temperature", "alpha", "init_value", "freedom_temperature",
                       "historic_decay"},
                   "agent");
    const auto kind = field<std::string>(a, "policy", "agent", "softmax");
    if (kind == "greedy") c.agent.policy = PolicySpec::greedy();
    else if (kind == "epsilon_greedy") c.agent.policy = PolicySpec::epsilon_greedy(field<double>(a, "epsilon", "agent", 0.1));
    else if (kind == "softmax") c.agent.policy = PolicySpec::softmax(field<double>(a, "temperature", "agent", 0.1));
    else throw ConfigError("field 'agent.policy' names an unknown policy '" + kind + "'");
    c.agent.alpha = field<double>(a, "alpha", "agent", c.agent.alpha);
    c.agent.init_value = field<double>(a, "init_value", "agent", c.agent.init_value);
    c.agent.freedom_temperature = field<double>(a, "freedom_temperature", "agent", c.agent.freedom_temperature);
    c.agent.historic_decay = field<double>(a, "historic_decay", "agent", c.agent.historic_decay);
  }
  try {
    c.agent.policy.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("field 'agent': ") + e.what());
  }
  require(c.agent.alpha > 0.0 && c.agent.alpha <= 1.0, "agent.alpha", "must lie in (0, 1]");
  require(c.agent.freedom_temperature > 0.0, "agent.freedom_temperature", "must be positive");
  require(c.agent.historic_decay > 0.0 && c.agent.historic_decay <= 1.0, "agent.historic_decay",
          "must lie in (0, 1]");

  if (j.contains("credit")) {
    const json& cr = j.at("credit");
    reject_unknown(cr, {"strategy", "num_samples", "model"}, "credit");
    c.credit.strategy = field<std::string>(cr, "strategy", "credit", c.credit.strategy);
    c.credit.num_samples = field<std::size_t>(cr, "num_samples", "credit", 0);
    c.credit.model = field<std::string>(cr, "model", "credit", c.credit.model);
  }
  static const std::set<std::string> strategies = {"uniform", "temporal", "counterfactual", "oracle"};
  require(strategies.count(c.credit.strategy) > 0, "credit.strategy",
          "names an unknown credit strategy '" + c.credit.strategy + "'");
  require(c.credit.model == "learned" || c.credit.model == "perfect", "credit.model",
          "must be 'learned' or 'perfect'");

  if (j.contains("teacher") && !j.at("teacher").is_null()) {
    const json& t = j.at("teacher");
    reject_unknown(t, {"strength"}, "teacher");
    c.teacher = TeacherConfig{field<double>(t, "strength", "teacher", 1.0)};
    require(c.teacher->strength >= 0.0, "teacher.strength", "must be non-negative");
  }
  c.bonus_beta = field<double>(j, "bonus_beta", "", 0.0);
  require(c.bonus_beta >= 0.0, "bonus_beta", "must be non-negative");
  c.episodes = field<std::size_t>(j, "episodes", "", 1);
  require(c.episodes >= 1, "episodes", "must be at least 1");
  c.seeds = field<std::vector<std::uint64_t>>(j, "seeds", "", {0});
  require(!c.seeds.empty(), "seeds", "must not be empty");
  c.gamma = field<double>(j, "gamma", "", kDefaultGamma);
  require(c.gamma >= 0.0 && c.gamma <= 1.0, "gamma", "must lie in [0, 1]");
  c.output_dir = field<std::string>(j, "output_dir", "", "");
  if (c.name.empty()) c.name = c.credit.strategy;
  // Resolve the environment now so bad parameters surface as config errors.
  make_environment(c.env);
  return c;
}

inline ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

inline json to_json(const ExperimentConfig& c) {
  json agent = {{"policy", to_string(c.agent.policy.kind)},
                {"alpha", c.agent.alpha},
                {"init_value", c.agent.init_value},
                {"freedom_temperature", c.agent.freedom_temperature},
                {"historic_decay", c.agent.historic_decay}};
  if (c.agent.policy.kind == PolicyKind::EpsilonGreedy) agent["epsilon"] = c.agent.policy.epsilon;
  if (c.agent.policy.kind == PolicyKind::Softmax) agent["temperature"] = c.agent.policy.temperature;
  json j = {{"name", c.name},
            {"env", to_json(c.env)},
            {"agent", agent},
            {"credit", {{"strategy", c.credit.strategy}, {"num_samples", c.credit.num_samples}, {"model", c.credit.model}}},
            {"teacher", c.teacher ? json{{"strength", c.teacher->strength}} : json(nullptr)},
            {"bonus_beta", c.bonus_beta},
            {"episodes", c.episodes},
            {"seeds", c.seeds},
            {"gamma", c.gamma}};
  if (!c.output_dir.empty()) j["output_dir"] = c.output_dir;
  return j;
}

// ---------------------------------------------------------------------------
// Running

struct EpisodeRow {
  std::uint64_t seed = 0;
  std::size_t episode = 0;
  double episode_return = 0.0;
  double mean_freedom_bits = 0.0;
  double historic_freedom_bits = 0.0;
  std::size_t steps = 0;
};

struct SeedSummary {
  std::uint64_t seed = 0;
  std::optional<std::size_t> convergence_episode;
  double final_return = 0.0;
  std::optional<double> credit_oracle_agreement;
  FreedomReport final_report;
};

struct RunRecord {
  ExperimentConfig config;
  double optimal_return = 0.0;
  std::vector<EpisodeRow> rows;  // ordered by (seed position, episode)
  std::vector<SeedSummary> seeds;

  std::vector<double> returns_for(std::size_t seed_index) const {
    const std::size_t n = config.episodes;
    std::vector<double> r;
    for (std::size_t e = 0; e < n; ++e) r.push_back(rows[seed_index * n + e].episode_return);
    return r;
  }
};

inline std::optional<std::size_t> convergence_episode(const std::vector<double>& returns, double optimal,
                                                      double tolerance = kConvergenceTolerance,
                                                      std::size_t window = kConvergenceWindow) {
  const double band = tolerance * std::max(std::abs(optimal), 1e-12);
  std::size_t run = 0;
  for (std::size_t e = 0; e < returns.size(); ++e) {
    run = std::abs(returns[e] - optimal) <= band ? run + 1 : 0;
    if (run == window) return e + 1 - window;
  }
  return std::nullopt;
}

/// Non-converged runs count as converging at the episode budget.
inline double censored_convergence(const SeedSummary& s, std::size_t episodes) {
  return s.convergence_episode ? static_cast<double>(*s.convergence_episode) : static_cast<double>(episodes);
}

namespace detail {

struct SeedResult {
  std::vector<EpisodeRow> rows;
  SeedSummary summary;
};

inline SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed, const Dynamics& truth,
                           const OptimalValues& optimal, double optimal_return) {
  auto env = make_environment(cfg.env);
  const std::size_t S = env->num_states(), A = env->num_actions();
  QTable q(S, A, cfg.agent.init_value);
  WorldModel model(S, A);
  const ExactModel perfect(truth);
  std::optional<Teacher> teacher;
  if (cfg.teacher) teacher = Teacher::from_optimal(optimal, cfg.teacher->strength);
  BonusConfig bonus{&model, cfg.bonus_beta, cfg.agent.freedom_temperature, true};

  EpisodeOptions opt;
  opt.policy = cfg.agent.policy;
  opt.teacher = teacher ? &*teacher : nullptr;
  opt.bonus = cfg.bonus_beta > 0.0 ? &bonus : nullptr;
  opt.freedom_temperature = cfg.agent.freedom_temperature;
  opt.historic_decay = cfg.agent.historic_decay;

  const bool oracle_feasible = S * A * env->spec().horizon <= kOracleBudget;
  std::vector<double> agreement_credit, agreement_oracle;

  SeedResult out;
  std::vector<double> returns;
  double last_historic = 0.0;
  for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
    const std::uint64_t ep_seed = derive_seed(seed, ep);
    EpisodeResult res = run_episode(*env, q, opt, ep_seed);
    const Trajectory& traj = res.trajectory;
    model.observe(traj);

    CreditVector credit;
    if (cfg.credit.strategy == "uniform") {
      credit = uniform_credit(traj);
    } else if (cfg.credit.strategy == "temporal") {
      credit = temporal_discount_credit(traj, cfg.gamma);
    } else if (cfg.credit.strategy == "oracle") {
      credit = causal_necessity_credit(truth, traj, cfg.gamma);
    } else {
      const std::uint64_t credit_seed = derive_seed(ep_seed, 3);
      if (cfg.credit.model == "perfect") {
        const std::size_t n = cfg.credit.num_samples ? cfg.credit.num_samples : default_num_samples(perfect);
        credit = counterfactual_credit(traj, perfect, n, credit_seed, cfg.gamma);
      } else {
        const std::size_t n = cfg.credit.num_samples ? cfg.credit.num_samples : default_num_samples(model);
        try {
          credit = counterfactual_credit(traj, model, n, credit_seed, cfg.gamma);
        } catch (const OracleUnavailable&) {
          // Nothing but the factual path is modelled yet: every alternative
          // continues as a zero-reward absorbing state.
          credit = temporal_discount_credit(traj, cfg.gamma);
          credit.strategy = "counterfactual";
        }
      }
    }
    episodic_update(q, traj, credit, cfg.agent.alpha);

    if (oracle_feasible && ep + kAgreementEpisodes >= cfg.episodes) {
      const CreditVector oracle = causal_necessity_credit(truth, traj, cfg.gamma);
      agreement_credit.insert(agreement_credit.end(), credit.credits.begin(), credit.credits.end());
      agreement_oracle.insert(agreement_oracle.end(), oracle.credits.begin(), oracle.credits.end());
    }

    const auto bits = res.momentary_bits();
    last_historic = res.freedom.back().historic_bits;
    out.rows.push_back({seed, ep, traj.episode_return, stats::mean(bits), last_historic, traj.size()});
    returns.push_back(traj.episode_return);
  }

  SeedSummary& sum = out.summary;
  sum.seed = seed;
  sum.convergence_episode = convergence_episode(returns, optimal_return);
  sum.final_return = returns.back();
  if (oracle_feasible) sum.credit_oracle_agreement = stats::pearson(agreement_credit, agreement_oracle);

  const StateId start = env->start_state();
  const ActionValues row = q.row_values(start);
  FreedomReport& rep = sum.final_report;
  rep.num_actions = A;
  rep.momentary_bits = value_freedom(row, cfg.agent.freedom_temperature);
  rep.historic_bits = last_historic;
  std::vector<std::vector<double>> dists;
  for (ActionId a = 0; a < A; ++a) {
    const auto r = truth.row(start, a);
    dists.emplace_back(r.begin(), r.end());
  }
  rep.effective_bits = effective_freedom(row, dists, cfg.agent.freedom_temperature, 0.0);
  rep.quality_score = A >= 2 ? estimate_quality(row, ActionValues(optimal.q_row(start))) : 1.0;
  return out;
}

}  // namespace detail

/// Runs every seed; `workers` threads share the seeds but never change the
/// result, which is assembled in seed order.
inline RunRecord run_experiment(const ExperimentConfig& cfg, unsigned workers = 1) {
  const auto env = make_environment(cfg.env);
  const Dynamics truth = env->true_dynamics();
  const double vi_gamma = std::min(cfg.gamma, 0.999);
  const OptimalValues optimal = value_iteration(truth, vi_gamma);

  RunRecord rec;
  rec.config = cfg;
  rec.optimal_return = optimal_episode_return(truth, env->start_state(), env->spec().horizon);

  std::vector<detail::SeedResult> results(cfg.seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto work = [&] {
    for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) {
      try {
        results[i] = detail::run_seed(cfg, cfg.seeds[i], truth, optimal, rec.optimal_return);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(cfg.seeds.size())));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (auto& r : results) {
    rec.rows.insert(rec.rows.end(), r.rows.begin(), r.rows.end());
    rec.seeds.push_back(r.summary);
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Output

inline std::string episodes_csv(const RunRecord& rec) {
  std::ostringstream o;
  o << kEpisodesHeader << '\n';
  for (const auto& r : rec.rows)
    o << r.seed << ',' << r.episode << ',' << format_number(r.episode_return) << ','
      << format_number(r.mean_freedom_bits) << ',' << format_number(r.historic_freedom_bits) << ',' << r.steps
      << '\n';
  return o.str();
}

inline json to_json(const FreedomReport& f) {
  return {{"momentary_bits", f.momentary_bits},
          {"historic_bits", f.historic_bits},
          {"effective_bits", f.effective_bits},
          {"quality_score", f.quality_score},
          {"num_actions", f.num_actions}};
}

inline FreedomReport freedom_report_from_json(const json& j) {
  FreedomReport f;
  f.momentary_bits = j.at("momentary_bits").get<double>();
  f.historic_bits = j.at("historic_bits").get<double>();
  f.effective_bits = j.at("effective_bits").get<double>();
  f.quality_score = j.at("quality_score").get<double>();
  f.num_actions = j.at("num_actions").get<std::size_t>();
  return f;
}

inline json summary_json(const RunRecord& rec) {
  json seeds = json::array();
  std::vector<double> conv;
  for (const auto& s : rec.seeds) {
    seeds.push_back({{"seed", s.seed},
                     {"convergence_episode", s.convergence_episode ? json(*s.convergence_episode) : json(nullptr)},
                     {"final_return", s.final_return},
                     {"credit_oracle_agreement",
                      s.credit_oracle_agreement ? json(*s.credit_oracle_agreement) : json(nullptr)},
                     {"final_freedom", to_json(s.final_report)}});
    conv.push_back(censored_convergence(s, rec.config.episodes));
  }
  return {{"config", to_json(rec.config)},
          {"optimal_return", rec.optimal_return},
          {"median_convergence_episode", stats::median(conv)},
          {"seeds", seeds}};
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

/// Mean over seeds, per episode.
inline std::vector<double> mean_curve(const RunRecord& rec, double EpisodeRow::*field) {
  const std::size_t n = rec.config.episodes;
  std::vector<double> curve(n, 0.0);
  for (const auto& r : rec.rows) curve[r.episode] += r.*field;
  for (double& v : curve) v /= static_cast<double>(rec.seeds.size());
  return curve;
}

inline void write_run(const RunRecord& rec, const fs::path& dir) {
  ensure_dir(dir);
  write_text(dir / "episodes.csv", episodes_csv(rec));
  write_text(dir / "summary.json", summary_json(rec).dump(2) + "\n");
  const auto returns = mean_curve(rec, &EpisodeRow::episode_return);
  write_text(dir / "learning_curve.svg",
             svg::line_chart(rec.config.name + ": mean return", "episode", "return", {{rec.config.name, returns}}));
}

inline RunRecord load_run(const fs::path& dir) {
  RunRecord rec;
  std::ifstream sin(dir / "summary.json");
  if (!sin) throw IoError("cannot read " + (dir / "summary.json").string());
  json summary;
  try {
    sin >> summary;
    rec.config = parse_config(summary.at("config"));
    rec.optimal_return = summary.at("optimal_return").get<double>();
    for (const auto& s : summary.at("seeds")) {
      SeedSummary ss;
      ss.seed = s.at("seed").get<std::uint64_t>();
      if (!s.at("convergence_episode").is_null()) ss.convergence_episode = s.at("convergence_episode").get<std::size_t>();
      ss.final_return = s.at("final_return").get<double>();
      if (!s.at("credit_oracle_agreement").is_null())
        ss.credit_oracle_agreement = s.at("credit_oracle_agreement").get<double>();
      ss.final_report = freedom_report_from_json(s.at("final_freedom"));
      rec.seeds.push_back(ss);
    }
  } catch (const json::exception& e) {
    throw IoError("malformed summary.json: " + std::string(e.what()));
  }

  std::ifstream in(dir / "episodes.csv");
  if (!in) throw IoError("cannot read " + (dir / "episodes.csv").string());
  std::string line;
  std::getline(in, line);
  if (line != kEpisodesHeader) throw IoError("episodes.csv has an unexpected header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpisodeRow r;
    char c;
    std::istringstream ls(line);
    if (!(ls >> r.seed >> c >> r.episode >> c >> r.episode_return >> c >> r.mean_freedom_bits >> c >>
          r.historic_freedom_bits >> c >> r.steps))
      throw IoError("malformed episodes.csv row: " + line);
    rec.rows.push_back(r);
  }
  if (rec.rows.size() != rec.config.episodes * rec.seeds.size())
    throw IoError("episodes.csv row count does not match the summary");
  return rec;
}

// ---------------------------------------------------------------------------
// Credit comparison

struct StrategyRow {
  std::string name;
  std::string strategy;
  double median_convergence = 0.0;  // censored at the episode budget
  std::size_t converged_seeds = 0;
  std::optional<double> mean_oracle_agreement;
  std::vector<double> convergence;  // per seed, censored
};

struct Comparison {
  std::vector<StrategyRow> rows;
  std::vector<RunRecord> runs;
};

inline Comparison compare_credit(const std::vector<ExperimentConfig>& configs, unsigned workers = 1) {
  if (configs.empty()) throw ConfigError("compare needs at least one config");
  std::set<std::string> names;
  for (const auto& c : configs) {
    if (!(c.env == configs.front().env)) throw ConfigError("field 'env' differs between compared configs");
    if (c.seeds != configs.front().seeds) throw ConfigError("field 'seeds' differs between compared configs");
    if (c.episodes != configs.front().episodes)
      throw ConfigError("field 'episodes' differs between compared configs");
    if (!names.insert(c.name).second) throw ConfigError("field 'name' repeats '" + c.name + "'");
  }
  Comparison out;
  for (const auto& c : configs) {
    RunRecord rec = run_experiment(c, workers);
    StrategyRow row;
    row.name = c.name;
    row.strategy = c.credit.strategy;
    std::vector<double> agreements;
    for (const auto& s : rec.seeds) {
      row.convergence.push_back(censored_convergence(s, c.episodes));
      row.converged_seeds += s.convergence_episode.has_value();
      if (s.credit_oracle_agreement) agreements.push_back(*s.credit_oracle_agreement);
    }
    row.median_convergence = stats::median(row.convergence);
    if (!agreements.empty()) row.mean_oracle_agreement = stats::mean(agreements);
    out.rows.push_back(row);
    out.runs.push_back(std::move(rec));
  }
  return out;
}

inline std::string comparison_csv(const Comparison& cmp) {
  std::ostringstream o;
  o << "name,strategy,median_convergence_episode,converged_seeds,seeds,mean_credit_oracle_agreement\n";
  for (const auto& r : cmp.rows)
    o << r.name << ',' << r.strategy << ',' << format_number(r.median_convergence) << ',' << r.converged_seeds
      << ',' << r.convergence.size() << ','
      << (r.mean_oracle_agreement ? format_number(*r.mean_oracle_agreement) : std::string("")) << '\n';
  return o.str();
}

inline std::string learning_curves_csv(const Comparison& cmp) {
  std::ostringstream o;
  o << "episode";
  for (const auto& r : cmp.rows) o << ',' << r.name;
  o << '\n';
  std::vector<std::vector<double>> curves;
  for (const auto& run : cmp.runs) curves.push_back(mean_curve(run, &EpisodeRow::episode_return));
  for (std::size_t e = 0; e < curves.front().size(); ++e) {
    o << e;
    for (const auto& c : curves) o << ',' << format_number(c[e]);
    o << '\n';
  }
  return o.str();
}

inline void write_comparison(const Comparison& cmp, const fs::path& dir) {
  ensure_dir(dir);
  write_text(dir / "comparison.csv", comparison_csv(cmp));
  write_text(dir / "learning_curves.csv", learning_curves_csv(cmp));
  std::vector<svg::Series> series;
  for (std::size_t i = 0; i < cmp.rows.size(); ++i)
    series.push_back({cmp.rows[i].name, mean_curve(cmp.runs[i], &EpisodeRow::episode_return)});
  write_text(dir / "learning_curves.svg", svg::line_chart("Mean return by credit strategy", "episode", "return", series));
  for (const auto& run : cmp.runs) write_run(run, dir / run.config.name);
}

// ---------------------------------------------------------------------------
// Freedom report

struct FreedomSummary {
  std::vector<double> momentary;  // mean over seeds, per episode
  std::vector<double> historic;
  std::optional<stats::MannKendallResult> trend;  // on `momentary`, when >= 3 episodes
  FreedomReport final_mean;                       // mean of the seeds' final reports
};

inline FreedomSummary report_freedom(const RunRecord& rec) {
  if (rec.rows.empty() || rec.seeds.empty()) throw InvalidInput("report_freedom: record has no episodes");
  FreedomSummary out;
  out.momentary = mean_curve(rec, &EpisodeRow::mean_freedom_bits);
  out.historic = mean_curve(rec, &EpisodeRow::historic_freedom_bits);
  if (out.momentary.size() >= 3) out.trend = stats::mann_kendall(out.momentary);
  FreedomReport& f = out.final_mean;
  f = FreedomReport{0.0, 0.0, 0.0, 0.0, rec.seeds.front().final_report.num_actions};
  const double n = static_cast<double>(rec.seeds.size());
  for (const auto& s : rec.seeds) {
    f.momentary_bits += s.final_report.momentary_bits / n;
    f.historic_bits += s.final_report.historic_bits / n;
    f.effective_bits += s.final_report.effective_bits / n;
    f.quality_score += s.final_report.quality_score / n;
  }
  return out;
}

inline std::string freedom_csv(const FreedomSummary& f) {
  std::ostringstream o;
  o << "episode,mean_momentary_bits,mean_historic_bits\n";
  for (std::size_t e = 0; e < f.momentary.size(); ++e)
    o << e << ',' << format_number(f.momentary[e]) << ',' << format_number(f.historic[e]) << '\n';
  return o.str();
}

inline json to_json(const FreedomSummary& f) {
  json j = {{"episodes", f.momentary.size()}, {"final_freedom_mean", to_json(f.final_mean)}};
  if (f.trend)
    j["mann_kendall"] = {{"s", f.trend->s},
                         {"variance", f.trend->variance},
                         {"z", f.trend->z},
                         {"p_decreasing", f.trend->p_decreasing},
                         {"p_increasing", f.trend->p_increasing}};
  return j;
}

inline void write_freedom_report(const FreedomSummary& f, const fs::path& dir, const std::string& title) {
  ensure_dir(dir);
  write_text(dir / "freedom.csv", freedom_csv(f));
  write_text(dir / "freedom_summary.json", to_json(f).dump(2) + "\n");
  write_text(dir / "freedom.svg", svg::line_chart(title + ": value freedom", "episode", "bits",
                                                  {{"momentary", f.momentary}, {"historic", f.historic}}));
}

// ---------------------------------------------------------------------------
// Scenario evaluation

inline std::string freedom_label(double bits, std::size_t num_actions) {
  if (num_actions <= 1) return "Very low";
  if (bits >= kHighFraction * std::log2(static_cast<double>(num_actions))) return "High";
  if (bits <= kVeryLowBits) return "Very low";
  return "Low";
}

struct ScenarioReport {
  std::vector<std::string> labels;
  std::vector<double> q;
  std::vector<double> p;
  double temperature = kDefaultTemperature;
  double bits = 0.0;
  std::string label;
};

inline ScenarioReport scenario_eval(const std::vector<double>& q, double temperature,
                                    std::vector<std::string> labels = {}) {
  const ActionValues values(q);
  if (!labels.empty() && labels.size() != q.size())
    throw InvalidInput("scenario labels must match the number of action values");
  if (labels.empty())
    for (std::size_t i = 0; i < q.size(); ++i) labels.push_back("a" + std::to_string(i + 1));
  const auto dist = normalize(values, temperature);
  ScenarioReport r{std::move(labels), q, dist.probs(), temperature, entropy_bits(dist), ""};
  r.label = freedom_label(r.bits, q.size());
  return r;
}

/// Evaluates a distribution given directly; Q is recovered by inverting the
/// softmax (largest value pinned at 0).
inline ScenarioReport scenario_eval_distribution(const std::vector<double>& p, double temperature,
                                                 std::vector<std::string> labels = {}) {
  const ActionDistribution dist(p, temperature);
  const ActionValues q = values_for_distribution(dist, temperature);
  ScenarioReport r = scenario_eval(q.values(), temperature, std::move(labels));
  r.p = p;
  r.bits = entropy_bits(dist);
  r.label = freedom_label(r.bits, p.size());
  return r;
}

inline std::string format_scenario(const ScenarioReport& r) {
  std::ostringstream o;
  char buf[64];
  o << "action            Q           P\n";
  for (std::size_t i = 0; i < r.q.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%-14s %10.4f %11.6f\n", r.labels[i].c_str(), r.q[i], r.p[i]);
    o << buf;
  }
  std::snprintf(buf, sizeof buf, "T = %g\n", r.temperature);
  o << buf;
  if (r.bits != 0.0 && r.bits < 1e-3) std::snprintf(buf, sizeof buf, "H = %.4g bits\n", r.bits);
  else std::snprintf(buf, sizeof buf, "H = %.4f bits\n", r.bits);
  o << buf;
  o << "value freedom: " << r.label;
  if (r.q.size() == 1) o << " (single action: nothing to choose between)";
  o << '\n';
  return o.str();
}

}  // namespace liberum::harness
