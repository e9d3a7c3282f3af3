#pragma once

// JSON documents for world-model snapshots, Q tables and the scenario
// catalog. Requires nlohmann/json on the include path.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "liberum/agents.hpp"
#include "liberum/environments.hpp"
#include "liberum/error.hpp"
#include "liberum/world_model.hpp"

namespace liberum::io {

using json = nlohmann::json;

inline constexpr int kModelSchemaVersion = 1;

inline json to_json(const WorldModel& m) {
  std::vector<std::size_t> terminal;
  for (StateId s = 0; s < m.num_states(); ++s)
    if (m.is_terminal(s)) terminal.push_back(s);
  return {{"format", "liberum.world_model"},
          {"version", kModelSchemaVersion},
          {"num_states", m.num_states()},
          {"num_actions", m.num_actions()},
          {"uniform_prior", m.uniform_prior()},
          {"transition_counts", m.transition_counts()},
          {"reward_sums", m.reward_sums()},
          {"visit_counts", m.visit_counts()},
          {"terminal_states", terminal}};
}

inline WorldModel world_model_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "liberum.world_model")
      throw InvalidInput("not a world model document");
    const int version = j.at("version").get<int>();
    if (version != kModelSchemaVersion)
      throw InvalidInput("unsupported world model version " + std::to_string(version));
    const auto S = j.at("num_states").get<std::size_t>();
    const auto A = j.at("num_actions").get<std::size_t>();
    std::vector<bool> terminal(S, false);
    for (auto s : j.at("terminal_states").get<std::vector<std::size_t>>()) terminal.at(s) = true;
    return WorldModel::from_counts(S, A, j.at("transition_counts").get<std::vector<std::uint64_t>>(),
                                   j.at("reward_sums").get<std::vector<double>>(),
                                   j.at("visit_counts").get<std::vector<std::uint64_t>>(), terminal,
                                   j.at("uniform_prior").get<bool>());
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed world model document: ") + e.what());
  } catch (const std::out_of_range& e) {
    throw InvalidInput(std::string("malformed world model document: ") + e.what());
  }
}

inline json to_json(const QTable& q) {
  json rows = json::array();
  for (StateId s = 0; s < q.num_states(); ++s) rows.push_back(q.row(s));
  return {{"format", "liberum.q_table"},
          {"version", 1},
          {"num_states", q.num_states()},
          {"num_actions", q.num_actions()},
          {"init_value", q.init_value()},
          {"values", rows}};
}

inline QTable q_table_from_json(const json& j) {
  try {
    QTable q(j.at("num_states").get<std::size_t>(), j.at("num_actions").get<std::size_t>(),
             j.at("init_value").get<double>());
    const auto& rows = j.at("values");
    if (rows.size() != q.num_states()) throw InvalidInput("Q table row count mismatch");
    for (StateId s = 0; s < q.num_states(); ++s) {
      const auto row = rows[s].get<std::vector<double>>();
      if (row.size() != q.num_actions()) throw InvalidInput("Q table row width mismatch");
      for (ActionId a = 0; a < row.size(); ++a) q.at(s, a) = row[a];
    }
    return q;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed Q table document: ") + e.what());
  }
}

inline json to_json(const ScenarioSpec& s) {
  return {{"name", s.name},
          {"action_labels", s.action_labels},
          {"q_values", s.q_values.values()},
          {"description", s.description},
          {"expected_label", s.expected_label}};
}

inline json catalog_json() {
  json out = json::array();
  for (const auto& s : scenario_catalog()) out.push_back(to_json(s));
  return out;
}

}  // namespace liberum::io
