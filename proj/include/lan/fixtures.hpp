#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <memory>
#include <string>

#include "lan/envs/lure_grid.hpp"
#include "lan/envs/matrix_game.hpp"
#include "lan/envs/scripted.hpp"

namespace lan {

// Environment fixtures are JSON files (see fixtures/ in the repository).
// A fixture id resolves to: an explicit path if it looks like one, then
// $LAN_FIXTURES/<id>.json, then <source tree>/fixtures/<id>.json.
inline std::string resolve_fixture_path(const std::string& id) {
  namespace fs = std::filesystem;
  if (id.find('/') != std::string::npos || id.ends_with(".json")) {
    if (fs::exists(id)) return id;
    throw ParseError("fixture file not found: " + id);
  }
  if (const char* dir = std::getenv("LAN_FIXTURES")) {
    fs::path p = fs::path(dir) / (id + ".json");
    if (fs::exists(p)) return p.string();
  }
#ifdef LAN_SOURCE_DIR
  fs::path p = fs::path(LAN_SOURCE_DIR) / "fixtures" / (id + ".json");
  if (fs::exists(p)) return p.string();
#endif
  throw ParseError("unknown environment fixture: " + id);
}

inline nlohmann::json load_fixture_json(const std::string& id) {
  std::string path = resolve_fixture_path(id);
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open fixture: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("fixture " + path + ": " + e.what());
  }
  return j;
}

inline MatrixGameSpec parse_matrix_game(const nlohmann::json& j) {
  MatrixGameSpec spec;
  spec.name = j.at("name").get<std::string>();
  spec.payoff = j.at("payoff").get<std::vector<std::vector<double>>>();
  spec.horizon = j.value("horizon", 1);
  spec.gamma = j.value("gamma", 0.9);
  spec.append_last_joint_action = j.value("append_last_joint_action", false);
  if (spec.horizon < 1) throw ParseError("matrix game: horizon must be >= 1");
  return spec;
}

inline LureGridSpec parse_lure_grid(const nlohmann::json& j) {
  LureGridSpec spec;
  spec.name = j.at("name").get<std::string>();
  spec.height = j.value("height", 7);
  spec.width = j.value("width", 7);
  spec.t_max = j.value("t_max", 40);
  spec.gamma = j.value("gamma", 0.99);
  spec.view_radius = j.value("view_radius", 2);
  spec.enemy_move_period = j.value("enemy_move_period", 1);
  spec.territory_min_col = j.value("territory_min_col", 0);
  spec.enemy_vision = j.value("enemy_vision", 2);
  spec.catch_distance = j.value("catch_distance", 1);
  auto cells = [](const nlohmann::json& arr) {
    std::vector<std::pair<int, int>> out;
    for (const auto& c : arr) out.emplace_back(c.at(0).get<int>(), c.at(1).get<int>());
    return out;
  };
  spec.agent_spawns = cells(j.at("agent_spawns"));
  auto g = j.at("goal");
  spec.goal = {g.at(0).get<int>(), g.at(1).get<int>()};
  spec.enemy_spawns = cells(j.at("enemy_spawns"));
  spec.enemy_attack_points = cells(j.at("enemy_attack_points"));
  spec.win_reward = j.value("win_reward", 10.0);
  spec.catch_penalty = j.value("catch_penalty", -1.0);
  spec.step_penalty = j.value("step_penalty", -0.01);
  spec.min_dockers = j.value("min_dockers", 2);
  spec.shuffle_spawns = j.value("shuffle_spawns", false);
  if (spec.agent_spawns.size() < 2) throw ParseError("lure grid: need at least 2 agents");
  if (spec.enemy_spawns.size() != spec.enemy_attack_points.size())
    throw ParseError("lure grid: one attack point per enemy required");
  return spec;
}

inline std::unique_ptr<Env> make_env_from_json(const nlohmann::json& j) {
  std::string type = j.at("type").get<std::string>();
  if (type == "matrix_game") return std::make_unique<MatrixGameEnv>(parse_matrix_game(j));
  if (type == "lure_grid") return std::make_unique<LureGridEnv>(parse_lure_grid(j));
  throw ParseError("unknown fixture type: " + type);
}

// Builds the environment for a fixture id, optionally folding scripted
// co-players in (agent index -> script text).
inline std::unique_ptr<Env> make_env(const std::string& fixture_id,
                                     const std::map<int, std::string>& scripted_agents = {}) {
  std::unique_ptr<Env> env = make_env_from_json(load_fixture_json(fixture_id));
  if (scripted_agents.empty()) return env;
  std::map<int, Script> scripts;
  for (auto& [agent, text] : scripted_agents) scripts.emplace(agent, Script::parse(text));
  return std::make_unique<ScriptedWrapperEnv>(std::move(env), std::move(scripts));
}

}  // namespace lan
