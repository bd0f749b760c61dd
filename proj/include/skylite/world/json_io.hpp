#pragma once

#include <filesystem>

#include <json.hpp>

#include "skylite/world/scenario.hpp"
#include "skylite/world/types.hpp"

namespace skylite {

using json = nlohmann::json;

json to_json(const AgentState& a);
json to_json(const ActionCommand& a);
json to_json(const WorldState& w);
json to_json(const LaneGraph& g);
json to_json(const ScenarioSpec& spec);
json to_json(const BehaviorParams& p);

AgentState agent_state_from_json(const json& j);
ActionCommand action_from_json(const json& j);
WorldState world_from_json(const json& j);
LaneGraph lane_graph_from_json(const json& j);
BehaviorParams behavior_params_from_json(const json& j);
/// `base_dir` resolves a relative "lane_graph" file reference.
ScenarioSpec scenario_from_json(const json& j, const std::filesystem::path& base_dir = {});

LaneGraph load_lane_graph(const std::filesystem::path& path);
ScenarioSpec load_scenario(const std::filesystem::path& path);
void save_scenario(const ScenarioSpec& spec, const std::filesystem::path& path);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const json& j, const std::filesystem::path& path);

}  // namespace skylite
