#include "skylite/world/json_io.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include "skylite/core/error.hpp"

namespace skylite {

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return it->get<T>();
}

json optional_lane(const std::optional<LaneId>& l) { return l ? json(*l) : json(nullptr); }

}  // namespace

json to_json(const AgentState& a) {
  return json{{"id", a.agent_id},
              {"kind", to_string(a.kind)},
              {"lane", a.lane_id},
              {"s", a.s},
              {"d", a.d},
              {"v", a.v},
              {"a", a.a},
              {"heading", a.heading},
              {"length", a.length},
              {"width", a.width},
              {"lane_change", to_string(a.lane_change)},
              {"progress", a.lane_change_progress},
              {"odometer", a.odometer}};
}

AgentState agent_state_from_json(const json& j) {
  AgentState a;
  a.agent_id = j.at("id").get<AgentId>();
  a.kind = agent_kind_from_string(get_or<std::string>(j, "kind", "rule_based"));
  a.lane_id = j.at("lane").get<LaneId>();
  a.s = j.at("s").get<double>();
  a.d = get_or(j, "d", 0.0);
  a.v = get_or(j, "v", 0.0);
  a.a = get_or(j, "a", 0.0);
  a.heading = get_or(j, "heading", 0.0);
  a.length = get_or(j, "length", 4.5);
  a.width = get_or(j, "width", 1.8);
  a.lane_change = lane_change_from_string(get_or<std::string>(j, "lane_change", "none"));
  a.lane_change_progress = get_or(j, "progress", 0.0);
  a.odometer = get_or(j, "odometer", 0.0);
  return a;
}

json to_json(const ActionCommand& a) {
  return json{{"agent_id", a.agent_id},
              {"tick", a.tick},
              {"accel", a.accel},
              {"lane_intent", to_string(a.lane_intent)},
              {"source", to_string(a.source)}};
}

ActionCommand action_from_json(const json& j) {
  ActionCommand a;
  a.agent_id = j.at("agent_id").get<AgentId>();
  a.tick = j.at("tick").get<Tick>();
  a.accel = j.at("accel").get<double>();
  a.lane_intent = lane_intent_from_string(get_or<std::string>(j, "lane_intent", "keep"));
  a.source = action_source_from_string(get_or<std::string>(j, "source", "behavior_model"));
  return a;
}

json to_json(const WorldState& w) {
  json agents = json::array();
  for (const AgentState& a : w.agents) agents.push_back(to_json(a));
  json collisions = json::array();
  for (auto [x, y] : w.collisions_this_tick) collisions.push_back({x, y});
  return json{{"tick", w.tick},
              {"sim_time", w.sim_time},
              {"rng_counter", w.rng_counter},
              {"agents", agents},
              {"collisions", collisions}};
}

WorldState world_from_json(const json& j) {
  WorldState w;
  w.tick = j.at("tick").get<Tick>();
  w.sim_time = j.at("sim_time").get<double>();
  w.rng_counter = get_or<std::uint64_t>(j, "rng_counter", 0);
  for (const json& a : j.at("agents")) w.agents.push_back(agent_state_from_json(a));
  if (j.contains("collisions")) {
    for (const json& c : j.at("collisions"))
      w.collisions_this_tick.emplace_back(c.at(0).get<AgentId>(), c.at(1).get<AgentId>());
  }
  return w;
}

json to_json(const LaneGraph& g) {
  json lanes = json::array();
  for (const Lane& l : g.lanes()) {
    json pts = json::array();
    for (const Point2& p : l.centerline) pts.push_back({p.x, p.y});
    lanes.push_back(json{{"id", l.id},
                         {"centerline", pts},
                         {"width", l.width},
                         {"speed_limit", l.speed_limit},
                         {"left_neighbor", optional_lane(l.left_neighbor)},
                         {"right_neighbor", optional_lane(l.right_neighbor)}});
  }
  json conns = json::array();
  for (auto [a, b] : g.connections()) conns.push_back({a, b});
  return json{{"name", g.name()}, {"lanes", lanes}, {"connections", conns}};
}

LaneGraph lane_graph_from_json(const json& j) {
  std::vector<Lane> lanes;
  for (const json& lj : j.at("lanes")) {
    Lane l;
    l.id = lj.at("id").get<LaneId>();
    for (const json& p : lj.at("centerline")) l.centerline.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    l.width = get_or(lj, "width", 3.5);
    l.speed_limit = get_or(lj, "speed_limit", 30.0);
    if (lj.contains("left_neighbor") && !lj["left_neighbor"].is_null()) l.left_neighbor = lj["left_neighbor"].get<LaneId>();
    if (lj.contains("right_neighbor") && !lj["right_neighbor"].is_null()) l.right_neighbor = lj["right_neighbor"].get<LaneId>();
    lanes.push_back(std::move(l));
  }
  std::vector<std::pair<LaneId, LaneId>> conns;
  if (j.contains("connections")) {
    for (const json& c : j.at("connections")) conns.emplace_back(c.at(0).get<LaneId>(), c.at(1).get<LaneId>());
  }
  return LaneGraph(get_or<std::string>(j, "name", "graph"), std::move(lanes), std::move(conns));
}

json to_json(const BehaviorParams& p) {
  return json{{"idm", {{"v0", p.idm.v0}, {"T", p.idm.T}, {"a", p.idm.a}, {"b", p.idm.b}, {"s0", p.idm.s0}, {"delta", p.idm.delta}}},
              {"mobil", {{"politeness", p.mobil.politeness}, {"delta_a_th", p.mobil.delta_a_th}, {"b_safe", p.mobil.b_safe}}},
              {"leader_horizon", p.leader_horizon}};
}

BehaviorParams behavior_params_from_json(const json& j) {
  BehaviorParams p;
  if (j.contains("idm")) {
    const json& i = j["idm"];
    p.idm.v0 = get_or(i, "v0", p.idm.v0);
    p.idm.T = get_or(i, "T", p.idm.T);
    p.idm.a = get_or(i, "a", p.idm.a);
    p.idm.b = get_or(i, "b", p.idm.b);
    p.idm.s0 = get_or(i, "s0", p.idm.s0);
    p.idm.delta = get_or(i, "delta", p.idm.delta);
  }
  if (j.contains("mobil")) {
    const json& m = j["mobil"];
    p.mobil.politeness = get_or(m, "politeness", p.mobil.politeness);
    p.mobil.delta_a_th = get_or(m, "delta_a_th", p.mobil.delta_a_th);
    p.mobil.b_safe = get_or(m, "b_safe", p.mobil.b_safe);
  }
  p.leader_horizon = get_or(j, "leader_horizon", p.leader_horizon);
  return p;
}

json to_json(const ScenarioSpec& spec) {
  json agents = json::array();
  for (const InitialAgent& ia : spec.initial_agents) {
    json a = to_json(ia.state);
    a["controller"] = to_string(ia.behavior.controller);
    a["slot"] = ia.behavior.slot;
    agents.push_back(std::move(a));
  }
  json scripts = json::object();
  for (const auto& [id, samples] : spec.scripts) {
    json arr = json::array();
    for (const ScriptSample& s : samples) {
      arr.push_back(json{{"tick", s.tick}, {"lane", s.lane_id}, {"s", s.s}, {"d", s.d}, {"v", s.v}, {"heading", s.heading}});
    }
    scripts[std::to_string(id)] = std::move(arr);
  }
  json j{{"name", spec.name},
         {"lane_graph", to_json(spec.graph)},
         {"dt", spec.dt},
         {"max_ticks", spec.max_ticks},
         {"seed", spec.seed},
         {"termination", {{"route_completion_s", spec.termination.route_completion_s},
                          {"collision_ends_episode", spec.termination.collision_ends_episode}}},
         {"accel_limits", {{"min", spec.limits.min}, {"max", spec.limits.max}}},
         {"behavior", to_json(spec.behavior)},
         {"goals", {{"pos", spec.goals.positive}, {"neg", spec.goals.negative}}},
         {"agents", agents},
         {"scripts", scripts}};
  if (spec.lane_graph_ref) j["lane_graph_ref"] = *spec.lane_graph_ref;
  if (spec.ego_id) j["ego_id"] = *spec.ego_id;
  return j;
}

ScenarioSpec scenario_from_json(const json& j, const std::filesystem::path& base_dir) {
  ScenarioSpec spec;
  try {
    spec.name = get_or<std::string>(j, "name", "scenario");
    const json& g = j.at("lane_graph");
    if (g.is_string()) {
      const std::filesystem::path ref = g.get<std::string>();
      spec.lane_graph_ref = ref.string();
      spec.graph = load_lane_graph(ref.is_absolute() ? ref : base_dir / ref);
    } else {
      spec.graph = lane_graph_from_json(g);
      if (j.contains("lane_graph_ref")) spec.lane_graph_ref = j["lane_graph_ref"].get<std::string>();
    }
    spec.dt = get_or(j, "dt", 0.05);
    spec.max_ticks = get_or<Tick>(j, "max_ticks", 200);
    spec.seed = get_or<std::uint64_t>(j, "seed", 0);
    if (j.contains("termination")) {
      const json& t = j["termination"];
      spec.termination.route_completion_s = get_or(t, "route_completion_s", spec.termination.route_completion_s);
      spec.termination.collision_ends_episode = get_or(t, "collision_ends_episode", spec.termination.collision_ends_episode);
    }
    if (j.contains("accel_limits")) {
      spec.limits.min = get_or(j["accel_limits"], "min", spec.limits.min);
      spec.limits.max = get_or(j["accel_limits"], "max", spec.limits.max);
    }
    if (j.contains("behavior")) spec.behavior = behavior_params_from_json(j["behavior"]);
    if (j.contains("goals")) {
      spec.goals.positive = get_or<std::string>(j["goals"], "pos", spec.goals.positive);
      spec.goals.negative = get_or<std::string>(j["goals"], "neg", spec.goals.negative);
    }
    if (j.contains("ego_id") && !j["ego_id"].is_null()) spec.ego_id = j["ego_id"].get<AgentId>();
    for (const json& aj : j.at("agents")) {
      InitialAgent ia;
      ia.state = agent_state_from_json(aj);
      ia.behavior.controller = controller_kind_from_string(get_or<std::string>(aj, "controller", "behavior"));
      ia.behavior.slot = get_or(aj, "slot", 0);
      spec.initial_agents.push_back(std::move(ia));
    }
    if (j.contains("scripts")) {
      for (const auto& [key, arr] : j["scripts"].items()) {
        std::vector<ScriptSample> samples;
        for (const json& sj : arr) {
          ScriptSample s;
          s.tick = sj.at("tick").get<Tick>();
          s.lane_id = sj.at("lane").get<LaneId>();
          s.s = sj.at("s").get<double>();
          s.d = get_or(sj, "d", 0.0);
          s.v = sj.at("v").get<double>();
          s.heading = get_or(sj, "heading", 0.0);
          samples.push_back(s);
        }
        spec.scripts[static_cast<AgentId>(std::stol(key))] = std::move(samples);
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidScenario, std::string("scenario JSON: ") + e.what());
  }
  spec.validate();
  return spec;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void write_json_file(const json& j, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

LaneGraph load_lane_graph(const std::filesystem::path& path) {
  try {
    return lane_graph_from_json(read_json_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidGraph, path.string() + ": " + e.what());
  }
}

ScenarioSpec load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(read_json_file(path), path.parent_path());
}

void save_scenario(const ScenarioSpec& spec, const std::filesystem::path& path) {
  write_json_file(to_json(spec), path);
}

}  // namespace skylite
