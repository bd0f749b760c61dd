#include "skylite/world/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "skylite/core/detmath.hpp"
#include "skylite/core/error.hpp"

namespace skylite {

std::string_view to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::Behavior: return "behavior";
    case ControllerKind::Policy: return "policy";
    case ControllerKind::Human: return "human";
    case ControllerKind::Script: return "script";
  }
  return "behavior";
}

ControllerKind controller_kind_from_string(std::string_view s) {
  if (s == "behavior") return ControllerKind::Behavior;
  if (s == "policy") return ControllerKind::Policy;
  if (s == "human") return ControllerKind::Human;
  if (s == "script") return ControllerKind::Script;
  throw Error(ErrorCode::ParseError, "unknown controller '" + std::string(s) + "'");
}

bool ScenarioSpec::operator==(const ScenarioSpec& o) const {
  return name == o.name && lane_graph_ref == o.lane_graph_ref && graph == o.graph &&
         initial_agents == o.initial_agents && dt == o.dt && max_ticks == o.max_ticks &&
         termination == o.termination && seed == o.seed && limits.min == o.limits.min &&
         limits.max == o.limits.max && ego_id == o.ego_id && behavior == o.behavior &&
         goals == o.goals && scripts == o.scripts;
}

void ScenarioSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidScenario, msg); };
  if (!(dt > 0.0) || !std::isfinite(dt)) fail("dt must be > 0");
  if (max_ticks <= 0) fail("max_ticks must be > 0");
  if (!(limits.min < 0.0 && limits.max > 0.0)) fail("acceleration limits must bracket zero");
  std::set<AgentId> ids;
  for (const InitialAgent& ia : initial_agents) {
    const AgentState& a = ia.state;
    if (!ids.insert(a.agent_id).second) fail("duplicate agent id " + std::to_string(a.agent_id));
    if (!graph.has_lane(a.lane_id)) fail("agent " + std::to_string(a.agent_id) + " on unknown lane");
    const double len = graph.length(a.lane_id);
    if (!(a.s >= 0.0 && a.s <= len)) fail("agent " + std::to_string(a.agent_id) + " s outside lane");
    if (!(a.v >= 0.0) || !std::isfinite(a.v)) fail("agent " + std::to_string(a.agent_id) + " v < 0");
    if (std::fabs(a.d) > graph.lane(a.lane_id).width)
      fail("agent " + std::to_string(a.agent_id) + " |d| exceeds lane width");
    if (ia.behavior.slot < 0) fail("negative slot");
    if (ia.behavior.controller == ControllerKind::Script && !scripts.count(a.agent_id))
      fail("agent " + std::to_string(a.agent_id) + " is scripted but has no script");
  }
  for (const auto& [id, samples] : scripts) {
    if (!ids.count(id)) fail("script for unknown agent " + std::to_string(id));
    if (samples.empty()) fail("empty script for agent " + std::to_string(id));
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (samples[i].tick != static_cast<Tick>(i)) fail("script ticks must be 0, 1, 2, ...");
      if (!graph.has_lane(samples[i].lane_id)) fail("script references unknown lane");
      if (!(samples[i].v >= 0.0)) fail("script speed < 0");
    }
  }
  if (ego_id && !ids.count(*ego_id)) fail("ego_id does not name an agent");
}

AgentId ScenarioSpec::resolved_ego() const {
  if (ego_id) return *ego_id;
  for (const InitialAgent& ia : initial_agents) {
    if (ia.state.kind == AgentKind::PolicyDriven || ia.state.kind == AgentKind::HumanControllable)
      return ia.state.agent_id;
  }
  if (initial_agents.empty()) throw Error(ErrorCode::InvalidScenario, "scenario has no agents");
  AgentId lo = initial_agents.front().state.agent_id;
  for (const InitialAgent& ia : initial_agents) lo = std::min(lo, ia.state.agent_id);
  return lo;
}

const InitialAgent* ScenarioSpec::find_agent(AgentId id) const {
  for (const InitialAgent& ia : initial_agents) {
    if (ia.state.agent_id == id) return &ia;
  }
  return nullptr;
}

WorldState initial_world(const ScenarioSpec& spec) {
  spec.validate();
  WorldState w;
  w.tick = 0;
  w.sim_time = 0.0;
  w.rng_counter = 0;
  for (const InitialAgent& ia : spec.initial_agents) {
    AgentState a = ia.state;
    auto script = spec.scripts.find(a.agent_id);
    if (script != spec.scripts.end()) {
      const ScriptSample& s0 = script->second.front();
      a.lane_id = s0.lane_id;
      a.s = s0.s;
      a.d = s0.d;
      a.v = s0.v;
      a.heading = s0.heading;
    } else {
      const LanePose p = spec.graph.pose(a.lane_id, a.s);
      a.heading = det::atan2(p.ty, p.tx);
    }
    a.odometer = 0.0;
    w.agents.push_back(a);
  }
  std::sort(w.agents.begin(), w.agents.end(),
            [](const AgentState& x, const AgentState& y) { return x.agent_id < y.agent_id; });
  return w;
}

}  // namespace skylite
