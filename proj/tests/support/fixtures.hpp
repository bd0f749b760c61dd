#pragma once

#include <vector>

#include "skylite/world/scenario.hpp"
#include "skylite/world/step.hpp"

namespace skylite::testing {

inline InitialAgent make_agent(AgentId id, LaneId lane, double s, double v,
                               AgentKind kind = AgentKind::RuleBased,
                               ControllerKind ctl = ControllerKind::Behavior, int slot = 0) {
  InitialAgent ia;
  ia.state.agent_id = id;
  ia.state.kind = kind;
  ia.state.lane_id = lane;
  ia.state.s = s;
  ia.state.v = v;
  ia.behavior = {ctl, slot};
  return ia;
}

/// Single straight lane, 1 km, with the given agents.
inline ScenarioSpec one_lane_scenario(std::vector<InitialAgent> agents, Tick max_ticks = 200) {
  ScenarioSpec spec;
  spec.name = "one_lane";
  spec.graph = straight_road("straight1", 1, 1000.0);
  spec.initial_agents = std::move(agents);
  spec.max_ticks = max_ticks;
  spec.seed = 7;
  return spec;
}

inline ScenarioSpec two_lane_scenario(std::vector<InitialAgent> agents, Tick max_ticks = 200) {
  ScenarioSpec spec;
  spec.name = "two_lane";
  spec.graph = straight_road("straight2", 2, 2000.0);
  spec.initial_agents = std::move(agents);
  spec.max_ticks = max_ticks;
  spec.seed = 11;
  return spec;
}

inline std::vector<ActionCommand> constant_actions(const WorldState& w, double accel,
                                                   LaneIntent intent = LaneIntent::Keep) {
  std::vector<ActionCommand> out;
  for (const AgentState& a : w.agents) out.push_back({a.agent_id, w.tick, accel, intent, ActionSource::BehaviorModel});
  return out;
}

}  // namespace skylite::testing
