#pragma once

#include <span>

#include "skylite/world/lane_graph.hpp"
#include "skylite/world/scenario.hpp"
#include "skylite/world/types.hpp"

namespace skylite {

inline constexpr double kDefaultDt = 0.05;
inline constexpr double kLaneChangeDuration = 3.0;  // s
inline constexpr double kCollisionWindow = 50.0;    // m

struct StepContext {
  const LaneGraph& graph;
  double dt = kDefaultDt;
  AccelLimits limits{};
  const ScriptSet* scripts = nullptr;
  double lane_change_duration = kLaneChangeDuration;
};

/// Advances the world by one tick. Pure: the result depends only on the
/// arguments, bit-for-bit.
///
/// Kinematic agents integrate v' = max(0, v + a dt) and
/// s' = s + v dt + a dt^2 / 2, stopping exactly where v reaches zero.
/// Scripted agents with an entry in `ctx.scripts` take their next state from
/// the script; their action is still required and is recorded as the applied
/// acceleration's source only.
///
/// Throws MissingAction, UnknownAgent, NonFiniteInput.
WorldState step(const WorldState& world, std::span<const ActionCommand> actions,
                const StepContext& ctx);

StepContext step_context(const ScenarioSpec& spec);

/// Oriented-rectangle overlap among agents on the same, adjacent, connected,
/// or crossing lanes within the collision window. Pairs are (lower id, higher id), sorted.
std::vector<std::pair<AgentId, AgentId>> detect_collisions(const std::vector<AgentState>& agents,
                                                           const LaneGraph& graph);

/// Lane an agent currently overlaps in addition to its own (a lane change
/// target once the body crosses the lane boundary).
std::optional<LaneId> encroached_lane(const AgentState& a, const LaneGraph& graph);

Point2 agent_position(const AgentState& a, const LaneGraph& graph);

}  // namespace skylite
