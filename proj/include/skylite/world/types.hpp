#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace skylite {

using AgentId = std::int32_t;
using LaneId = std::int32_t;
using Tick = std::int64_t;

enum class AgentKind : std::uint8_t {
  RuleBased = 0,
  PolicyDriven = 1,
  HumanControllable = 2,
  ScriptedReplay = 3,
};

enum class LaneChange : std::uint8_t { None = 0, ToLeft = 1, ToRight = 2 };

enum class LaneIntent : std::uint8_t { Keep = 0, Left = 1, Right = 2 };

enum class ActionSource : std::uint8_t {
  BehaviorModel = 0,
  Policy = 1,
  Human = 2,
  Fallback = 3,
};

std::string_view to_string(AgentKind kind);
std::string_view to_string(LaneChange lc);
std::string_view to_string(LaneIntent intent);
std::string_view to_string(ActionSource source);

AgentKind agent_kind_from_string(std::string_view s);
LaneIntent lane_intent_from_string(std::string_view s);
ActionSource action_source_from_string(std::string_view s);
LaneChange lane_change_from_string(std::string_view s);

struct AgentState {
  AgentId agent_id = 0;
  AgentKind kind = AgentKind::RuleBased;
  LaneId lane_id = 0;
  double s = 0.0;        // longitudinal position along the lane centerline, m
  double d = 0.0;        // lateral offset, m, positive to the left
  double v = 0.0;        // m/s, never negative
  double a = 0.0;        // last applied acceleration, m/s^2
  double heading = 0.0;  // rad
  double length = 4.5;
  double width = 1.8;
  LaneChange lane_change = LaneChange::None;
  double lane_change_progress = 0.0;  // [0, 1]
  double odometer = 0.0;              // distance travelled since episode start, m

  bool operator==(const AgentState&) const = default;
};

struct ActionCommand {
  AgentId agent_id = 0;
  Tick tick = 0;
  double accel = 0.0;
  LaneIntent lane_intent = LaneIntent::Keep;
  ActionSource source = ActionSource::BehaviorModel;

  bool operator==(const ActionCommand&) const = default;
};

struct WorldState {
  Tick tick = 0;
  double sim_time = 0.0;
  std::uint64_t rng_counter = 0;
  std::vector<AgentState> agents;  // sorted by agent_id
  std::vector<std::pair<AgentId, AgentId>> collisions_this_tick;  // (lo, hi), sorted

  bool operator==(const WorldState&) const = default;

  const AgentState* find(AgentId id) const;
  AgentState* find(AgentId id);
};

struct AccelLimits {
  double min = -8.0;
  double max = 4.0;

  double clamp(double a) const { return a < min ? min : (a > max ? max : a); }
};

}  // namespace skylite
