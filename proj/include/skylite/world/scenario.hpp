#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "skylite/behavior/params.hpp"
#include "skylite/world/lane_graph.hpp"
#include "skylite/world/types.hpp"

namespace skylite {

enum class ControllerKind : std::uint8_t { Behavior, Policy, Human, Script };

std::string_view to_string(ControllerKind kind);
ControllerKind controller_kind_from_string(std::string_view s);

/// Who drives an agent and which lockstep terminal owns it. Slot 0 is the
/// host; slot k >= 1 is the k-th client to register.
struct BehaviorAssignment {
  ControllerKind controller = ControllerKind::Behavior;
  int slot = 0;

  bool operator==(const BehaviorAssignment&) const = default;
};

struct InitialAgent {
  AgentState state;
  BehaviorAssignment behavior;

  bool operator==(const InitialAgent&) const = default;
};

/// One scripted state per tick; tick i of the episode uses samples[i], ticks
/// past the end hold the last sample.
struct ScriptSample {
  Tick tick = 0;
  LaneId lane_id = 0;
  double s = 0.0;
  double d = 0.0;
  double v = 0.0;
  double heading = 0.0;

  bool operator==(const ScriptSample&) const = default;
};

using ScriptSet = std::map<AgentId, std::vector<ScriptSample>>;

struct Termination {
  double route_completion_s = 200.0;
  bool collision_ends_episode = true;

  bool operator==(const Termination&) const = default;
};

struct LanguageGoals {
  std::string positive = "the road is clear with no accidents";
  std::string negative = "two cars have collided";

  bool operator==(const LanguageGoals&) const = default;
};

struct ScenarioSpec {
  std::string name = "scenario";
  /// Set when the graph was loaded from a file; the graph itself is always resolved.
  std::optional<std::string> lane_graph_ref;
  LaneGraph graph;
  std::vector<InitialAgent> initial_agents;
  double dt = 0.05;
  Tick max_ticks = 200;
  Termination termination;
  std::uint64_t seed = 0;
  AccelLimits limits;
  std::optional<AgentId> ego_id;
  BehaviorParams behavior;
  LanguageGoals goals;
  ScriptSet scripts;

  bool operator==(const ScenarioSpec& o) const;

  /// Throws InvalidScenario on a broken invariant.
  void validate() const;

  /// The explicitly named ego, else the first policy/human agent, else the lowest id.
  AgentId resolved_ego() const;
  const InitialAgent* find_agent(AgentId id) const;
};

/// Tick-0 world of a scenario.
WorldState initial_world(const ScenarioSpec& spec);

}  // namespace skylite
