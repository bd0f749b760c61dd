#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "skylite/behavior/params.hpp"
#include "skylite/world/scenario.hpp"
#include "skylite/world/types.hpp"

namespace skylite {

/// Produces one agent's action for the current tick.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual ActionCommand act(const WorldState& world, AgentId agent, const ScenarioSpec& spec) = 0;
};

/// Clamped IDM acceleration behind the current leader, lane keep.
ActionCommand idm_action(const WorldState& world, AgentId agent, const ScenarioSpec& spec,
                         ActionSource source);

/// The action substituted for a missing lockstep input.
inline ActionCommand fallback_action(const WorldState& world, AgentId agent, const ScenarioSpec& spec) {
  return idm_action(world, agent, spec, ActionSource::Fallback);
}

/// IDM longitudinal control plus a MOBIL lane-change decision to either side.
ActionCommand behavior_action(const WorldState& world, AgentId agent, const ScenarioSpec& spec);

class BehaviorController final : public Controller {
 public:
  ActionCommand act(const WorldState& world, AgentId agent, const ScenarioSpec& spec) override {
    return behavior_action(world, agent, spec);
  }
};

/// Lane-keeping IDM driver, reported as `source`.
class IdmController final : public Controller {
 public:
  explicit IdmController(ActionSource source = ActionSource::Policy) : source_(source) {}
  ActionCommand act(const WorldState& world, AgentId agent, const ScenarioSpec& spec) override {
    return idm_action(world, agent, spec, source_);
  }

 private:
  ActionSource source_;
};

/// Scripted agents ignore their action; this supplies the required placeholder.
class ScriptController final : public Controller {
 public:
  ActionCommand act(const WorldState& world, AgentId agent, const ScenarioSpec&) override {
    return {agent, world.tick, 0.0, LaneIntent::Keep, ActionSource::BehaviorModel};
  }
};

/// What the guardian needs to know about one agent.
struct GuardianObservation {
  AgentId agent_id = 0;
  Tick tick = 0;
  double v = 0.0;
  double leader_gap = std::numeric_limits<double>::infinity();
  double closing_speed = 0.0;  // v - v_leader
  double min_ttc = std::numeric_limits<double>::infinity();
  double speed_limit = 30.0;
};

GuardianObservation observe(const WorldState& world, AgentId agent, const ScenarioSpec& spec);

/// Scripted mentor: IDM braking with source=human whenever the leading TTC
/// falls below `ttc_threshold`, nothing otherwise.
std::optional<ActionCommand> guardian_policy(const GuardianObservation& obs, const IDMParams& idm,
                                             double ttc_threshold, const AccelLimits& limits = {});

/// Picks the controller for a locally driven agent; nullptr selects the
/// default for the agent's ControllerKind (behavior model, script, or fallback).
using ControllerLookup = std::function<Controller*(const InitialAgent&)>;

ActionCommand local_action(const WorldState& world, const InitialAgent& agent, const ScenarioSpec& spec,
                           Controller* controller);

struct EpisodeOptions {
  Tick ticks = -1;  // spec.max_ticks when negative
  bool stop_at_collision = false;
  std::function<void(const WorldState& before, std::span<const ActionCommand> actions)> on_tick;
};

/// Single-process run from the initial world. The trace includes tick 0.
std::vector<WorldState> run_episode(const ScenarioSpec& spec, const ControllerLookup& lookup = {},
                                    const EpisodeOptions& opt = {});

}  // namespace skylite
