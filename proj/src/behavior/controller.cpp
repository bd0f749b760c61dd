#include "skylite/behavior/controller.hpp"

#include <algorithm>
#include <limits>

#include "skylite/behavior/idm.hpp"
#include "skylite/behavior/mobil.hpp"
#include "skylite/core/error.hpp"
#include "skylite/world/safety.hpp"
#include "skylite/world/step.hpp"

namespace skylite {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const AgentState& agent_of(const WorldState& world, AgentId id) {
  const AgentState* a = world.find(id);
  if (!a) throw Error(ErrorCode::UnknownAgent, "no agent " + std::to_string(id));
  return *a;
}

double idm_for(const AgentState& ego, const std::optional<NeighborInfo>& leader,
               const ScenarioSpec& spec) {
  const IDMParams idm = resolve_idm(spec.behavior.idm, spec.graph.lane(ego.lane_id).speed_limit);
  if (!leader) return spec.limits.clamp(idm_acceleration(ego.v, kInf, 0.0, idm));
  if (!(leader->gap > 0.0)) return spec.limits.min;
  return spec.limits.clamp(idm_acceleration(ego.v, leader->gap, ego.v - leader->other_v, idm));
}

std::optional<MobilVehicle> ahead(const WorldState& world, const AgentState& ego,
                                  const std::optional<NeighborInfo>& n) {
  if (!n) return std::nullopt;
  const AgentState& o = world.agents[n->index];
  return MobilVehicle{ego.s + n->gap + 0.5 * (ego.length + o.length), o.v, o.length};
}

std::optional<MobilVehicle> behind(const WorldState& world, const AgentState& ego,
                                   const std::optional<NeighborInfo>& n) {
  if (!n) return std::nullopt;
  const AgentState& o = world.agents[n->index];
  return MobilVehicle{ego.s - n->gap - 0.5 * (ego.length + o.length), o.v, o.length};
}

bool overlapping(const std::optional<NeighborInfo>& n) { return n && !(n->gap > 0.0); }

// incentive for moving to `target`, or nullopt when MOBIL keeps the lane
std::optional<double> side_incentive(const WorldState& world, const AgentState& ego, LaneId target,
                                     const ScenarioSpec& spec) {
  const double h = spec.behavior.leader_horizon;
  const auto cur_lead = find_leader(world, ego, ego.lane_id, spec.graph, h);
  const auto cur_follow = find_follower(world, ego, ego.lane_id, spec.graph, h);
  const auto tgt_lead = find_leader(world, ego, target, spec.graph, h);
  const auto tgt_follow = find_follower(world, ego, target, spec.graph, h);
  if (overlapping(cur_lead) || overlapping(cur_follow) || overlapping(tgt_lead) ||
      overlapping(tgt_follow))
    return std::nullopt;

  MobilSituation sit;
  sit.ego = {ego.s, ego.v, ego.length};
  sit.current_leader = ahead(world, ego, cur_lead);
  sit.current_follower = behind(world, ego, cur_follow);
  sit.target_leader = ahead(world, ego, tgt_lead);
  sit.target_follower = behind(world, ego, tgt_follow);

  // ego judges the target lane by its own lane's desired speed
  const IDMParams idm = resolve_idm(spec.behavior.idm, spec.graph.lane(ego.lane_id).speed_limit);
  const MobilAccelerations acc = mobil_accelerations(sit, idm);
  if (mobil_criterion(acc, spec.behavior.mobil) != LaneDecision::Change) return std::nullopt;
  return mobil_incentive(acc, spec.behavior.mobil);
}

}  // namespace

ActionCommand idm_action(const WorldState& world, AgentId agent, const ScenarioSpec& spec,
                         ActionSource source) {
  const AgentState& ego = agent_of(world, agent);
  const auto leader = find_leader(world, ego, spec.graph, spec.behavior.leader_horizon);
  return {agent, world.tick, idm_for(ego, leader, spec), LaneIntent::Keep, source};
}

ActionCommand behavior_action(const WorldState& world, AgentId agent, const ScenarioSpec& spec) {
  ActionCommand cmd = idm_action(world, agent, spec, ActionSource::BehaviorModel);
  const AgentState& ego = agent_of(world, agent);
  if (ego.lane_change != LaneChange::None) return cmd;

  const Lane& lane = spec.graph.lane(ego.lane_id);
  std::optional<double> left, right;
  if (lane.left_neighbor) left = side_incentive(world, ego, *lane.left_neighbor, spec);
  if (lane.right_neighbor) right = side_incentive(world, ego, *lane.right_neighbor, spec);
  if (left && (!right || *left >= *right)) {
    cmd.lane_intent = LaneIntent::Left;
  } else if (right) {
    cmd.lane_intent = LaneIntent::Right;
  }
  return cmd;
}

GuardianObservation observe(const WorldState& world, AgentId agent, const ScenarioSpec& spec) {
  const AgentState& ego = agent_of(world, agent);
  GuardianObservation obs;
  obs.agent_id = agent;
  obs.tick = world.tick;
  obs.v = ego.v;
  obs.speed_limit = spec.graph.lane(ego.lane_id).speed_limit;
  const auto leader = find_leader(world, ego, spec.graph, spec.behavior.leader_horizon);
  if (leader) {
    obs.leader_gap = leader->gap;
    obs.closing_speed = ego.v - leader->other_v;
  }
  obs.min_ttc = leading_ttc(world, agent, spec.graph, spec.behavior.leader_horizon);
  return obs;
}

std::optional<ActionCommand> guardian_policy(const GuardianObservation& obs, const IDMParams& idm,
                                             double ttc_threshold, const AccelLimits& limits) {
  if (!(obs.min_ttc < ttc_threshold)) return std::nullopt;
  double accel = limits.min;
  if (obs.leader_gap > 0.0) {
    const IDMParams p = resolve_idm(idm, obs.speed_limit);
    accel = std::min(idm_acceleration(obs.v, obs.leader_gap, obs.closing_speed, p), -idm.b);
  }
  return ActionCommand{obs.agent_id, obs.tick, limits.clamp(accel), LaneIntent::Keep,
                       ActionSource::Human};
}

ActionCommand local_action(const WorldState& world, const InitialAgent& agent, const ScenarioSpec& spec,
                           Controller* controller) {
  const AgentId id = agent.state.agent_id;
  ActionCommand cmd;
  if (controller) {
    cmd = controller->act(world, id, spec);
  } else {
    switch (agent.behavior.controller) {
      case ControllerKind::Behavior: cmd = behavior_action(world, id, spec); break;
      case ControllerKind::Script: cmd = ScriptController{}.act(world, id, spec); break;
      default: cmd = fallback_action(world, id, spec); break;
    }
  }
  cmd.agent_id = id;
  cmd.tick = world.tick;
  return cmd;
}

std::vector<WorldState> run_episode(const ScenarioSpec& spec, const ControllerLookup& lookup,
                                    const EpisodeOptions& opt) {
  const Tick ticks = opt.ticks < 0 ? spec.max_ticks : opt.ticks;
  const StepContext ctx = step_context(spec);
  std::vector<WorldState> trace{initial_world(spec)};
  std::vector<ActionCommand> actions;
  for (Tick t = 0; t < ticks; ++t) {
    const WorldState& w = trace.back();
    actions.clear();
    for (const InitialAgent& ia : spec.initial_agents)
      actions.push_back(local_action(w, ia, spec, lookup ? lookup(ia) : nullptr));
    if (opt.on_tick) opt.on_tick(w, actions);
    trace.push_back(step(w, actions, ctx));
    if (opt.stop_at_collision && !trace.back().collisions_this_tick.empty()) break;
  }
  return trace;
}

}  // namespace skylite
