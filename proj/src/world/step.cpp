#include "skylite/world/step.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "skylite/core/detmath.hpp"
#include "skylite/core/error.hpp"

namespace skylite {

namespace {

bool finite_agent(const AgentState& a) {
  return std::isfinite(a.s) && std::isfinite(a.d) && std::isfinite(a.v) && std::isfinite(a.a) &&
         std::isfinite(a.heading) && std::isfinite(a.lane_change_progress) &&
         std::isfinite(a.odometer);
}

double side_sign(LaneChange lc) { return lc == LaneChange::ToLeft ? 1.0 : -1.0; }

void step_scripted(AgentState& a, const std::vector<ScriptSample>& script, Tick next_tick,
                   const LaneGraph& graph, double dt) {
  const std::size_t idx =
      std::min<std::size_t>(static_cast<std::size_t>(next_tick), script.size() - 1);
  const ScriptSample& smp = script[idx];
  const Point2 before = graph.position(a.lane_id, a.s, a.d);
  const Point2 after = graph.position(smp.lane_id, smp.s, smp.d);
  a.a = (smp.v - a.v) / dt;
  a.lane_id = smp.lane_id;
  a.s = smp.s;
  a.d = smp.d;
  a.v = smp.v;
  a.heading = smp.heading;
  a.lane_change = LaneChange::None;
  a.lane_change_progress = 0.0;
  a.odometer = a.odometer + det::hypot(after.x - before.x, after.y - before.y);
}

void step_kinematic(AgentState& a, const ActionCommand& cmd, const StepContext& ctx) {
  const LaneGraph& graph = ctx.graph;
  const double dt = ctx.dt;
  const double acc = ctx.limits.clamp(cmd.accel);

  double v1 = a.v + acc * dt;
  double ds;
  if (v1 < 0.0) {
    // stops inside the tick: distance covered until v reaches zero
    ds = -(a.v * a.v) / (2.0 * acc);
    v1 = 0.0;
  } else {
    ds = a.v * dt + 0.5 * acc * dt * dt;
  }
  double s1 = a.s + ds;
  a.a = acc;
  a.v = v1;
  a.odometer = a.odometer + ds;

  if (a.lane_change == LaneChange::None && cmd.lane_intent != LaneIntent::Keep) {
    const LaneChange side =
        cmd.lane_intent == LaneIntent::Left ? LaneChange::ToLeft : LaneChange::ToRight;
    if (graph.neighbor(a.lane_id, side)) {
      a.lane_change = side;
      a.lane_change_progress = 0.0;
    }
  }

  double lateral_rate = 0.0;
  if (a.lane_change != LaneChange::None) {
    const auto target = graph.neighbor(a.lane_id, a.lane_change);
    if (!target) {
      a.lane_change = LaneChange::None;
      a.lane_change_progress = 0.0;
    } else {
      const double offset = 0.5 * (graph.lane(a.lane_id).width + graph.lane(*target).width);
      const double sign = side_sign(a.lane_change);
      const double before = a.lane_change_progress;
      const double increment = dt / ctx.lane_change_duration;
      double after = before + increment;
      // snap when less than half a tick remains so rounding cannot add a tick
      if (after > 1.0 - 0.5 * increment) after = 1.0;
      a.d = a.d + sign * offset * (after - before);
      a.lane_change_progress = after;
      lateral_rate = sign * offset / ctx.lane_change_duration;
      if (after >= 1.0) {
        const Point2 p = graph.position(a.lane_id, s1, a.d);
        const LaneProjection proj = graph.project(*target, p);
        a.lane_id = *target;
        s1 = proj.s;
        a.d = proj.d;
        a.lane_change = LaneChange::None;
        a.lane_change_progress = 0.0;
        lateral_rate = 0.0;
      }
    }
  }

  // leaving the lane through its end; a lane change in progress is abandoned
  double len = graph.length(a.lane_id);
  while (s1 > len) {
    const auto next = graph.successor(a.lane_id);
    if (!next) {
      s1 = len;
      a.v = 0.0;
      break;
    }
    s1 = s1 - len;
    a.lane_id = *next;
    a.d = 0.0;
    a.lane_change = LaneChange::None;
    a.lane_change_progress = 0.0;
    lateral_rate = 0.0;
    len = graph.length(a.lane_id);
  }
  if (s1 < 0.0) s1 = 0.0;
  a.s = s1;

  const LanePose pose = graph.pose(a.lane_id, a.s);
  if (a.v < 0.1 || lateral_rate == 0.0) {
    a.heading = det::atan2(pose.ty, pose.tx);
  } else {
    const double hx = a.v * pose.tx - lateral_rate * pose.ty;
    const double hy = a.v * pose.ty + lateral_rate * pose.tx;
    a.heading = det::atan2(hy, hx);
  }
}

bool lanes_related(LaneId a, LaneId b, const LaneGraph& graph) {
  if (a == b) return true;
  const Lane& la = graph.lane(a);
  if (la.left_neighbor == b || la.right_neighbor == b) return true;
  for (auto [from, to] : graph.connections()) {
    if ((from == a && to == b) || (from == b && to == a)) return true;
  }
  return graph.crosses(a, b);
}

struct Box {
  double cx, cy;
  double ux, uy;  // unit heading
  double hl, hw;
};

Box make_box(const AgentState& a, const LaneGraph& graph) {
  const Point2 c = agent_position(a, graph);
  const det::SinCos sc = det::sincos(a.heading);
  return {c.x, c.y, sc.cos, sc.sin, 0.5 * a.length, 0.5 * a.width};
}

double box_radius(const Box& b, double ax, double ay) {
  const double along = std::fabs(ax * b.ux + ay * b.uy);
  const double across = std::fabs(-ax * b.uy + ay * b.ux);
  return b.hl * along + b.hw * across;
}

bool boxes_overlap(const Box& p, const Box& q) {
  const double dx = q.cx - p.cx;
  const double dy = q.cy - p.cy;
  const double axes[4][2] = {{p.ux, p.uy}, {-p.uy, p.ux}, {q.ux, q.uy}, {-q.uy, q.ux}};
  for (const auto& ax : axes) {
    const double dist = std::fabs(dx * ax[0] + dy * ax[1]);
    if (dist >= box_radius(p, ax[0], ax[1]) + box_radius(q, ax[0], ax[1])) return false;
  }
  return true;
}

}  // namespace

Point2 agent_position(const AgentState& a, const LaneGraph& graph) {
  return graph.position(a.lane_id, a.s, a.d);
}

std::optional<LaneId> encroached_lane(const AgentState& a, const LaneGraph& graph) {
  const Lane& lane = graph.lane(a.lane_id);
  if (std::fabs(a.d) + 0.5 * a.width <= 0.5 * lane.width) return std::nullopt;
  if (a.d > 0.0) return lane.left_neighbor;
  if (a.d < 0.0) return lane.right_neighbor;
  return std::nullopt;
}

std::vector<std::pair<AgentId, AgentId>> detect_collisions(const std::vector<AgentState>& agents,
                                                           const LaneGraph& graph) {
  std::vector<std::pair<AgentId, AgentId>> out;
  std::vector<Box> boxes;
  boxes.reserve(agents.size());
  for (const AgentState& a : agents) boxes.push_back(make_box(a, graph));
  for (std::size_t i = 0; i < agents.size(); ++i) {
    for (std::size_t j = i + 1; j < agents.size(); ++j) {
      const double dx = boxes[j].cx - boxes[i].cx;
      const double dy = boxes[j].cy - boxes[i].cy;
      if (dx * dx + dy * dy > kCollisionWindow * kCollisionWindow) continue;
      if (!lanes_related(agents[i].lane_id, agents[j].lane_id, graph)) continue;
      if (boxes_overlap(boxes[i], boxes[j])) {
        const AgentId lo = std::min(agents[i].agent_id, agents[j].agent_id);
        const AgentId hi = std::max(agents[i].agent_id, agents[j].agent_id);
        out.emplace_back(lo, hi);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

WorldState step(const WorldState& world, std::span<const ActionCommand> actions,
                const StepContext& ctx) {
  if (!(ctx.dt > 0.0) || !std::isfinite(ctx.dt))
    throw Error(ErrorCode::NonFiniteInput, "dt must be positive and finite");

  std::vector<const ActionCommand*> by_agent(world.agents.size(), nullptr);
  for (const ActionCommand& cmd : actions) {
    auto it = std::lower_bound(world.agents.begin(), world.agents.end(), cmd.agent_id,
                               [](const AgentState& a, AgentId v) { return a.agent_id < v; });
    if (it == world.agents.end() || it->agent_id != cmd.agent_id)
      throw Error(ErrorCode::UnknownAgent, "action for unknown agent " + std::to_string(cmd.agent_id));
    if (!std::isfinite(cmd.accel))
      throw Error(ErrorCode::NonFiniteInput, "non-finite accel for agent " + std::to_string(cmd.agent_id));
    if (cmd.tick != world.tick)
      throw Error(ErrorCode::MissingAction, "action for agent " + std::to_string(cmd.agent_id) +
                                                " targets tick " + std::to_string(cmd.tick) +
                                                ", world is at " + std::to_string(world.tick));
    const auto idx = static_cast<std::size_t>(it - world.agents.begin());
    if (by_agent[idx])
      throw Error(ErrorCode::MissingAction, "duplicate action for agent " + std::to_string(cmd.agent_id));
    by_agent[idx] = &cmd;
  }
  for (std::size_t i = 0; i < world.agents.size(); ++i) {
    if (!by_agent[i])
      throw Error(ErrorCode::MissingAction, "no action for agent " + std::to_string(world.agents[i].agent_id));
    if (!finite_agent(world.agents[i]))
      throw Error(ErrorCode::NonFiniteInput, "non-finite state for agent " + std::to_string(world.agents[i].agent_id));
  }

  WorldState next;
  next.tick = world.tick + 1;
  next.sim_time = static_cast<double>(next.tick) * ctx.dt;
  next.rng_counter = world.rng_counter;
  next.agents = world.agents;
  for (std::size_t i = 0; i < next.agents.size(); ++i) {
    AgentState& a = next.agents[i];
    const std::vector<ScriptSample>* script = nullptr;
    if (ctx.scripts) {
      auto it = ctx.scripts->find(a.agent_id);
      if (it != ctx.scripts->end() && !it->second.empty()) script = &it->second;
    }
    if (script) {
      step_scripted(a, *script, next.tick, ctx.graph, ctx.dt);
    } else {
      step_kinematic(a, *by_agent[i], ctx);
    }
  }
  next.collisions_this_tick = detect_collisions(next.agents, ctx.graph);
  return next;
}

StepContext step_context(const ScenarioSpec& spec) {
  return StepContext{spec.graph, spec.dt, spec.limits, &spec.scripts, kLaneChangeDuration};
}

}  // namespace skylite
