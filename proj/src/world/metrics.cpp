#include "skylite/world/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "skylite/core/error.hpp"
#include "skylite/world/safety.hpp"

namespace skylite {

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  j["ego"] = ego;
  j["ticks"] = ticks;
  j["safety_violation_count"] = safety_violation_count;
  j["collision_count"] = collision_count;
  j["success"] = success;
  j["route_completion"] = route_completion;
  j["traveled_distance"] = traveled_distance;
  j["average_speed"] = average_speed;
  // JSON has no infinity
  j["min_ttc"] = std::isfinite(min_ttc) ? nlohmann::json(min_ttc) : nlohmann::json(nullptr);
  j["disturbance_rate"] = disturbance_rate;
  return j;
}

MetricsReport episode_metrics(std::span<const WorldState> trace, const ScenarioSpec& spec) {
  if (trace.empty()) throw Error(ErrorCode::EmptyTrace, "episode trace is empty");
  MetricsReport r;
  r.ego = spec.resolved_ego();
  r.ticks = trace.size();
  r.min_ttc = kInfiniteTtc;

  const AgentState* first = trace.front().find(r.ego);
  if (!first) throw Error(ErrorCode::UnknownAgent, "ego missing from trace");
  const double start_odometer = first->odometer;
  double speed_sum = 0.0;
  std::size_t disturbed = 0;
  bool collided = false;
  double progress = 0.0;
  bool reached = false;

  for (const WorldState& w : trace) {
    const AgentState* ego = w.find(r.ego);
    if (!ego) throw Error(ErrorCode::UnknownAgent, "ego missing from trace");
    const bool in_collision =
        std::any_of(w.collisions_this_tick.begin(), w.collisions_this_tick.end(),
                    [&](const auto& p) { return p.first == r.ego || p.second == r.ego; });
    const double ttc = leading_ttc(w, r.ego, spec.graph, spec.behavior.leader_horizon);
    if (in_collision) {
      ++r.collision_count;
      collided = true;
    }
    if (in_collision || ttc < kSafetyViolationTtc) ++r.safety_violation_count;
    r.min_ttc = std::min(r.min_ttc, ttc);
    speed_sum += ego->v;
    progress = ego->odometer - start_odometer;
    if (progress >= spec.termination.route_completion_s && !collided) reached = true;
    if (auto f = find_follower(w, *ego, ego->lane_id, spec.graph, spec.behavior.leader_horizon)) {
      if (w.agents[f->index].a < -spec.behavior.idm.b) ++disturbed;
    }
  }
  r.traveled_distance = progress;
  r.average_speed = speed_sum / static_cast<double>(trace.size());
  r.route_completion = spec.termination.route_completion_s > 0.0
                           ? std::min(1.0, progress / spec.termination.route_completion_s)
                           : 1.0;
  r.success = reached && !collided;
  r.disturbance_rate = static_cast<double>(disturbed) / static_cast<double>(trace.size());
  return r;
}

}  // namespace skylite
