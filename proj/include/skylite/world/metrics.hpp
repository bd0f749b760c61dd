#pragma once

#include <span>

#include <json.hpp>

#include "skylite/world/scenario.hpp"
#include "skylite/world/types.hpp"

namespace skylite {

/// TTC below this counts as a near miss for the safety-violation tally.
inline constexpr double kSafetyViolationTtc = 1.0;

struct MetricsReport {
  AgentId ego = 0;
  std::size_t ticks = 0;
  std::size_t safety_violation_count = 0;  // ticks in collision or under kSafetyViolationTtc
  std::size_t collision_count = 0;         // ticks with the ego in a collision pair
  bool success = false;
  double route_completion = 0.0;   // [0, 1]
  double traveled_distance = 0.0;  // m
  double average_speed = 0.0;      // m/s
  double min_ttc = 0.0;            // s, may be infinite
  double disturbance_rate = 0.0;   // fraction of ticks a follower brakes harder than IDM b

  nlohmann::json to_json() const;
};

/// Episode summary for the scenario's ego. Throws EmptyTrace.
MetricsReport episode_metrics(std::span<const WorldState> trace, const ScenarioSpec& spec);

}  // namespace skylite
