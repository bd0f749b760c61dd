#pragma once

#include <limits>
#include <optional>

#include "skylite/world/lane_graph.hpp"
#include "skylite/world/types.hpp"

namespace skylite {

inline constexpr double kInfiniteTtc = std::numeric_limits<double>::infinity();

/// Longitudinal coordinate of `other` expressed in the frame of `ego`'s lane.
/// Valid for the same lane, a directly connected lane, or a neighbor lane.
/// Throws NotLongitudinallyComparable otherwise.
double longitudinal_in_lane(const AgentState& ego, const AgentState& other, const LaneGraph& graph);

/// Bumper-to-bumper gap over closing speed; kInfiniteTtc when not closing.
/// Never negative. Throws NotLongitudinallyComparable.
double time_to_collision(const AgentState& ego, const AgentState& other, const LaneGraph& graph);

struct NeighborInfo {
  std::size_t index = 0;  // into WorldState::agents
  double gap = 0.0;       // bumper-to-bumper, m; may be <= 0 when overlapping
  double other_v = 0.0;
};

/// Nearest agent ahead of `ego` occupying `lane` (its own lane, or the lane it
/// is cutting into) within `horizon` meters, including the lane's successor.
std::optional<NeighborInfo> find_leader(const WorldState& world, const AgentState& ego, LaneId lane,
                                        const LaneGraph& graph, double horizon = 200.0);

/// Nearest agent behind `ego` occupying `lane` within `horizon` meters.
std::optional<NeighborInfo> find_follower(const WorldState& world, const AgentState& ego,
                                          LaneId lane, const LaneGraph& graph,
                                          double horizon = 200.0);

/// Leader over every lane the ego currently occupies.
std::optional<NeighborInfo> find_leader(const WorldState& world, const AgentState& ego,
                                        const LaneGraph& graph, double horizon = 200.0);

/// Minimum TTC of the ego against agents ahead of it in any lane it occupies.
double leading_ttc(const WorldState& world, AgentId ego, const LaneGraph& graph,
                   double horizon = 200.0);

}  // namespace skylite
