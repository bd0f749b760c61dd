#include "skylite/world/safety.hpp"

#include <algorithm>
#include <string>

#include "skylite/core/error.hpp"
#include "skylite/world/step.hpp"

namespace skylite {

namespace {

bool connected(LaneId from, LaneId to, const LaneGraph& graph) {
  for (auto [f, t] : graph.connections()) {
    if (f == from && t == to) return true;
  }
  return false;
}

// Longitudinal coordinate of `other` in the frame of `lane`, if comparable.
std::optional<double> coordinate_in(LaneId lane, const AgentState& other, const LaneGraph& graph) {
  if (other.lane_id == lane) return other.s;
  if (connected(lane, other.lane_id, graph)) return other.s + graph.length(lane);
  if (connected(other.lane_id, lane, graph)) return other.s - graph.length(other.lane_id);
  const Lane& l = graph.lane(lane);
  if (l.left_neighbor == other.lane_id || l.right_neighbor == other.lane_id) {
    return graph.project(lane, agent_position(other, graph)).s;
  }
  return std::nullopt;
}

bool occupies(const AgentState& a, LaneId lane, const LaneGraph& graph) {
  return a.lane_id == lane || encroached_lane(a, graph) == lane;
}

// Position of the ego in the frame of `lane` (its own lane or the lane it encroaches).
double ego_coordinate(const AgentState& ego, LaneId lane, const LaneGraph& graph) {
  if (ego.lane_id == lane) return ego.s;
  return graph.project(lane, agent_position(ego, graph)).s;
}

}  // namespace

double longitudinal_in_lane(const AgentState& ego, const AgentState& other, const LaneGraph& graph) {
  auto c = coordinate_in(ego.lane_id, other, graph);
  if (!c) {
    throw Error(ErrorCode::NotLongitudinallyComparable,
                "agents " + std::to_string(ego.agent_id) + " and " + std::to_string(other.agent_id) +
                    " are on unrelated lanes");
  }
  return *c;
}

double time_to_collision(const AgentState& ego, const AgentState& other, const LaneGraph& graph) {
  const double delta = longitudinal_in_lane(ego, other, graph) - ego.s;
  const double half_lengths = 0.5 * (ego.length + other.length);
  double gap;
  double closing;
  if (delta >= 0.0) {
    gap = delta - half_lengths;
    closing = ego.v - other.v;
  } else {
    gap = -delta - half_lengths;
    closing = other.v - ego.v;
  }
  if (!(closing > 0.0)) return kInfiniteTtc;
  if (gap <= 0.0) return 0.0;
  return gap / closing;
}

std::optional<NeighborInfo> find_leader(const WorldState& world, const AgentState& ego, LaneId lane,
                                        const LaneGraph& graph, double horizon) {
  const double ego_s = ego_coordinate(ego, lane, graph);
  const auto succ = graph.successor(lane);
  std::optional<NeighborInfo> best;
  double best_delta = 0.0;
  for (std::size_t i = 0; i < world.agents.size(); ++i) {
    const AgentState& o = world.agents[i];
    if (o.agent_id == ego.agent_id) continue;
    double o_s;
    if (occupies(o, lane, graph)) {
      o_s = ego_coordinate(o, lane, graph);
    } else if (succ && occupies(o, *succ, graph)) {
      o_s = ego_coordinate(o, *succ, graph) + graph.length(lane);
    } else {
      continue;
    }
    const double delta = o_s - ego_s;
    if (delta < 0.0 || delta > horizon) continue;
    // equal positions: the higher id counts as ahead so the relation is antisymmetric
    if (delta == 0.0 && o.agent_id < ego.agent_id) continue;
    if (!best || delta < best_delta) {
      best_delta = delta;
      best = NeighborInfo{i, delta - 0.5 * (ego.length + o.length), o.v};
    }
  }
  return best;
}

std::optional<NeighborInfo> find_follower(const WorldState& world, const AgentState& ego,
                                          LaneId lane, const LaneGraph& graph, double horizon) {
  const double ego_s = ego_coordinate(ego, lane, graph);
  const auto pred = graph.predecessor(lane);
  std::optional<NeighborInfo> best;
  double best_delta = 0.0;
  for (std::size_t i = 0; i < world.agents.size(); ++i) {
    const AgentState& o = world.agents[i];
    if (o.agent_id == ego.agent_id) continue;
    double o_s;
    if (occupies(o, lane, graph)) {
      o_s = ego_coordinate(o, lane, graph);
    } else if (pred && occupies(o, *pred, graph)) {
      o_s = ego_coordinate(o, *pred, graph) - graph.length(*pred);
    } else {
      continue;
    }
    const double delta = ego_s - o_s;
    if (delta < 0.0 || delta > horizon) continue;
    if (delta == 0.0 && o.agent_id > ego.agent_id) continue;
    if (!best || delta < best_delta) {
      best_delta = delta;
      best = NeighborInfo{i, delta - 0.5 * (ego.length + o.length), o.v};
    }
  }
  return best;
}

std::optional<NeighborInfo> find_leader(const WorldState& world, const AgentState& ego,
                                        const LaneGraph& graph, double horizon) {
  auto best = find_leader(world, ego, ego.lane_id, graph, horizon);
  if (auto other_lane = encroached_lane(ego, graph)) {
    auto cand = find_leader(world, ego, *other_lane, graph, horizon);
    if (cand && (!best || cand->gap < best->gap)) best = cand;
  }
  return best;
}

double leading_ttc(const WorldState& world, AgentId ego_id, const LaneGraph& graph, double horizon) {
  const AgentState* ego = world.find(ego_id);
  if (!ego) throw Error(ErrorCode::UnknownAgent, "no agent " + std::to_string(ego_id));
  double best = kInfiniteTtc;
  std::vector<LaneId> lanes{ego->lane_id};
  if (auto e = encroached_lane(*ego, graph)) lanes.push_back(*e);
  for (LaneId lane : lanes) {
    const double ego_s = ego_coordinate(*ego, lane, graph);
    const auto succ = graph.successor(lane);
    for (const AgentState& o : world.agents) {
      if (o.agent_id == ego_id) continue;
      double o_s;
      if (occupies(o, lane, graph)) {
        o_s = ego_coordinate(o, lane, graph);
      } else if (succ && occupies(o, *succ, graph)) {
        o_s = ego_coordinate(o, *succ, graph) + graph.length(lane);
      } else {
        continue;
      }
      const double delta = o_s - ego_s;
      if (delta < 0.0 || delta > horizon) continue;
      const double closing = ego->v - o.v;
      if (!(closing > 0.0)) continue;
      const double gap = delta - 0.5 * (ego->length + o.length);
      best = std::min(best, gap <= 0.0 ? 0.0 : gap / closing);
    }
  }
  return best;
}

}  // namespace skylite
