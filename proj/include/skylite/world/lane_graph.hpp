#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "skylite/world/types.hpp"

namespace skylite {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2&) const = default;
};

struct Lane {
  LaneId id = 0;
  std::vector<Point2> centerline;
  double width = 3.5;
  double speed_limit = 30.0;
  std::optional<LaneId> left_neighbor;
  std::optional<LaneId> right_neighbor;

  bool operator==(const Lane& o) const {
    return id == o.id && centerline == o.centerline && width == o.width &&
           speed_limit == o.speed_limit && left_neighbor == o.left_neighbor &&
           right_neighbor == o.right_neighbor;
  }
};

/// Position and unit tangent of a point on a lane.
struct LanePose {
  Point2 position;
  double tx = 1.0;  // unit tangent
  double ty = 0.0;
};

struct LaneProjection {
  LaneId lane_id = 0;
  double s = 0.0;
  double d = 0.0;         // signed, positive to the left of travel
  double residual = 0.0;  // |d|
};

/// Immutable road network. Construction validates the invariants and caches
/// cumulative arc lengths so that queries are pure lookups.
class LaneGraph {
 public:
  LaneGraph() = default;
  LaneGraph(std::string name, std::vector<Lane> lanes,
            std::vector<std::pair<LaneId, LaneId>> connections);

  const std::string& name() const { return name_; }
  const std::vector<Lane>& lanes() const { return lanes_; }
  const std::vector<std::pair<LaneId, LaneId>>& connections() const { return connections_; }

  const Lane& lane(LaneId id) const;
  bool has_lane(LaneId id) const;
  double length(LaneId id) const;

  /// Lowest-id successor of a lane, if any.
  std::optional<LaneId> successor(LaneId id) const;
  std::optional<LaneId> predecessor(LaneId id) const;
  std::optional<LaneId> neighbor(LaneId id, LaneChange side) const;

  LanePose pose(LaneId id, double s) const;
  Point2 position(LaneId id, double s, double d) const;
  LaneProjection project(LaneId id, Point2 p) const;

  /// Where two unconnected, non-neighbor lanes' centerlines intersect, as arc
  /// lengths (s on `a`, s on `b`) of the first intersection along `a`.
  std::optional<std::pair<double, double>> crossing(LaneId a, LaneId b) const;
  bool crosses(LaneId a, LaneId b) const { return crossing(a, b).has_value(); }
  /// Nearest lane by residual; ties go to the lowest lane id.
  LaneProjection project(Point2 p) const;

  bool operator==(const LaneGraph& o) const {
    return name_ == o.name_ && lanes_ == o.lanes_ && connections_ == o.connections_;
  }

 private:
  std::size_t index_of(LaneId id) const;

  std::string name_;
  std::vector<Lane> lanes_;  // sorted by id
  std::vector<std::pair<LaneId, LaneId>> connections_;
  std::vector<std::vector<double>> cumulative_;  // per lane, arc length at each vertex
  struct Crossing {
    LaneId a, b;
    double s_a, s_b;
  };
  std::vector<Crossing> crossings_;  // both orientations, sorted by (a, b)
};

/// A straight lane from (x0, y0) to (x1, y1).
Lane straight_lane(LaneId id, Point2 from, Point2 to, double width = 3.5, double speed_limit = 30.0);

/// A straight multi-lane road along +x starting at the origin; lane 0 is the
/// rightmost lane, lane k sits k * width to its left.
LaneGraph straight_road(std::string name, int lane_count, double length, double width = 3.5,
                        double speed_limit = 30.0);

}  // namespace skylite
