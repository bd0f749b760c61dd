#include "skylite/world/lane_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "skylite/core/detmath.hpp"
#include "skylite/core/error.hpp"

namespace skylite {

namespace {
[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::InvalidGraph, msg); }
}  // namespace

LaneGraph::LaneGraph(std::string name, std::vector<Lane> lanes,
                     std::vector<std::pair<LaneId, LaneId>> connections)
    : name_(std::move(name)), lanes_(std::move(lanes)), connections_(std::move(connections)) {
  std::sort(lanes_.begin(), lanes_.end(), [](const Lane& a, const Lane& b) { return a.id < b.id; });
  std::sort(connections_.begin(), connections_.end());
  for (std::size_t i = 1; i < lanes_.size(); ++i) {
    if (lanes_[i].id == lanes_[i - 1].id) invalid("duplicate lane id " + std::to_string(lanes_[i].id));
  }
  cumulative_.reserve(lanes_.size());
  for (const Lane& lane : lanes_) {
    if (lane.centerline.size() < 2) invalid("lane " + std::to_string(lane.id) + " has < 2 points");
    if (!(lane.width > 0.0)) invalid("lane " + std::to_string(lane.id) + " width must be > 0");
    std::vector<double> cum{0.0};
    for (std::size_t i = 1; i < lane.centerline.size(); ++i) {
      const Point2 a = lane.centerline[i - 1];
      const Point2 b = lane.centerline[i];
      if (a == b) invalid("lane " + std::to_string(lane.id) + " has repeated points");
      cum.push_back(cum.back() + det::hypot(b.x - a.x, b.y - a.y));
    }
    cumulative_.push_back(std::move(cum));
  }
  for (const Lane& lane : lanes_) {
    if (lane.left_neighbor) {
      if (!has_lane(*lane.left_neighbor)) invalid("unknown left neighbor of lane " + std::to_string(lane.id));
      if (this->lane(*lane.left_neighbor).right_neighbor != lane.id)
        invalid("neighbor relation of lane " + std::to_string(lane.id) + " is not symmetric");
    }
    if (lane.right_neighbor) {
      if (!has_lane(*lane.right_neighbor)) invalid("unknown right neighbor of lane " + std::to_string(lane.id));
      if (this->lane(*lane.right_neighbor).left_neighbor != lane.id)
        invalid("neighbor relation of lane " + std::to_string(lane.id) + " is not symmetric");
    }
  }
  for (auto [from, to] : connections_) {
    if (!has_lane(from) || !has_lane(to)) invalid("connection endpoint does not exist");
  }

  auto linked = [&](const Lane& x, const Lane& y) {
    if (x.left_neighbor == y.id || x.right_neighbor == y.id) return true;
    return std::binary_search(connections_.begin(), connections_.end(), std::pair{x.id, y.id}) ||
           std::binary_search(connections_.begin(), connections_.end(), std::pair{y.id, x.id});
  };
  for (std::size_t i = 0; i < lanes_.size(); ++i) {
    for (std::size_t j = i + 1; j < lanes_.size(); ++j) {
      const Lane& la = lanes_[i];
      const Lane& lb = lanes_[j];
      if (linked(la, lb)) continue;
      bool found = false;
      for (std::size_t p = 1; p < la.centerline.size() && !found; ++p) {
        const Point2 a0 = la.centerline[p - 1], a1 = la.centerline[p];
        for (std::size_t q = 1; q < lb.centerline.size() && !found; ++q) {
          const Point2 b0 = lb.centerline[q - 1], b1 = lb.centerline[q];
          const double rx = a1.x - a0.x, ry = a1.y - a0.y;
          const double sx = b1.x - b0.x, sy = b1.y - b0.y;
          const double den = rx * sy - ry * sx;
          if (den == 0.0) continue;
          const double qx = b0.x - a0.x, qy = b0.y - a0.y;
          const double t = (qx * sy - qy * sx) / den;
          const double u = (qx * ry - qy * rx) / den;
          if (t < 0.0 || t > 1.0 || u < 0.0 || u > 1.0) continue;
          const double sa = cumulative_[i][p - 1] + t * (cumulative_[i][p] - cumulative_[i][p - 1]);
          const double sb = cumulative_[j][q - 1] + u * (cumulative_[j][q] - cumulative_[j][q - 1]);
          crossings_.push_back({la.id, lb.id, sa, sb});
          crossings_.push_back({lb.id, la.id, sb, sa});
          found = true;
        }
      }
    }
  }
  std::sort(crossings_.begin(), crossings_.end(),
            [](const Crossing& x, const Crossing& y) { return std::pair{x.a, x.b} < std::pair{y.a, y.b}; });
}

std::optional<std::pair<double, double>> LaneGraph::crossing(LaneId a, LaneId b) const {
  auto it = std::lower_bound(crossings_.begin(), crossings_.end(), std::pair{a, b},
                             [](const Crossing& c, std::pair<LaneId, LaneId> k) { return std::pair{c.a, c.b} < k; });
  if (it == crossings_.end() || it->a != a || it->b != b) return std::nullopt;
  return std::pair{it->s_a, it->s_b};
}

std::size_t LaneGraph::index_of(LaneId id) const {
  auto it = std::lower_bound(lanes_.begin(), lanes_.end(), id,
                             [](const Lane& l, LaneId v) { return l.id < v; });
  if (it == lanes_.end() || it->id != id) invalid("unknown lane " + std::to_string(id));
  return static_cast<std::size_t>(it - lanes_.begin());
}

bool LaneGraph::has_lane(LaneId id) const {
  auto it = std::lower_bound(lanes_.begin(), lanes_.end(), id,
                             [](const Lane& l, LaneId v) { return l.id < v; });
  return it != lanes_.end() && it->id == id;
}

const Lane& LaneGraph::lane(LaneId id) const { return lanes_[index_of(id)]; }

double LaneGraph::length(LaneId id) const { return cumulative_[index_of(id)].back(); }

std::optional<LaneId> LaneGraph::successor(LaneId id) const {
  for (auto [from, to] : connections_) {
    if (from == id) return to;
  }
  return std::nullopt;
}

std::optional<LaneId> LaneGraph::predecessor(LaneId id) const {
  for (auto [from, to] : connections_) {
    if (to == id) return from;
  }
  return std::nullopt;
}

std::optional<LaneId> LaneGraph::neighbor(LaneId id, LaneChange side) const {
  const Lane& l = lane(id);
  switch (side) {
    case LaneChange::ToLeft: return l.left_neighbor;
    case LaneChange::ToRight: return l.right_neighbor;
    case LaneChange::None: return std::nullopt;
  }
  return std::nullopt;
}

LanePose LaneGraph::pose(LaneId id, double s) const {
  const std::size_t li = index_of(id);
  const Lane& l = lanes_[li];
  const std::vector<double>& cum = cumulative_[li];
  // segment containing s; s outside [0, length] extrapolates the end segments
  std::size_t seg = 0;
  while (seg + 2 < cum.size() && s > cum[seg + 1]) ++seg;
  const Point2 a = l.centerline[seg];
  const Point2 b = l.centerline[seg + 1];
  const double len = cum[seg + 1] - cum[seg];
  const double tx = (b.x - a.x) / len;
  const double ty = (b.y - a.y) / len;
  const double t = s - cum[seg];
  return LanePose{{a.x + tx * t, a.y + ty * t}, tx, ty};
}

Point2 LaneGraph::position(LaneId id, double s, double d) const {
  const LanePose p = pose(id, s);
  // left normal is (-ty, tx)
  return {p.position.x - p.ty * d, p.position.y + p.tx * d};
}

LaneProjection LaneGraph::project(LaneId id, Point2 p) const {
  const std::size_t li = index_of(id);
  const Lane& l = lanes_[li];
  const std::vector<double>& cum = cumulative_[li];
  LaneProjection best{id, 0.0, 0.0, std::numeric_limits<double>::infinity()};
  const std::size_t nseg = l.centerline.size() - 1;
  for (std::size_t seg = 0; seg < nseg; ++seg) {
    const Point2 a = l.centerline[seg];
    const Point2 b = l.centerline[seg + 1];
    const double len = cum[seg + 1] - cum[seg];
    const double tx = (b.x - a.x) / len;
    const double ty = (b.y - a.y) / len;
    const double rx = p.x - a.x;
    const double ry = p.y - a.y;
    double t = rx * tx + ry * ty;
    // s extrapolates past the lane ends; the residual is the true distance
    if (seg > 0 && t < 0.0) t = 0.0;
    if (seg + 1 < nseg && t > len) t = len;
    const double d = tx * ry - ty * rx;
    const double tc = t < 0.0 ? 0.0 : (t > len ? len : t);
    const double ex = rx - tx * tc;
    const double ey = ry - ty * tc;
    const double residual = det::hypot(ex, ey);
    if (residual < best.residual) best = {id, cum[seg] + t, d, residual};
  }
  return best;
}

LaneProjection LaneGraph::project(Point2 p) const {
  if (lanes_.empty()) invalid("empty lane graph");
  LaneProjection best = project(lanes_.front().id, p);
  for (std::size_t i = 1; i < lanes_.size(); ++i) {
    LaneProjection cand = project(lanes_[i].id, p);
    if (cand.residual < best.residual) best = cand;
  }
  return best;
}

Lane straight_lane(LaneId id, Point2 from, Point2 to, double width, double speed_limit) {
  Lane l;
  l.id = id;
  l.centerline = {from, to};
  l.width = width;
  l.speed_limit = speed_limit;
  return l;
}

LaneGraph straight_road(std::string name, int lane_count, double length, double width,
                        double speed_limit) {
  std::vector<Lane> lanes;
  for (int k = 0; k < lane_count; ++k) {
    const double y = k * width;
    Lane l = straight_lane(k, {0.0, y}, {length, y}, width, speed_limit);
    if (k + 1 < lane_count) l.left_neighbor = k + 1;
    if (k > 0) l.right_neighbor = k - 1;
    lanes.push_back(std::move(l));
  }
  return LaneGraph(std::move(name), std::move(lanes), {});
}

}  // namespace skylite
