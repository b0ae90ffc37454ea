#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "trafficforge/common.hpp"
#include "trafficforge/polyline.hpp"

namespace trafficforge {

/// One centerline from the input map. Bidirectional roads carry `lanes` lanes
/// in total, split between the two travel directions.
struct CenterlineSpec {
  std::int64_t id = 0;
  std::vector<Vec2> points;
  int lanes = 1;
  bool oneway = true;
  std::optional<double> lane_width;
};

struct MapSpec {
  std::vector<CenterlineSpec> centerlines;
};

struct GraphOptions {
  double join_tolerance = 0.5;
  double default_lane_width = 3.5;
  double index_cell_size = 20.0;
};

struct LaneNode {
  int id = 0;
  Vec2 position;
};

struct LaneEdge {
  int id = 0;
  int from_node = 0;
  int to_node = 0;
  Polyline polyline;
  double lane_width = 3.5;

  // Provenance from the lane split; used for lane-change neighbours.
  std::int64_t centerline_id = 0;
  int lane_index = 0;   // 0 = rightmost lane of the source centerline's forward direction
  bool reversed = false;
  std::optional<int> left_neighbor;
  std::optional<int> right_neighbor;

  double length() const { return polyline.length(); }
};

struct LaneCoordinate {
  int edge_id = 0;
  double arc_s = 0.0;
  double lateral_offset = 0.0;  // + left of travel direction
  double lane_heading = 0.0;
  double distance() const { return std::abs(lateral_offset); }
};

struct ProjectOptions {
  double max_snap_distance = 10.0;
  /// Distances within this band count as a tie.
  double tie_tolerance = 1e-9;
};

/// Directed lane-centerline graph. Immutable after construction.
class RoadGraph {
 public:
  RoadGraph() = default;

  static RoadGraph build(const MapSpec& spec, const GraphOptions& options = {});

  std::span<const LaneNode> nodes() const { return nodes_; }
  std::span<const LaneEdge> edges() const { return edges_; }
  const LaneEdge& edge(int id) const { return edges_.at(static_cast<std::size_t>(id)); }
  const LaneNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  /// Outgoing edge ids, ascending.
  std::span<const int> outgoing(int node_id) const { return out_.at(static_cast<std::size_t>(node_id)); }
  /// Incoming edge ids, ascending.
  std::span<const int> incoming(int node_id) const { return in_.at(static_cast<std::size_t>(node_id)); }
  bool empty() const { return edges_.empty(); }
  double max_lane_width() const { return max_lane_width_; }

  /// Nearest edge to `p`. Throws OffMapError beyond options.max_snap_distance.
  LaneCoordinate project(const Vec2& p, std::optional<double> heading_hint = std::nullopt,
                         const ProjectOptions& options = {}) const;

  /// Projection onto one specific edge.
  LaneCoordinate project_onto(int edge_id, const Vec2& p) const;

  /// True when p lies within lane_width/2 + margin of some centerline.
  bool on_road(const Vec2& p, double margin = 0.0) const;

  /// Edge ids with at least one segment touching the axis-aligned box.
  std::vector<int> edges_near(const Vec2& lo, const Vec2& hi) const;

 private:
  struct SegmentRef {
    int edge;
    int segment;
  };
  using CellKey = std::int64_t;
  CellKey cell_key(std::int64_t ix, std::int64_t iy) const;
  void build_index(double cell_size);
  template <typename Fn>
  void for_each_segment_near(const Vec2& lo, const Vec2& hi, Fn&& fn) const;

  std::vector<LaneNode> nodes_;
  std::vector<LaneEdge> edges_;
  std::vector<std::vector<int>> out_;
  std::vector<std::vector<int>> in_;
  double max_lane_width_ = 0.0;
  double cell_size_ = 20.0;
  std::unordered_map<CellKey, std::vector<SegmentRef>> index_;
};

RoadGraph build_graph(const MapSpec& spec, const GraphOptions& options = {});

LaneCoordinate project_to_lane(const RoadGraph& graph, const Vec2& point,
                               std::optional<double> heading_hint = std::nullopt,
                               const ProjectOptions& options = {});

struct RouteOptions {
  double horizon_dist = 120.0;
  int max_routes = 16;
  double straight_threshold = deg_to_rad(30.0);
  double u_turn_threshold = deg_to_rad(150.0);
};

/// A path of consecutive edges starting at a lane coordinate. The geometry
/// begins at the start foot point.
struct Route {
  std::vector<int> edge_ids;
  LaneCoordinate start;
  double total_length = 0.0;
  Maneuver maneuver = Maneuver::kStraight;
  double cumulative_heading_change = 0.0;
  bool u_turn = false;  // |heading change| above the U-turn threshold; kept but flagged

  Polyline geometry;
  /// Route arc position at which each edge's own arc 0 lies (first entry is -start.arc_s).
  std::vector<double> edge_offsets;

  /// Route arc position of a coordinate on one of the route's edges, if the edge is on the route.
  /// Repeated edges resolve to the first occurrence at or after `min_s`.
  std::optional<double> route_s(int edge_id, double arc_s, double min_s = -1e300) const;
  /// Edge coordinate at route arc position s (clamped to the route).
  std::pair<int, double> edge_at(double s) const;
};

/// Builds a route along `edge_ids` starting at `start` (must be on the first edge).
Route make_route(const RoadGraph& graph, const LaneCoordinate& start, std::vector<int> edge_ids,
                 const RouteOptions& options = {});

std::vector<Route> enumerate_routes(const RoadGraph& graph, const LaneCoordinate& start,
                                    const RouteOptions& options = {});

Maneuver classify_maneuver(std::span<const Vec2> route_polyline,
                           double straight_threshold = deg_to_rad(30.0));

PolylineSample sample_centerline(const Route& route, double s);

}  // namespace trafficforge
