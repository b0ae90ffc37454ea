#include "trafficforge/road_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

namespace trafficforge {

namespace {

void validate_centerline(const CenterlineSpec& c, double width) {
  if (c.points.size() < 2) throw DegenerateCenterlineError(c.id, "fewer than 2 points");
  for (const Vec2& p : c.points) {
    if (!p.finite()) throw DegenerateCenterlineError(c.id, "non-finite coordinate");
  }
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    if (c.points[i] == c.points[i - 1]) {
      throw DegenerateCenterlineError(c.id, "duplicate consecutive points at index " + std::to_string(i));
    }
  }
  if (c.lanes < 1) throw DegenerateCenterlineError(c.id, "lane count must be >= 1");
  if (!(width > 0.0) || !std::isfinite(width)) throw DegenerateCenterlineError(c.id, "lane_width must be > 0");
}

struct PendingEdge {
  Polyline polyline;
  double width;
  std::int64_t centerline;
  int lane_index;
  bool reversed;
  double lateral;  // offset from the source centerline, + left of its forward direction
};

}  // namespace

RoadGraph RoadGraph::build(const MapSpec& spec, const GraphOptions& options) {
  std::vector<PendingEdge> pending;
  for (const CenterlineSpec& c : spec.centerlines) {
    const double width = c.lane_width.value_or(options.default_lane_width);
    validate_centerline(c, width);
    Polyline base;
    try {
      base = Polyline(c.points);
    } catch (const ValidationError& e) {
      throw DegenerateCenterlineError(c.id, e.what());
    }

    if (!c.oneway && c.lanes == 1) {
      // A single shared lane: one edge per direction on the centerline itself.
      pending.push_back({base, width, c.id, 0, false, 0.0});
      pending.push_back({base.reversed(), width, c.id, 0, true, 0.0});
      continue;
    }
    const int forward_lanes = c.oneway ? c.lanes : (c.lanes + 1) / 2;
    for (int i = 0; i < c.lanes; ++i) {
      const double off = (i + 0.5 - c.lanes / 2.0) * width;
      Polyline lane;
      try {
        lane = base.offset(off);
      } catch (const ValidationError& e) {
        throw DegenerateCenterlineError(c.id, e.what());
      }
      const bool rev = i >= forward_lanes;
      pending.push_back({rev ? lane.reversed() : lane, width, c.id, i, rev, off});
    }
  }

  RoadGraph g;
  auto find_or_add_node = [&](const Vec2& p) {
    for (const LaneNode& n : g.nodes_) {
      if (distance(n.position, p) <= options.join_tolerance) return n.id;
    }
    const int id = static_cast<int>(g.nodes_.size());
    g.nodes_.push_back({id, p});
    return id;
  };

  for (PendingEdge& pe : pending) {
    const int from = find_or_add_node(pe.polyline.front());
    const int to = find_or_add_node(pe.polyline.back());
    // Snap the endpoints onto the merged nodes so routes join exactly.
    std::vector<Vec2> pts(pe.polyline.points().begin(), pe.polyline.points().end());
    pts.front() = g.nodes_[static_cast<std::size_t>(from)].position;
    pts.back() = g.nodes_[static_cast<std::size_t>(to)].position;
    pts = dedupe_points(pts);
    if (pts.size() < 2) throw DegenerateCenterlineError(pe.centerline, "lane collapses after endpoint merging");
    LaneEdge e;
    e.id = static_cast<int>(g.edges_.size());
    e.from_node = from;
    e.to_node = to;
    e.polyline = Polyline(std::move(pts));
    e.lane_width = pe.width;
    e.centerline_id = pe.centerline;
    e.lane_index = pe.lane_index;
    e.reversed = pe.reversed;
    g.edges_.push_back(std::move(e));
  }

  // Lane-change neighbours: same source centerline, same travel direction.
  std::map<std::pair<std::int64_t, bool>, std::vector<std::pair<double, int>>> groups;
  for (std::size_t k = 0; k < pending.size(); ++k) {
    // Left-ness relative to the lane's own travel direction.
    const double leftness = pending[k].reversed ? -pending[k].lateral : pending[k].lateral;
    groups[{pending[k].centerline, pending[k].reversed}].push_back({leftness, static_cast<int>(k)});
  }
  for (auto& [key, lanes] : groups) {
    std::sort(lanes.begin(), lanes.end());
    for (std::size_t k = 0; k + 1 < lanes.size(); ++k) {
      if (lanes[k].first == lanes[k + 1].first) continue;
      g.edges_[static_cast<std::size_t>(lanes[k].second)].left_neighbor = lanes[k + 1].second;
      g.edges_[static_cast<std::size_t>(lanes[k + 1].second)].right_neighbor = lanes[k].second;
    }
  }

  g.out_.assign(g.nodes_.size(), {});
  g.in_.assign(g.nodes_.size(), {});
  for (const LaneEdge& e : g.edges_) {
    g.out_[static_cast<std::size_t>(e.from_node)].push_back(e.id);
    g.in_[static_cast<std::size_t>(e.to_node)].push_back(e.id);
    g.max_lane_width_ = std::max(g.max_lane_width_, e.lane_width);
  }
  g.build_index(options.index_cell_size);
  return g;
}

RoadGraph::CellKey RoadGraph::cell_key(std::int64_t ix, std::int64_t iy) const {
  return (ix << 32) ^ (iy & 0xffffffffLL);
}

void RoadGraph::build_index(double cell_size) {
  cell_size_ = cell_size;
  index_.clear();
  for (const LaneEdge& e : edges_) {
    const auto pts = e.polyline.points();
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const auto ix0 = static_cast<std::int64_t>(std::floor(std::min(pts[i].x, pts[i + 1].x) / cell_size_));
      const auto ix1 = static_cast<std::int64_t>(std::floor(std::max(pts[i].x, pts[i + 1].x) / cell_size_));
      const auto iy0 = static_cast<std::int64_t>(std::floor(std::min(pts[i].y, pts[i + 1].y) / cell_size_));
      const auto iy1 = static_cast<std::int64_t>(std::floor(std::max(pts[i].y, pts[i + 1].y) / cell_size_));
      for (auto ix = ix0; ix <= ix1; ++ix) {
        for (auto iy = iy0; iy <= iy1; ++iy) {
          index_[cell_key(ix, iy)].push_back({e.id, static_cast<int>(i)});
        }
      }
    }
  }
}

template <typename Fn>
void RoadGraph::for_each_segment_near(const Vec2& lo, const Vec2& hi, Fn&& fn) const {
  const auto ix0 = static_cast<std::int64_t>(std::floor(lo.x / cell_size_));
  const auto ix1 = static_cast<std::int64_t>(std::floor(hi.x / cell_size_));
  const auto iy0 = static_cast<std::int64_t>(std::floor(lo.y / cell_size_));
  const auto iy1 = static_cast<std::int64_t>(std::floor(hi.y / cell_size_));
  for (auto ix = ix0; ix <= ix1; ++ix) {
    for (auto iy = iy0; iy <= iy1; ++iy) {
      auto it = index_.find(cell_key(ix, iy));
      if (it == index_.end()) continue;
      for (const SegmentRef& ref : it->second) fn(ref);
    }
  }
}

std::vector<int> RoadGraph::edges_near(const Vec2& lo, const Vec2& hi) const {
  std::vector<int> ids;
  for_each_segment_near(lo, hi, [&](const SegmentRef& r) { ids.push_back(r.edge); });
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

LaneCoordinate RoadGraph::project_onto(int edge_id, const Vec2& p) const {
  const LaneEdge& e = edge(edge_id);
  const PolylineProjection pr = e.polyline.project(p);
  return {edge_id, pr.s, pr.lateral, e.polyline.sample(pr.s).heading};
}

LaneCoordinate RoadGraph::project(const Vec2& p, std::optional<double> heading_hint,
                                  const ProjectOptions& options) const {
  if (empty()) throw ValidationError("cannot project onto an empty road graph");
  if (!p.finite()) throw ValidationError("projection query point is not finite");

  const double r = options.max_snap_distance;
  std::vector<int> candidates = edges_near(p - Vec2{r, r}, p + Vec2{r, r});

  std::optional<LaneCoordinate> best;
  double best_heading_diff = std::numeric_limits<double>::infinity();
  for (int id : candidates) {
    const LaneCoordinate lc = project_onto(id, p);
    const double hd = heading_hint ? std::abs(wrap_angle(lc.lane_heading - *heading_hint)) : 0.0;
    if (!best) {
      best = lc;
      best_heading_diff = hd;
      continue;
    }
    const double d = lc.distance();
    const double bd = best->distance();
    if (d < bd - options.tie_tolerance) {
      best = lc;
      best_heading_diff = hd;
    } else if (d <= bd + options.tie_tolerance) {
      // Tie: smaller heading difference wins, then the lower id (candidates are ascending).
      if (heading_hint && hd < best_heading_diff) {
        best = lc;
        best_heading_diff = hd;
      }
    }
  }

  if (!best || best->distance() > r) {
    double nearest = std::numeric_limits<double>::infinity();
    if (best) {
      nearest = best->distance();
    } else {
      for (const LaneEdge& e : edges_) nearest = std::min(nearest, e.polyline.project(p).distance);
    }
    throw OffMapError(nearest);
  }
  return *best;
}

bool RoadGraph::on_road(const Vec2& p, double margin) const {
  const double r = max_lane_width_ / 2.0 + margin;
  bool hit = false;
  for_each_segment_near(p - Vec2{r, r}, p + Vec2{r, r}, [&](const SegmentRef& ref) {
    if (hit) return;
    const LaneEdge& e = edges_[static_cast<std::size_t>(ref.edge)];
    const auto pts = e.polyline.points();
    const Vec2 a = pts[static_cast<std::size_t>(ref.segment)];
    const Vec2 d = pts[static_cast<std::size_t>(ref.segment) + 1] - a;
    const double t = std::clamp((p - a).dot(d) / d.dot(d), 0.0, 1.0);
    if (distance(p, a + d * t) <= e.lane_width / 2.0 + margin) hit = true;
  });
  return hit;
}

RoadGraph build_graph(const MapSpec& spec, const GraphOptions& options) {
  return RoadGraph::build(spec, options);
}

LaneCoordinate project_to_lane(const RoadGraph& graph, const Vec2& point,
                               std::optional<double> heading_hint, const ProjectOptions& options) {
  return graph.project(point, heading_hint, options);
}

std::optional<double> Route::route_s(int edge_id, double arc_s, double min_s) const {
  for (std::size_t i = 0; i < edge_ids.size(); ++i) {
    if (edge_ids[i] != edge_id) continue;
    const double s = edge_offsets[i] + arc_s;
    if (i == 0 && arc_s < start.arc_s) continue;  // behind the route start
    if (s >= min_s) return s;
  }
  return std::nullopt;
}

std::pair<int, double> Route::edge_at(double s) const {
  s = std::clamp(s, 0.0, total_length);
  std::size_t i = edge_ids.size() - 1;
  while (i > 0 && edge_offsets[i] > s) --i;
  return {edge_ids[i], s - edge_offsets[i]};
}

Route make_route(const RoadGraph& graph, const LaneCoordinate& start, std::vector<int> edge_ids,
                 const RouteOptions& options) {
  if (edge_ids.empty() || edge_ids.front() != start.edge_id) {
    throw ValidationError("route must begin on the start coordinate's edge");
  }
  Route r;
  r.start = start;
  std::vector<Vec2> pts;
  double offset = -start.arc_s;
  for (std::size_t k = 0; k < edge_ids.size(); ++k) {
    const LaneEdge& e = graph.edge(edge_ids[k]);
    if (k > 0 && graph.edge(edge_ids[k - 1]).to_node != e.from_node) {
      throw ValidationError("route edges " + std::to_string(edge_ids[k - 1]) + " and " +
                            std::to_string(e.id) + " do not share a node");
    }
    r.edge_offsets.push_back(offset);
    const auto ep = e.polyline.points();
    const auto cs = e.polyline.cumulative();
    if (k == 0) {
      pts.push_back(e.polyline.sample(start.arc_s).point);
      for (std::size_t i = 0; i < ep.size(); ++i) {
        if (cs[i] > start.arc_s) pts.push_back(ep[i]);
      }
    } else {
      pts.insert(pts.end(), ep.begin() + 1, ep.end());
    }
    offset += e.length();
  }
  r.edge_ids = std::move(edge_ids);
  pts = dedupe_points(pts);
  r.geometry = Polyline(std::move(pts));
  r.total_length = r.geometry.length();
  r.cumulative_heading_change = cumulative_heading_change(r.geometry.points());
  r.maneuver = classify_maneuver(r.geometry.points(), options.straight_threshold);
  r.u_turn = std::abs(r.cumulative_heading_change) > options.u_turn_threshold;
  return r;
}

std::vector<Route> enumerate_routes(const RoadGraph& graph, const LaneCoordinate& start,
                                    const RouteOptions& options) {
  if (!(options.horizon_dist > 0.0)) throw ValidationError("horizon_dist must be > 0");
  std::vector<Route> routes;
  const LaneEdge& first = graph.edge(start.edge_id);
  const double remaining = first.length() - start.arc_s;
  if (!(remaining > 1e-9) || options.max_routes <= 0) return routes;

  std::vector<int> path{start.edge_id};
  // Outgoing lists are ascending, so emission order is lexicographic by edge ids.
  auto dfs = [&](auto&& self, double dist) -> void {
    if (static_cast<int>(routes.size()) >= options.max_routes) return;
    const auto next = graph.outgoing(graph.edge(path.back()).to_node);
    if (dist >= options.horizon_dist || next.empty()) {
      routes.push_back(make_route(graph, start, path, options));
      return;
    }
    for (int id : next) {
      path.push_back(id);
      self(self, dist + graph.edge(id).length());
      path.pop_back();
      if (static_cast<int>(routes.size()) >= options.max_routes) return;
    }
  };
  dfs(dfs, remaining);
  return routes;
}

Maneuver classify_maneuver(std::span<const Vec2> route_polyline, double straight_threshold) {
  const double dpsi = cumulative_heading_change(route_polyline);
  if (dpsi >= straight_threshold) return Maneuver::kLeft;
  if (dpsi <= -straight_threshold) return Maneuver::kRight;
  return Maneuver::kStraight;
}

PolylineSample sample_centerline(const Route& route, double s) { return route.geometry.sample(s); }

}  // namespace trafficforge
