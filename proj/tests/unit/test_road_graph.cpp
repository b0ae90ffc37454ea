#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "support/synthetic.hpp"
#include "trafficforge/road_graph.hpp"

using namespace trafficforge;

namespace {

CenterlineSpec line(std::int64_t id, std::vector<Vec2> pts, int lanes = 1, bool oneway = true) {
  return {id, std::move(pts), lanes, oneway, std::nullopt};
}

std::vector<Vec2> quarter_arc(Vec2 center, double r, double from, double to, int n) {
  std::vector<Vec2> pts;
  for (int i = 0; i <= n; ++i) {
    const double th = from + (to - from) * i / n;
    pts.push_back(center + Vec2{std::cos(th), std::sin(th)} * r);
  }
  return pts;
}

}  // namespace

TEST(Polyline, SampleAndProjectOnStraightSegment) {
  const Polyline p({{0, 0}, {100, 0}});
  EXPECT_DOUBLE_EQ(p.length(), 100.0);
  const PolylineSample s = p.sample(37.5);
  EXPECT_DOUBLE_EQ(s.point.x, 37.5);
  EXPECT_DOUBLE_EQ(s.heading, 0.0);
  const PolylineProjection pr = p.project({40, 2});
  EXPECT_DOUBLE_EQ(pr.s, 40.0);
  EXPECT_DOUBLE_EQ(pr.lateral, 2.0);
  EXPECT_THROW(p.sample(100.5), BoundsError);
}

TEST(Polyline, InteriorVertexTakesFollowingHeading) {
  const Polyline p({{0, 0}, {10, 0}, {10, 10}});
  const PolylineSample s = p.sample(10.0);
  EXPECT_DOUBLE_EQ(s.point.x, 10.0);
  EXPECT_DOUBLE_EQ(s.point.y, 0.0);
  EXPECT_NEAR(s.heading, kPi / 2, 1e-12);
}

TEST(Polyline, OffsetOfSquareCornerIsMitered) {
  const Polyline p({{0, 0}, {10, 0}, {10, 10}});
  const Polyline left = p.offset(1.0);
  ASSERT_EQ(left.points().size(), 3u);
  EXPECT_NEAR(left.points()[1].x, 9.0, 1e-12);
  EXPECT_NEAR(left.points()[1].y, 1.0, 1e-12);
  const Polyline back = p.reversed();
  EXPECT_EQ(back.front(), p.back());
}

TEST(Polyline, CumulativeHeadingChange) {
  EXPECT_NEAR(cumulative_heading_change(std::vector<Vec2>{{0, 0}, {1, 0}, {2, 0}}), 0.0, 1e-15);
  const auto arc = quarter_arc({0, 10}, 10, -kPi / 2, 0.0, 30);
  // 30 chords of a quarter circle turn 29 times by (pi/2)/30.
  EXPECT_NEAR(cumulative_heading_change(arc), 29.0 * (kPi / 2) / 30.0, 1e-9);
}

TEST(RoadGraph, SingleOneWayLine) {
  const RoadGraph g = build_graph({{line(7, {{0, 0}, {100, 0}})}});
  EXPECT_EQ(g.nodes().size(), 2u);
  ASSERT_EQ(g.edges().size(), 1u);
  EXPECT_DOUBLE_EQ(g.edges()[0].length(), 100.0);
  EXPECT_EQ(g.outgoing(g.edges()[0].from_node).size(), 1u);
}

TEST(RoadGraph, BidirectionalTwoLaneRoadSplitsIntoOppositeLanes) {
  const RoadGraph g = build_graph({{line(1, {{0, 0}, {100, 0}}, 2, false)}});
  ASSERT_EQ(g.edges().size(), 2u);
  const LaneEdge* east = nullptr;
  const LaneEdge* west = nullptr;
  for (const LaneEdge& e : g.edges()) (e.reversed ? west : east) = &e;
  ASSERT_NE(east, nullptr);
  ASSERT_NE(west, nullptr);
  EXPECT_NEAR(east->polyline.front().y, -1.75, 1e-12);
  EXPECT_NEAR(east->polyline.front().x, 0.0, 1e-12);
  EXPECT_NEAR(west->polyline.front().y, 1.75, 1e-12);
  EXPECT_NEAR(west->polyline.front().x, 100.0, 1e-12);
}

TEST(RoadGraph, MultiLaneOneWayHasNeighbours) {
  const RoadGraph g = build_graph({{line(1, {{0, 0}, {100, 0}}, 3)}});
  ASSERT_EQ(g.edges().size(), 3u);
  int with_left = 0, with_right = 0;
  for (const LaneEdge& e : g.edges()) {
    with_left += e.left_neighbor ? 1 : 0;
    with_right += e.right_neighbor ? 1 : 0;
    if (e.left_neighbor) EXPECT_EQ(g.edge(*e.left_neighbor).right_neighbor, e.id);
  }
  EXPECT_EQ(with_left, 2);
  EXPECT_EQ(with_right, 2);
}

TEST(RoadGraph, TJunctionMergesSharedEndpoint) {
  MapSpec m;
  m.centerlines.push_back(line(1, {{-50, 0}, {0, 0}}));
  m.centerlines.push_back(line(2, {{0, 0}, {50, 0}}));
  m.centerlines.push_back(line(3, {{0, 0}, {0, 50}}));
  const RoadGraph g = build_graph(m);
  EXPECT_EQ(g.nodes().size(), 4u);
  EXPECT_EQ(g.edges().size(), 3u);
  // Brute-force oracle: the junction is the one node within tolerance of the origin.
  int junction = -1;
  for (const LaneNode& n : g.nodes()) {
    if (n.position.norm() < 0.5) {
      EXPECT_EQ(junction, -1);
      junction = n.id;
    }
  }
  ASSERT_GE(junction, 0);
  EXPECT_EQ(g.incoming(junction).size(), 1u);
  EXPECT_EQ(g.outgoing(junction).size(), 2u);
}

TEST(RoadGraph, ProjectionOffsetsAndHeadingTieBreak) {
  const RoadGraph g = build_graph({{line(1, {{0, 0}, {100, 0}})}});
  const LaneCoordinate on = g.project({30, 0});
  EXPECT_DOUBLE_EQ(on.lateral_offset, 0.0);
  EXPECT_DOUBLE_EQ(on.arc_s, 30.0);
  EXPECT_DOUBLE_EQ(g.project({30, 2}).lateral_offset, 2.0);
  EXPECT_THROW(g.project({30, 40}), OffMapError);

  const RoadGraph two = build_graph({{line(1, {{0, 0}, {100, 0}}, 2, false)}});
  const LaneCoordinate east = two.project({50, 0}, 0.0);
  EXPECT_FALSE(two.edge(east.edge_id).reversed);
  const LaneCoordinate west = two.project({50, 0}, kPi);
  EXPECT_TRUE(two.edge(west.edge_id).reversed);
}

TEST(RoadGraph, OnRoadUsesHalfLaneWidth) {
  const RoadGraph g = build_graph({{line(1, {{0, 0}, {100, 0}})}});
  EXPECT_TRUE(g.on_road({10, 1.7}));
  EXPECT_FALSE(g.on_road({10, 1.8}));
  EXPECT_TRUE(g.on_road({10, 1.8}, 0.1));
}

TEST(RoadGraph, DegenerateCenterlineRejected) {
  EXPECT_THROW(build_graph({{line(1, {{0, 0}, {0, 0}})}}), DegenerateCenterlineError);
}

TEST(Routes, StraightChainGivesOneRoute) {
  const RoadGraph g = build_graph({{line(1, {{0, 0}, {50, 0}})}});
  const auto routes = enumerate_routes(g, g.project({5, 0}));
  ASSERT_EQ(routes.size(), 1u);
  EXPECT_EQ(routes[0].maneuver, Maneuver::kStraight);
  EXPECT_NEAR(routes[0].total_length, 45.0, 1e-9);
}

TEST(Routes, ThreeBranchesAtIntersection) {
  const RoadGraph g = build_graph(tf_test::intersection_map());
  const auto routes = enumerate_routes(g, g.project(Vec2{60, 1.75}, kPi));
  ASSERT_EQ(routes.size(), 3u);
  std::set<Maneuver> labels;
  for (const Route& r : routes) labels.insert(r.maneuver);
  EXPECT_EQ(labels.size(), 3u);
}

TEST(Routes, TwoLevelBranchingMatchesDfsOracle) {
  MapSpec m;
  m.centerlines.push_back(line(1, {{0, 0}, {20, 0}}));
  m.centerlines.push_back(line(2, {{20, 0}, {40, 10}}));
  m.centerlines.push_back(line(3, {{20, 0}, {40, -10}}));
  m.centerlines.push_back(line(4, {{40, 10}, {60, 20}}));
  m.centerlines.push_back(line(5, {{40, 10}, {60, 0}}));
  m.centerlines.push_back(line(6, {{40, -10}, {60, 0.5}}));
  m.centerlines.push_back(line(7, {{40, -10}, {60, -20}}));
  const RoadGraph g = build_graph(m);
  const LaneCoordinate start = g.project({1, 0});
  RouteOptions opts;
  opts.horizon_dist = 500;

  std::set<std::vector<int>> oracle;
  std::vector<int> path{start.edge_id};
  std::function<void()> dfs = [&] {
    const auto out = g.outgoing(g.edge(path.back()).to_node);
    if (out.empty()) {
      oracle.insert(path);
      return;
    }
    for (int e : out) {
      path.push_back(e);
      dfs();
      path.pop_back();
    }
  };
  dfs();

  std::set<std::vector<int>> got;
  for (const Route& r : enumerate_routes(g, start, opts)) got.insert(r.edge_ids);
  EXPECT_EQ(got.size(), 4u);
  EXPECT_EQ(got, oracle);
}

TEST(Routes, ClassifyManeuverSignConvention) {
  EXPECT_EQ(classify_maneuver(std::vector<Vec2>{{0, 0}, {5, 0}, {10, 0}}), Maneuver::kStraight);
  EXPECT_EQ(classify_maneuver(quarter_arc({0, 10}, 10, -kPi / 2, 0.0, 20)), Maneuver::kLeft);
  const std::vector<Vec2> minus40{{0, 0}, {10, 0}, Vec2{10, 0} + unit_from_heading(deg_to_rad(-40)) * 10};
  EXPECT_EQ(classify_maneuver(minus40), Maneuver::kRight);
}

TEST(Routes, SampleCenterlineAlongRoute) {
  const RoadGraph g = build_graph({{line(1, {{0, 0}, {100, 0}})}});
  const auto routes = enumerate_routes(g, g.project({0, 0}));
  ASSERT_EQ(routes.size(), 1u);
  EXPECT_DOUBLE_EQ(sample_centerline(routes[0], 0.0).point.x, 0.0);
  const PolylineSample mid = sample_centerline(routes[0], 37.5);
  EXPECT_DOUBLE_EQ(mid.point.x, 37.5);
  EXPECT_DOUBLE_EQ(mid.heading, 0.0);
}

TEST(RoadGraph, EdgesNearMatchesBruteForce) {
  const RoadGraph g = build_graph(tf_test::intersection_map());
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const Vec2 lo{uniform(rng, -130, 120), uniform(rng, -130, 120)};
    const Vec2 hi = lo + Vec2{uniform(rng, 0, 30), uniform(rng, 0, 30)};
    std::set<int> oracle;
    for (const LaneEdge& e : g.edges()) {
      const auto pts = e.polyline.points();
      for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double x0 = std::min(pts[k].x, pts[k + 1].x), x1 = std::max(pts[k].x, pts[k + 1].x);
        const double y0 = std::min(pts[k].y, pts[k + 1].y), y1 = std::max(pts[k].y, pts[k + 1].y);
        // Conservative: bounding boxes overlap and the segment crosses the box or an endpoint is inside.
        if (x1 < lo.x || x0 > hi.x || y1 < lo.y || y0 > hi.y) continue;
        bool hit = false;
        for (int s = 0; s <= 200 && !hit; ++s) {
          const Vec2 q = pts[k] + (pts[k + 1] - pts[k]) * (s / 200.0);
          hit = q.x >= lo.x && q.x <= hi.x && q.y >= lo.y && q.y <= hi.y;
        }
        if (hit) oracle.insert(e.id);
      }
    }
    const auto near = g.edges_near(lo, hi);
    const std::set<int> got(near.begin(), near.end());
    for (int id : oracle) EXPECT_TRUE(got.count(id)) << "edge " << id << " missing";
  }
}
