// Synthetic maps, scenes and reference trajectories shared by the unit and
// acceptance tests.
#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "trafficforge/behavior.hpp"
#include "trafficforge/rng.hpp"
#include "trafficforge/road_graph.hpp"
#include "trafficforge/scene_ingest.hpp"

namespace tf_test {

using namespace trafficforge;

inline constexpr double kArmLength = 120.0;
inline constexpr double kBoxHalf = 10.0;
inline constexpr double kHalfLane = 1.75;

inline Vec2 arm_axis(int arm) {
  const double th = arm * kPi / 2.0;
  return {std::cos(th), std::sin(th)};
}
inline Vec2 arm_normal(int arm) {
  const Vec2 a = arm_axis(arm);
  return {-a.y, a.x};
}

/// Entry lane of an arm (driving toward the centre) as ordered points.
inline std::vector<Vec2> entry_lane(int arm) {
  const Vec2 a = arm_axis(arm), n = arm_normal(arm);
  return {a * kArmLength + n * kHalfLane, a * kBoxHalf + n * kHalfLane};
}
inline std::vector<Vec2> exit_lane(int arm) {
  const Vec2 a = arm_axis(arm), n = arm_normal(arm);
  return {a * kBoxHalf - n * kHalfLane, a * kArmLength - n * kHalfLane};
}

/// Quadratic Bezier between the entry end of `from` and the exit start of `to`.
inline std::vector<Vec2> connector(int from, int to) {
  const Vec2 p0 = entry_lane(from).back();
  const Vec2 p2 = exit_lane(to).front();
  const Vec2 d0 = arm_axis(from) * -1.0;
  const Vec2 d2 = arm_axis(to);
  const double den = d0.cross(d2);
  if (std::abs(den) < 1e-9) return {p0, p2};
  const double t = (p2 - p0).cross(d2) / den;
  const Vec2 c = p0 + d0 * t;
  std::vector<Vec2> pts;
  constexpr int kSegments = 48;
  for (int k = 0; k <= kSegments; ++k) {
    const double u = static_cast<double>(k) / kSegments;
    pts.push_back(p0 * ((1 - u) * (1 - u)) + c * (2 * u * (1 - u)) + p2 * (u * u));
  }
  return pts;
}

/// Four-arm intersection of one-way lanes: 4 entries, 4 exits, 12 connectors.
inline MapSpec intersection_map() {
  MapSpec m;
  std::int64_t id = 1;
  for (int arm = 0; arm < 4; ++arm) {
    m.centerlines.push_back({id++, entry_lane(arm), 1, true, std::nullopt});
    m.centerlines.push_back({id++, exit_lane(arm), 1, true, std::nullopt});
  }
  for (int from = 0; from < 4; ++from) {
    for (int to = 0; to < 4; ++to) {
      if (from != to) m.centerlines.push_back({id++, connector(from, to), 1, true, std::nullopt});
    }
  }
  return m;
}

/// Straight poses along `dir` from `start` at constant speed.
inline Tracklet straight_tracklet(std::int64_t id, Vec2 start, Vec2 dir, double speed, int poses = 11,
                                  double dt = 0.1) {
  Tracklet tr;
  tr.agent_id = id;
  for (int k = 0; k < poses; ++k) tr.poses.push_back({k * dt, start + dir * (speed * k * dt), std::nullopt, std::nullopt});
  return tr;
}

/// Random scene on the intersection: one or two agents per entry arm.
inline SceneRecord intersection_scene(const std::string& id, std::uint64_t seed) {
  Rng rng(seed);
  SceneRecord rec;
  rec.scene_id = id;
  std::int64_t agent = 0;
  for (int arm = 0; arm < 4; ++arm) {
    const Vec2 a = arm_axis(arm), n = arm_normal(arm);
    const int count = 1 + static_cast<int>(uniform_index(rng, 2));
    double dist = uniform(rng, 18.0, 30.0);
    for (int k = 0; k < count; ++k) {
      const double speed = uniform(rng, 7.0, 12.0);
      rec.tracks.push_back(straight_tracklet(agent++, a * dist + n * kHalfLane, a * -1.0, speed));
      dist += uniform(rng, 15.0, 25.0);
    }
  }
  return rec;
}

/// Reference trajectory along a polyline at a cruise speed with a Gaussian
/// speed dip to `v_min` centred at arc position `dip_s`.
inline TimedTrajectory drive_along(const Polyline& path, double v_cruise, double v_min, double dip_s,
                                   double dip_width, double dt, int steps) {
  TimedTrajectory out;
  double s = 0.0;
  for (int k = 0; k < steps; ++k) {
    out.push_back({k * dt, path.sample_extended(s).point});
    const double dip = std::exp(-std::pow((s - dip_s) / dip_width, 2.0));
    s += (v_cruise - (v_cruise - v_min) * dip) * dt;
  }
  return out;
}

/// Profile pool mined from synthetic drives through the intersection.
inline ProfilePool intersection_pool(std::uint64_t seed, double dt = 0.1) {
  Rng rng(seed);
  std::vector<TimedTrajectory> trajs;
  for (int from = 0; from < 4; ++from) {
    for (int to = 0; to < 4; ++to) {
      if (from == to) continue;
      for (int rep = 0; rep < 3; ++rep) {
        std::vector<Vec2> pts = entry_lane(from);
        const double lead = uniform(rng, 10.0, 40.0);
        pts.front() = pts.back() + arm_axis(from) * lead;
        const Polyline turn(connector(from, to));
        for (const Vec2& p : turn.points()) {
          if (distance(p, pts.back()) > 1e-9) pts.push_back(p);
        }
        pts.push_back(exit_lane(to).back());
        const bool straight = (to - from + 4) % 4 == 2;
        const double cruise = uniform(rng, 7.0, 12.0);
        const double low = straight ? cruise * uniform(rng, 0.85, 1.0) : uniform(rng, 3.0, 6.0);
        const double dip_s = lead + 0.5 * turn.length();
        trajs.push_back(drive_along(Polyline(pts), cruise, low, dip_s, 12.0, dt, 80));
      }
    }
  }
  return build_profile_pool(trajs, dt).pool;
}

/// Straight single-lane road along +x.
inline MapSpec straight_road(double length = 600.0, int lanes = 1) {
  MapSpec m;
  m.centerlines.push_back({1, {{0.0, 0.0}, {length, 0.0}}, lanes, true, std::nullopt});
  return m;
}

}  // namespace tf_test
