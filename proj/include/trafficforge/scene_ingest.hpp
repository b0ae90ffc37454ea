#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "trafficforge/controller.hpp"
#include "trafficforge/road_graph.hpp"

namespace trafficforge {

struct TrackletPose {
  double t = 0.0;
  Vec2 position;
  std::optional<double> heading;
  std::optional<double> speed;
};

struct Tracklet {
  std::int64_t agent_id = 0;
  std::vector<TrackletPose> poses;
  VehicleGeometry geometry;
};

/// Recorded scene as read from a tracklet file.
struct SceneRecord {
  std::string scene_id;
  std::vector<Tracklet> tracks;
  std::optional<double> t0;
  std::optional<std::int64_t> ego_id;
};

struct AgentInit {
  std::int64_t agent_id = 0;
  LaneCoordinate lane;
  VehicleState state;
  VehicleGeometry geometry;
};

struct DropEntry {
  std::int64_t agent_id = 0;
  std::string reason;  // "off-map", "spawn-gap" or "no-pose-at-t0"
  std::string detail;
};

struct Scene {
  std::shared_ptr<const RoadGraph> graph;
  std::string scene_id;
  double t0 = 0.0;
  std::vector<AgentInit> agents;  // ascending agent_id
  std::vector<DropEntry> dropped;
  /// Agent treated as the ego: the grid is centred on it and it may be replayed.
  std::optional<std::int64_t> ego_id;
  /// Source tracklets of the retained agents (needed for ego replay).
  std::vector<Tracklet> tracklets;
};

struct IngestOptions {
  double max_snap_distance = 10.0;
  double min_spawn_gap = 2.0;
  /// Half-window of the central difference used for missing speed/heading.
  double fd_step = 0.1;
};

/// Pose at time t: linear position/speed, shortest-arc heading.
TrackletPose interpolate_pose(const Tracklet& tracklet, double t);

struct PoseRates {
  std::optional<double> speed;
  std::optional<double> heading;
};

/// Speed and heading from a central difference of half-width `step`, clipped
/// to the tracklet's time range. Heading is empty when the agent barely moves.
PoseRates pose_rates(const Tracklet& tracklet, double t, double step);

/// Snaps every tracklet's pose at t0 onto the graph. Agents that cannot be
/// placed are dropped and listed in Scene::dropped.
Scene instantiate_agents(std::shared_ptr<const RoadGraph> graph, const std::vector<Tracklet>& tracklets,
                         double t0, const IngestOptions& options = {});

/// instantiate_agents driven by a SceneRecord (t0 defaults to the earliest pose time).
Scene instantiate_scene(std::shared_ptr<const RoadGraph> graph, const SceneRecord& record,
                        const IngestOptions& options = {});

}  // namespace trafficforge
