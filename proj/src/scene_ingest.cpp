#include "trafficforge/scene_ingest.hpp"

#include <algorithm>
#include <set>

namespace trafficforge {

TrackletPose interpolate_pose(const Tracklet& tracklet, double t) {
  const auto& poses = tracklet.poses;
  if (poses.empty()) throw BoundsError("tracklet " + std::to_string(tracklet.agent_id) + " has no poses");
  if (t < poses.front().t || t > poses.back().t) {
    throw BoundsError("time " + std::to_string(t) + " outside tracklet " + std::to_string(tracklet.agent_id) +
                      " range [" + std::to_string(poses.front().t) + ", " + std::to_string(poses.back().t) + "]");
  }
  auto it = std::lower_bound(poses.begin(), poses.end(), t,
                             [](const TrackletPose& p, double tt) { return p.t < tt; });
  if (it->t == t) return *it;
  const TrackletPose& a = *(it - 1);
  const TrackletPose& b = *it;
  const double alpha = (t - a.t) / (b.t - a.t);
  TrackletPose out;
  out.t = t;
  out.position = a.position + (b.position - a.position) * alpha;
  if (a.heading && b.heading) out.heading = wrap_angle(*a.heading + wrap_angle(*b.heading - *a.heading) * alpha);
  if (a.speed && b.speed) out.speed = *a.speed + (*b.speed - *a.speed) * alpha;
  return out;
}

PoseRates pose_rates(const Tracklet& tr, double t, double step) {
  PoseRates fd;
  const double ta = std::max(tr.poses.front().t, t - step);
  const double tb = std::min(tr.poses.back().t, t + step);
  if (!(tb > ta)) return fd;
  const Vec2 d = interpolate_pose(tr, tb).position - interpolate_pose(tr, ta).position;
  fd.speed = d.norm() / (tb - ta);
  if (d.norm() > 1e-6) fd.heading = d.heading();
  return fd;
}

namespace {

void validate_tracklet(const Tracklet& tr) {
  for (std::size_t i = 0; i < tr.poses.size(); ++i) {
    if (!tr.poses[i].position.finite() || !std::isfinite(tr.poses[i].t)) {
      throw ValidationError("tracklet " + std::to_string(tr.agent_id) + ": non-finite pose at index " +
                            std::to_string(i));
    }
    if (i > 0 && tr.poses[i].t < tr.poses[i - 1].t) {
      throw ValidationError("tracklet " + std::to_string(tr.agent_id) + ": pose times decrease at index " +
                            std::to_string(i));
    }
  }
  if (!(tr.geometry.length > 0.0) || !(tr.geometry.width > 0.0)) {
    throw ValidationError("tracklet " + std::to_string(tr.agent_id) + ": vehicle length and width must be > 0");
  }
}

}  // namespace

Scene instantiate_agents(std::shared_ptr<const RoadGraph> graph, const std::vector<Tracklet>& tracklets,
                         double t0, const IngestOptions& options) {
  if (!graph) throw ValidationError("scene needs a road graph");
  if (tracklets.empty()) throw EmptySceneError("empty-scene: no tracklets");

  std::vector<const Tracklet*> order;
  std::set<std::int64_t> ids;
  for (const Tracklet& tr : tracklets) {
    if (!ids.insert(tr.agent_id).second) {
      throw ValidationError("duplicate agent_id " + std::to_string(tr.agent_id));
    }
    validate_tracklet(tr);
    order.push_back(&tr);
  }
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->agent_id < b->agent_id; });

  Scene scene;
  scene.graph = graph;
  scene.t0 = t0;
  ProjectOptions popts;
  popts.max_snap_distance = options.max_snap_distance;

  for (const Tracklet* tr : order) {
    if (tr->poses.empty() || t0 < tr->poses.front().t || t0 > tr->poses.back().t) {
      scene.dropped.push_back({tr->agent_id, "no-pose-at-t0", "tracklet does not cover t0"});
      continue;
    }
    const TrackletPose pose = interpolate_pose(*tr, t0);
    const PoseRates fd = pose_rates(*tr, t0, options.fd_step);
    const std::optional<double> hint = pose.heading ? pose.heading : fd.heading;

    LaneCoordinate lane;
    try {
      lane = graph->project(pose.position, hint, popts);
    } catch (const OffMapError& e) {
      scene.dropped.push_back({tr->agent_id, "off-map", std::to_string(e.distance())});
      continue;
    }

    bool too_close = false;
    for (const AgentInit& other : scene.agents) {
      if (other.lane.edge_id != lane.edge_id) continue;
      const double bumper = std::abs(other.lane.arc_s - lane.arc_s) -
                            (other.geometry.length + tr->geometry.length) / 2.0;
      if (bumper < options.min_spawn_gap) {
        scene.dropped.push_back({tr->agent_id, "spawn-gap",
                                 "within min_spawn_gap of agent " + std::to_string(other.agent_id)});
        too_close = true;
        break;
      }
    }
    if (too_close) continue;

    AgentInit init;
    init.agent_id = tr->agent_id;
    init.lane = lane;
    init.geometry = tr->geometry;
    init.state.position = pose.position;
    init.state.psi = lane.lane_heading;
    init.state.v = std::max(0.0, pose.speed.value_or(fd.speed.value_or(0.0)));
    scene.agents.push_back(init);
    scene.tracklets.push_back(*tr);
  }
  if (scene.agents.empty()) throw EmptySceneError("empty-scene: every agent was dropped");
  return scene;
}

Scene instantiate_scene(std::shared_ptr<const RoadGraph> graph, const SceneRecord& record,
                        const IngestOptions& options) {
  if (record.tracks.empty()) throw EmptySceneError("empty-scene: scene '" + record.scene_id + "' has no tracks");
  double t0 = 0.0;
  if (record.t0) {
    t0 = *record.t0;
  } else {
    bool first = true;
    for (const Tracklet& tr : record.tracks) {
      if (tr.poses.empty()) continue;
      t0 = first ? tr.poses.front().t : std::min(t0, tr.poses.front().t);
      first = false;
    }
  }
  Scene scene = instantiate_agents(std::move(graph), record.tracks, t0, options);
  scene.scene_id = record.scene_id;

  const std::int64_t wanted = record.ego_id.value_or(record.tracks.front().agent_id);
  const bool retained = std::any_of(scene.agents.begin(), scene.agents.end(),
                                    [&](const AgentInit& a) { return a.agent_id == wanted; });
  scene.ego_id = retained ? wanted : scene.agents.front().agent_id;
  return scene;
}

}  // namespace trafficforge
