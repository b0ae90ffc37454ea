#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "trafficforge/road_graph.hpp"
#include "trafficforge/scene_ingest.hpp"

namespace trafficforge {

struct TimedPoint {
  double t = 0.0;
  Vec2 p;
};
using TimedTrajectory = std::vector<TimedPoint>;

struct TurnOnsetOptions {
  double rate_threshold = 0.1;  // rad/s
  double sustain = 0.5;         // s
  /// Route geometry has no time base; it is walked at this arc step and speed.
  double route_arc_step = 1.0;    // m
  double route_nominal_speed = 10.0;  // m/s
};

/// Arc length travelled before the heading rate first exceeds the threshold
/// for at least `sustain` seconds. Full arc length when no onset is found.
double distance_before_turn(std::span<const TimedPoint> traj, const TurnOnsetOptions& options = {});

struct VelocityProfile {
  double dt = 0.1;
  std::vector<double> samples;
  double feature = 0.0;
  Maneuver maneuver = Maneuver::kStraight;

  /// Sample at step k; holds the last value past the end.
  double at(std::size_t k) const;
};

class ProfilePool {
 public:
  ProfilePool() = default;
  explicit ProfilePool(double dt) : dt_(dt) {}

  void add(VelocityProfile profile);
  double dt() const { return dt_; }
  std::span<const VelocityProfile> profiles() const { return profiles_; }
  /// Indices into profiles() carrying `label`, in insertion order.
  std::span<const std::size_t> partition(Maneuver label) const {
    return by_label_[static_cast<std::size_t>(label)];
  }
  bool empty() const { return profiles_.empty(); }

 private:
  double dt_ = 0.1;
  std::vector<VelocityProfile> profiles_;
  std::vector<std::size_t> by_label_[3];
};

struct PoolSkip {
  std::size_t index = 0;
  std::string reason;
};

struct PoolBuildResult {
  ProfilePool pool;
  std::vector<PoolSkip> skipped;
};

PoolBuildResult build_profile_pool(const std::vector<TimedTrajectory>& real_trajs, double dt,
                                   double straight_threshold = deg_to_rad(30.0),
                                   const TurnOnsetOptions& onset = {});

/// Nearest profile by feature (ties to the lower index) with per-sample
/// N(0, noise_std) noise, clamped at zero.
VelocityProfile match_profile(const ProfilePool& pool, Maneuver label, double feature_query,
                              std::uint64_t rng_seed, double noise_std = 1.0);

double feature_for_behavior(const AgentInit& agent, const Route& route, const TurnOnsetOptions& onset = {});

struct BehaviorAssignment {
  std::int64_t agent_id = 0;
  std::optional<Route> route;  // empty: the agent holds position
  Maneuver label = Maneuver::kStraight;
  VelocityProfile profile;

  bool is_static() const { return !route.has_value(); }
};

struct BehaviorSet {
  int variant = 0;
  std::vector<BehaviorAssignment> assignments;  // ascending agent_id
};

/// Up to max_variants mutually distinct behaviour sets. Profiles are left
/// empty; see attach_profiles. Agents listed in `fixed_agents` get no route.
std::vector<BehaviorSet> sample_behaviors(const Scene& scene, const RoadGraph& graph, std::uint64_t rng_seed,
                                          int max_variants = 3, const RouteOptions& route_options = {},
                                          std::span<const std::int64_t> fixed_agents = {});

/// Matches a reference profile to every moving assignment of the set.
/// Per-agent noise seeds come from SeedHash(seed).add(agent_id).
void attach_profiles(BehaviorSet& set, const Scene& scene, const ProfilePool& pool, std::uint64_t seed,
                     double noise_std = 1.0, const TurnOnsetOptions& onset = {});

}  // namespace trafficforge
