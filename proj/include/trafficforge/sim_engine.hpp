#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trafficforge/behavior.hpp"
#include "trafficforge/controller.hpp"
#include "trafficforge/dynamics.hpp"
#include "trafficforge/scene_ingest.hpp"

namespace trafficforge {

enum class EgoMode { kSimulate, kReplay };

struct SimConfig {
  double dt = 0.1;
  double horizon = 7.0;
  int max_variants = 3;
  std::uint64_t master_seed = 0;

  IdmOverrides idm;
  double a_max_decel = kDefaultMaxDecel;
  /// Floor for the IDM desired speed when the reference profile reaches zero.
  double v0_min = 1.0;

  MobilParams mobil;
  bool lane_changes = true;
  double lane_change_cooldown = 3.0;  // s between changes of one agent
  double lane_change_settled = 0.5;   // |x_lateral| below which a change is complete

  ControllerParams controller;
  double epsilon_std = 0.2;

  double sensing_range = 100.0;
  double profile_noise_std = 1.0;
  RouteOptions routes;
  TurnOnsetOptions onset;
  EgoMode ego_mode = EgoMode::kSimulate;

  int steps() const;
};

/// Canonical text of every config field; the digest is a stable hash of it.
std::string canonical_config_text(const SimConfig& config);
std::string config_digest(const SimConfig& config);

struct AgentLog {
  std::int64_t agent_id = 0;
  Maneuver label = Maneuver::kStraight;
  std::vector<int> route_edges;  // initial route
  bool is_static = false;
  bool replayed = false;
  IdmParams idm;
  double epsilon = 0.0;
  VehicleGeometry geometry;
  int lane_changes = 0;

  std::vector<VehicleState> states;  // one per logged step, starting at step 0
  std::vector<double> lateral_offsets;  // offset from the active reference lane
  std::vector<bool> changing_lane;
  std::optional<int> exit_step;
};

struct SimLog {
  std::string scene_id;
  int variant = 0;
  double dt = 0.1;
  int steps = 70;  // stepping count; non-exiting agents log steps + 1 states
  std::uint64_t master_seed = 0;
  std::string config_digest;
  std::optional<std::int64_t> ego_id;
  std::vector<AgentLog> agents;  // ascending agent_id

  /// Agents with a logged state at `step`.
  std::vector<const AgentLog*> active_at(int step) const;
};

/// Per-agent seed used for IDM sampling and lateral noise.
std::uint64_t agent_seed(std::uint64_t master_seed, const std::string& scene_id, int variant,
                         std::int64_t agent_id);

SimLog simulate_scene(const Scene& scene, const BehaviorSet& assignment, const SimConfig& config);

struct SceneFailure {
  std::string scene_id;
  std::string message;
};

struct DatasetResult {
  std::vector<SimLog> logs;  // scene order, then variant order
  std::vector<SceneFailure> failures;
};

/// Samples behaviours, matches profiles and simulates every scene. Output is
/// independent of `jobs`.
DatasetResult run_dataset(const std::vector<Scene>& scenes, const ProfilePool& pool, const SimConfig& config,
                          int jobs = 1);

}  // namespace trafficforge
