#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "trafficforge/road_graph.hpp"

namespace trafficforge {

/// Intelligent Driver Model parameters. v0 is refreshed every step from the
/// reference velocity profile.
struct IdmParams {
  double v0 = 15.0;
  double delta = 4.0;
  double T = 1.5;
  double s0 = 2.0;
  double a = 1.5;
  double b = 2.0;
};

struct MobilParams {
  double p = 0.3;
  double da_th = 0.1;
  double b_safe = 4.0;
  double da_bias = 0.3;  // toward the rightmost lane
};

struct LeaderInfo {
  std::int64_t leader_id = 0;
  double gap_s = 0.0;  // bumper to bumper
  double dv = 0.0;     // v_follower - v_leader
};

inline constexpr double kDefaultMaxDecel = 8.0;

double desired_gap(const IdmParams& params, double v, double dv);

/// a * (1 - (v/v0)^delta - (s*/s)^2), clamped to [-a_max_decel, a].
double idm_accel(const IdmParams& params, const std::optional<LeaderInfo>& leader, double v,
                 double a_max_decel = kDefaultMaxDecel);

/// Optional fixed values replace the sampled ones.
struct IdmOverrides {
  std::optional<double> delta, T, s0, a, b;
};

/// delta = 4; T ~ U(0.5, 2.5) s; s0 ~ U(0.5, 4.0) m; a ~ U(1.0, 2.0); b ~ U(1.5, 2.5).
IdmParams sample_idm_params(std::uint64_t rng_seed, double v0, const IdmOverrides& overrides = {});

/// An agent as seen by the leader/follower search.
struct LaneOccupant {
  std::int64_t id = 0;
  int edge_id = 0;
  double arc_s = 0.0;
  double v = 0.0;
  double length = 4.0;
};

/// First occupant ahead of route position `subject_s` on the route's edges,
/// within sensing_range. The subject itself is skipped by id.
std::optional<LeaderInfo> find_leader(std::span<const LaneOccupant> agents, std::int64_t subject_id,
                                      double subject_s, double subject_v, double subject_length,
                                      const Route& route, double sensing_range = 100.0);

struct FollowerInfo {
  std::int64_t follower_id = 0;
  double gap_s = 0.0;
  double v = 0.0;
};

/// Nearest occupant behind (edge, arc_s), searching the same edge and then
/// predecessor edges up to sensing_range.
std::optional<FollowerInfo> find_follower(const RoadGraph& graph, std::span<const LaneOccupant> agents,
                                          std::int64_t subject_id, int edge_id, double arc_s,
                                          double subject_length, double sensing_range = 100.0);

enum class LaneDecision { kKeep, kChange };

/// Incentive: (ac_new - ac_old) + p((an_new - an_old) + (ao_new - ao_old)) > da_th - da_bias,
/// safety: an_new - an_old > -b_safe and ac_new - ac_old > -b_safe.
/// `da_bias` here is the signed bias for this particular target lane.
LaneDecision mobil_decide(const MobilParams& params, double ac_old, double ac_new, double an_old, double an_new,
                          double ao_old, double ao_new);

}  // namespace trafficforge
