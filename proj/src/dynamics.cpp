#include "trafficforge/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "trafficforge/rng.hpp"

namespace trafficforge {

double desired_gap(const IdmParams& p, double v, double dv) {
  return p.s0 + std::max(0.0, v * p.T + v * dv / (2.0 * std::sqrt(p.a * p.b)));
}

double idm_accel(const IdmParams& p, const std::optional<LeaderInfo>& leader, double v, double a_max_decel) {
  double interaction = 0.0;
  if (leader) {
    if (!(leader->gap_s > 0.0)) return -a_max_decel;
    const double ratio = desired_gap(p, v, leader->dv) / leader->gap_s;
    interaction = ratio * ratio;
  }
  const double acc = p.a * (1.0 - std::pow(v / p.v0, p.delta) - interaction);
  return std::clamp(acc, -a_max_decel, p.a);
}

IdmParams sample_idm_params(std::uint64_t rng_seed, double v0, const IdmOverrides& o) {
  if (!(v0 > 0.0)) throw ValidationError("IDM desired speed v0 must be > 0");
  Rng rng(rng_seed);
  IdmParams p;
  p.v0 = v0;
  // Draw every field even when overridden so overrides do not shift other draws.
  const double T = uniform(rng, 0.5, 2.5);
  const double s0 = uniform(rng, 0.5, 4.0);
  const double a = uniform(rng, 1.0, 2.0);
  const double b = uniform(rng, 1.5, 2.5);
  p.delta = o.delta.value_or(4.0);
  p.T = o.T.value_or(T);
  p.s0 = o.s0.value_or(s0);
  p.a = o.a.value_or(a);
  p.b = o.b.value_or(b);
  return p;
}

std::optional<LeaderInfo> find_leader(std::span<const LaneOccupant> agents, std::int64_t subject_id,
                                      double subject_s, double subject_v, double subject_length,
                                      const Route& route, double sensing_range) {
  std::optional<LeaderInfo> best;
  double best_dist = 0.0;
  for (const LaneOccupant& o : agents) {
    if (o.id == subject_id) continue;
    const auto s = route.route_s(o.edge_id, o.arc_s, subject_s);
    if (!s) continue;
    const double dist = *s - subject_s;
    if (!(dist > 0.0) || dist > sensing_range) continue;
    if (!best || dist < best_dist || (dist == best_dist && o.id < best->leader_id)) {
      best_dist = dist;
      best = LeaderInfo{o.id, std::max(0.01, dist - (subject_length + o.length) / 2.0), subject_v - o.v};
    }
  }
  return best;
}

std::optional<FollowerInfo> find_follower(const RoadGraph& graph, std::span<const LaneOccupant> agents,
                                          std::int64_t subject_id, int edge_id, double arc_s,
                                          double subject_length, double sensing_range) {
  std::optional<FollowerInfo> best;
  double best_dist = 0.0;
  // offset = distance from the end of `edge` to the subject.
  std::vector<std::pair<int, double>> stack{{edge_id, -1.0}};
  std::vector<double> seen(graph.edges().size(), -1.0);
  while (!stack.empty()) {
    auto [eid, offset] = stack.back();
    stack.pop_back();
    const LaneEdge& e = graph.edge(eid);
    for (const LaneOccupant& o : agents) {
      if (o.id == subject_id || o.edge_id != eid) continue;
      const double dist = offset < 0.0 ? arc_s - o.arc_s : offset + (e.length() - o.arc_s);
      if (!(dist > 0.0) || dist > sensing_range) continue;
      if (!best || dist < best_dist || (dist == best_dist && o.id < best->follower_id)) {
        best_dist = dist;
        best = FollowerInfo{o.id, std::max(0.01, dist - (subject_length + o.length) / 2.0), o.v};
      }
    }
    const double reach = offset < 0.0 ? arc_s : offset + e.length();
    if (reach >= sensing_range) continue;
    for (int pred : graph.incoming(e.from_node)) {
      auto& s = seen[static_cast<std::size_t>(pred)];
      if (s >= 0.0 && s <= reach) continue;
      s = reach;
      stack.push_back({pred, reach});
    }
  }
  return best;
}

LaneDecision mobil_decide(const MobilParams& p, double ac_old, double ac_new, double an_old, double an_new,
                          double ao_old, double ao_new) {
  const double incentive = (ac_new - ac_old) + p.p * ((an_new - an_old) + (ao_new - ao_old));
  const bool wants = incentive > p.da_th - p.da_bias;
  const bool safe = (an_new - an_old) > -p.b_safe && (ac_new - ac_old) > -p.b_safe;
  return wants && safe ? LaneDecision::kChange : LaneDecision::kKeep;
}

}  // namespace trafficforge
