#include "trafficforge/sim_engine.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "trafficforge/rng.hpp"

namespace trafficforge {

int SimConfig::steps() const { return static_cast<int>(std::ceil(horizon / dt - 1e-9)); }

namespace {

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_double(*v) : "null"; }

}  // namespace

std::string canonical_config_text(const SimConfig& c) {
  std::ostringstream os;
  os << "sim.dt=" << fmt_double(c.dt) << "\n"
     << "sim.horizon=" << fmt_double(c.horizon) << "\n"
     << "sim.max_variants=" << c.max_variants << "\n"
     << "sim.master_seed=" << c.master_seed << "\n"
     << "sim.ego=" << (c.ego_mode == EgoMode::kReplay ? "replay" : "simulate") << "\n"
     << "sim.profile_noise_std=" << fmt_double(c.profile_noise_std) << "\n"
     << "sim.route_horizon=" << fmt_double(c.routes.horizon_dist) << "\n"
     << "sim.max_routes=" << c.routes.max_routes << "\n"
     << "sim.straight_threshold=" << fmt_double(c.routes.straight_threshold) << "\n"
     << "sim.turn_rate_threshold=" << fmt_double(c.onset.rate_threshold) << "\n"
     << "sim.turn_sustain=" << fmt_double(c.onset.sustain) << "\n"
     << "sim.u_turn_threshold=" << fmt_double(c.routes.u_turn_threshold) << "\n"
     << "sim.route_arc_step=" << fmt_double(c.onset.route_arc_step) << "\n"
     << "sim.route_nominal_speed=" << fmt_double(c.onset.route_nominal_speed) << "\n"
     << "idm.delta=" << fmt_opt(c.idm.delta) << "\n"
     << "idm.T=" << fmt_opt(c.idm.T) << "\n"
     << "idm.s0=" << fmt_opt(c.idm.s0) << "\n"
     << "idm.a=" << fmt_opt(c.idm.a) << "\n"
     << "idm.b=" << fmt_opt(c.idm.b) << "\n"
     << "idm.a_max_decel=" << fmt_double(c.a_max_decel) << "\n"
     << "idm.v0_min=" << fmt_double(c.v0_min) << "\n"
     << "mobil.enabled=" << c.lane_changes << "\n"
     << "mobil.p=" << fmt_double(c.mobil.p) << "\n"
     << "mobil.da_th=" << fmt_double(c.mobil.da_th) << "\n"
     << "mobil.b_safe=" << fmt_double(c.mobil.b_safe) << "\n"
     << "mobil.da_bias=" << fmt_double(c.mobil.da_bias) << "\n"
     << "mobil.cooldown=" << fmt_double(c.lane_change_cooldown) << "\n"
     << "mobil.settled=" << fmt_double(c.lane_change_settled) << "\n"
     << "controller.kp_lateral=" << fmt_double(c.controller.kp_lateral) << "\n"
     << "controller.kp_heading=" << fmt_double(c.controller.kp_heading) << "\n"
     << "controller.epsilon_std=" << fmt_double(c.epsilon_std) << "\n"
     << "controller.lookahead_time=" << fmt_double(c.controller.lookahead_time) << "\n"
     << "controller.lookahead_min=" << fmt_double(c.controller.lookahead_min) << "\n"
     << "controller.kp_speed=" << fmt_double(c.controller.kp_speed) << "\n"
     << "controller.phi_max=" << fmt_double(c.controller.phi_max) << "\n"
     << "controller.v_eps=" << fmt_double(c.controller.v_eps) << "\n"
     << "controller.psi_req_max=" << fmt_double(c.controller.psi_req_max) << "\n"
     << "sensing_range=" << fmt_double(c.sensing_range) << "\n";
  return os.str();
}

std::string config_digest(const SimConfig& config) {
  const std::uint64_t h = SeedHash(0x7466).add(std::string_view(canonical_config_text(config))).value();
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<const AgentLog*> SimLog::active_at(int step) const {
  std::vector<const AgentLog*> out;
  for (const AgentLog& a : agents) {
    if (step >= 0 && static_cast<std::size_t>(step) < a.states.size()) out.push_back(&a);
  }
  return out;
}

std::uint64_t agent_seed(std::uint64_t master_seed, const std::string& scene_id, int variant, std::int64_t agent_id) {
  return SeedHash(master_seed).add(std::string_view(scene_id)).add(variant).add(agent_id).value();
}

namespace {

struct Agent {
  const AgentInit* init = nullptr;
  const Tracklet* tracklet = nullptr;  // replay source
  AgentLog log;
  VehicleState state;
  std::optional<Route> route;
  VelocityProfile profile;
  IdmParams idm;
  ControllerParams ctrl;
  double route_s = 0.0;
  double x_lateral = 0.0;
  bool active = true;
  bool changing = false;
  double last_change_t = -1e300;

  bool moving() const { return active && route.has_value() && !log.replayed; }
};

struct PendingChange {
  Route route;
  double incentive = 0.0;
  double a_idm = 0.0;
};

double reference_speed(const VelocityProfile& p, int step, double dt) {
  const auto idx = std::llround(static_cast<double>(step) * dt / p.dt);
  return p.at(static_cast<std::size_t>(std::max<long long>(idx, 0)));
}

VehicleState replay_state(const Tracklet& tr, double t, const VehicleState& prev, double fd_step) {
  VehicleState s;
  const double last = tr.poses.back().t;
  const double tc = std::clamp(t, tr.poses.front().t, last);
  const TrackletPose pose = interpolate_pose(tr, tc);
  const PoseRates rates = pose_rates(tr, tc, fd_step);
  s.position = pose.position;
  s.v = t > last ? 0.0 : std::max(0.0, pose.speed.value_or(rates.speed.value_or(0.0)));
  s.psi = wrap_angle(pose.heading.value_or(rates.heading.value_or(prev.psi)));
  return s;
}

class SceneSimulator {
 public:
  SceneSimulator(const Scene& scene, const BehaviorSet& set, const SimConfig& config)
      : scene_(scene), graph_(*scene.graph), cfg_(config) {
    if (!(cfg_.dt > 0.0) || !(cfg_.horizon > 0.0)) throw ValidationError("sim.dt and sim.horizon must be > 0");
    std::map<std::int64_t, const BehaviorAssignment*> by_id;
    for (const BehaviorAssignment& ba : set.assignments) {
      const bool known = std::any_of(scene.agents.begin(), scene.agents.end(),
                                     [&](const AgentInit& a) { return a.agent_id == ba.agent_id; });
      if (!known) throw ValidationError("assignment references unknown agent " + std::to_string(ba.agent_id));
      by_id[ba.agent_id] = &ba;
    }
    variant_ = set.variant;
    for (const AgentInit& init : scene.agents) {
      auto it = by_id.find(init.agent_id);
      if (it == by_id.end()) throw ValidationError("agent " + std::to_string(init.agent_id) + " has no assignment");
      add_agent(init, *it->second);
    }
  }

  SimLog run() {
    const int steps = cfg_.steps();
    for (int k = 0; k < steps; ++k) step(k);
    SimLog log;
    log.scene_id = scene_.scene_id;
    log.variant = variant_;
    log.dt = cfg_.dt;
    log.steps = steps;
    log.master_seed = cfg_.master_seed;
    log.config_digest = config_digest(cfg_);
    log.ego_id = scene_.ego_id;
    for (Agent& a : agents_) log.agents.push_back(std::move(a.log));
    return log;
  }

 private:
  void add_agent(const AgentInit& init, const BehaviorAssignment& ba) {
    Agent a;
    a.init = &init;
    a.state = init.state;
    a.log.agent_id = init.agent_id;
    a.log.geometry = init.geometry;
    const std::uint64_t base = agent_seed(cfg_.master_seed, scene_.scene_id, variant_, init.agent_id);

    const bool replay = cfg_.ego_mode == EgoMode::kReplay && scene_.ego_id == init.agent_id;
    if (replay) {
      for (const Tracklet& tr : scene_.tracklets) {
        if (tr.agent_id == init.agent_id) a.tracklet = &tr;
      }
      if (a.tracklet == nullptr) throw ValidationError("no tracklet to replay for ego " + std::to_string(init.agent_id));
      a.log.replayed = true;
      a.state = replay_state(*a.tracklet, scene_.t0, init.state, 0.1);
      std::vector<Vec2> recorded;
      for (const TrackletPose& p : a.tracklet->poses) {
        if (p.t >= scene_.t0) recorded.push_back(p.position);
      }
      recorded = dedupe_points(recorded);
      a.log.label = recorded.size() >= 2 ? classify_maneuver(recorded, cfg_.routes.straight_threshold)
                                         : Maneuver::kStraight;
    } else if (ba.is_static()) {
      a.log.is_static = true;
      a.state.v = 0.0;
    } else {
      a.route = ba.route;
      a.profile = ba.profile;
      a.log.label = ba.label;
      a.log.route_edges = ba.route->edge_ids;
      const double v0 = std::max(reference_speed(a.profile, 0, cfg_.dt), cfg_.v0_min);
      a.idm = sample_idm_params(SeedHash(base).add(std::string_view("idm")).value(), v0, cfg_.idm);
      Rng eps_rng(SeedHash(base).add(std::string_view("epsilon")).value());
      a.ctrl = cfg_.controller;
      a.ctrl.epsilon = gaussian(eps_rng, 0.0, cfg_.epsilon_std);
      const PolylineProjection pr = a.route->geometry.project_window(a.state.position, -5.0, 10.0);
      a.route_s = pr.s;
      a.x_lateral = pr.lateral;
    }
    a.log.idm = a.idm;
    a.log.epsilon = a.ctrl.epsilon;
    record(a);
    index_[init.agent_id] = agents_.size();
    agents_.push_back(std::move(a));
  }

  static void record(Agent& a) {
    a.log.states.push_back(a.state);
    a.log.lateral_offsets.push_back(a.x_lateral);
    a.log.changing_lane.push_back(a.changing);
  }

  std::optional<LaneOccupant> occupancy(const Agent& a) const {
    if (!a.active) return std::nullopt;
    LaneOccupant o;
    o.id = a.log.agent_id;
    o.v = a.state.v;
    o.length = a.log.geometry.length;
    if (a.route && !a.log.replayed) {
      std::tie(o.edge_id, o.arc_s) = a.route->edge_at(a.route_s);
    } else if (a.log.is_static) {
      o.edge_id = a.init->lane.edge_id;
      o.arc_s = a.init->lane.arc_s;
    } else {
      try {
        ProjectOptions po;
        const LaneCoordinate lc = graph_.project(a.state.position, a.state.psi, po);
        o.edge_id = lc.edge_id;
        o.arc_s = lc.arc_s;
      } catch (const OffMapError&) {
        return std::nullopt;
      }
    }
    return o;
  }

  /// IDM parameters of another agent at step k, if it reacts at all.
  std::optional<IdmParams> reacting_idm(std::int64_t id, int k) const {
    const Agent& other = agents_[index_.at(id)];
    if (!other.moving()) return std::nullopt;
    IdmParams p = other.idm;
    p.v0 = std::max(reference_speed(other.profile, k, cfg_.dt), cfg_.v0_min);
    return p;
  }

  std::optional<PendingChange> consider_lane_change(const Agent& a, const LaneOccupant& self,
                                                    const std::optional<LeaderInfo>& leader, double a_idm,
                                                    const std::vector<LaneOccupant>& occ, int k) const {
    const LaneEdge& cur = graph_.edge(self.edge_id);
    const double v = a.state.v;
    const double len = a.log.geometry.length;
    std::optional<PendingChange> best;
    for (int side = 0; side < 2; ++side) {
      const std::optional<int> nb = side == 0 ? cur.right_neighbor : cur.left_neighbor;
      if (!nb) continue;
      const LaneCoordinate c = graph_.project_onto(*nb, a.state.position);
      if (c.arc_s >= graph_.edge(*nb).length() - 1e-6) continue;
      RouteOptions ro = cfg_.routes;
      ro.horizon_dist = std::max(a.route->total_length - a.route_s, 1.0);
      std::optional<Route> cand;
      for (Route& r : enumerate_routes(graph_, c, ro)) {
        if (r.maneuver == a.log.label) {
          cand = std::move(r);
          break;
        }
      }
      if (!cand) continue;

      const auto leader_new = find_leader(occ, self.id, 0.0, v, len, *cand, cfg_.sensing_range);
      const double ac_new = idm_accel(a.idm, leader_new, v, cfg_.a_max_decel);

      double an_old = 0.0, an_new = 0.0;
      if (auto fn = find_follower(graph_, occ, self.id, *nb, c.arc_s, len, cfg_.sensing_range)) {
        if (auto pn = reacting_idm(fn->follower_id, k)) {
          std::optional<LeaderInfo> before;
          if (leader_new) {
            before = LeaderInfo{leader_new->leader_id, fn->gap_s + len + leader_new->gap_s,
                                fn->v - (v - leader_new->dv)};
          }
          an_old = idm_accel(*pn, before, fn->v, cfg_.a_max_decel);
          an_new = idm_accel(*pn, LeaderInfo{self.id, fn->gap_s, fn->v - v}, fn->v, cfg_.a_max_decel);
        }
      }
      double ao_old = 0.0, ao_new = 0.0;
      if (auto fo = find_follower(graph_, occ, self.id, self.edge_id, self.arc_s, len, cfg_.sensing_range)) {
        if (auto po = reacting_idm(fo->follower_id, k)) {
          ao_old = idm_accel(*po, LeaderInfo{self.id, fo->gap_s, fo->v - v}, fo->v, cfg_.a_max_decel);
          std::optional<LeaderInfo> after;
          if (leader) after = LeaderInfo{leader->leader_id, fo->gap_s + len + leader->gap_s, fo->v - (v - leader->dv)};
          ao_new = idm_accel(*po, after, fo->v, cfg_.a_max_decel);
        }
      }

      MobilParams mp = cfg_.mobil;
      mp.da_bias = side == 0 ? cfg_.mobil.da_bias : -cfg_.mobil.da_bias;
      if (mobil_decide(mp, a_idm, ac_new, an_old, an_new, ao_old, ao_new) != LaneDecision::kChange) continue;
      const double incentive = (ac_new - a_idm) + mp.p * ((an_new - an_old) + (ao_new - ao_old)) + mp.da_bias;
      if (!best || incentive > best->incentive) best = PendingChange{std::move(*cand), incentive, ac_new};
    }
    return best;
  }

  /// Two agents within sensing range of each other that would enter the same
  /// lane, or swap lanes, in one step: only the larger incentive proceeds
  /// (ties to the lower id).
  void resolve_conflicts(std::vector<std::optional<PendingChange>>& changes,
                         const std::map<std::int64_t, LaneOccupant>& occ_by_id) const {
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < changes.size(); ++i) {
      if (changes[i]) pending.push_back(i);
    }
    std::vector<bool> vetoed(changes.size(), false);
    for (std::size_t x = 0; x < pending.size(); ++x) {
      for (std::size_t y = x + 1; y < pending.size(); ++y) {
        const std::size_t i = pending[x], j = pending[y];
        const Agent& ai = agents_[i];
        const Agent& aj = agents_[j];
        if (distance(ai.state.position, aj.state.position) > cfg_.sensing_range) continue;
        const int ti = changes[i]->route.edge_ids.front(), tj = changes[j]->route.edge_ids.front();
        const int ci = occ_by_id.at(ai.log.agent_id).edge_id, cj = occ_by_id.at(aj.log.agent_id).edge_id;
        if (ti != tj && !(ti == cj && tj == ci)) continue;
        // agents_ is in ascending id order, so i wins ties.
        if (changes[j]->incentive > changes[i]->incentive) {
          vetoed[i] = true;
        } else {
          vetoed[j] = true;
        }
      }
    }
    for (std::size_t i = 0; i < changes.size(); ++i) {
      if (vetoed[i]) changes[i].reset();
    }
  }

  void step(int k) {
    const double t = static_cast<double>(k) * cfg_.dt;

    // Frozen snapshot for every decision of this step.
    std::vector<LaneOccupant> occ;
    std::map<std::int64_t, LaneOccupant> occ_by_id;
    for (const Agent& a : agents_) {
      if (auto o = occupancy(a)) {
        occ.push_back(*o);
        occ_by_id[o->id] = *o;
      }
    }

    struct Plan {
      double v_ref = 0.0;
      double a_cap = 0.0;
      double a_idm = 0.0;
    };
    std::vector<VehicleState> next(agents_.size());
    std::vector<Plan> plans(agents_.size());
    std::vector<std::optional<PendingChange>> changes(agents_.size());
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      Agent& a = agents_[i];
      if (!a.moving()) continue;
      const LaneOccupant& self = occ_by_id.at(a.log.agent_id);
      Plan& plan = plans[i];
      plan.v_ref = reference_speed(a.profile, k, cfg_.dt);
      a.idm.v0 = std::max(plan.v_ref, cfg_.v0_min);
      plan.a_cap = a.idm.a;
      const auto leader = find_leader(occ, self.id, a.route_s, a.state.v, a.log.geometry.length, *a.route,
                                      cfg_.sensing_range);
      plan.a_idm = idm_accel(a.idm, leader, a.state.v, cfg_.a_max_decel);
      if (cfg_.lane_changes && !a.changing && t - a.last_change_t >= cfg_.lane_change_cooldown - 1e-9) {
        changes[i] = consider_lane_change(a, self, leader, plan.a_idm, occ, k);
      }
    }
    resolve_conflicts(changes, occ_by_id);

    for (std::size_t i = 0; i < agents_.size(); ++i) {
      Agent& a = agents_[i];
      if (!a.active) continue;
      if (a.log.replayed) {
        next[i] = replay_state(*a.tracklet, scene_.t0 + t + cfg_.dt, a.state, 0.1);
        next[i].a = (next[i].v - a.state.v) / cfg_.dt;
        continue;
      }
      if (!a.route) {
        next[i] = a.state;
        continue;
      }
      const Plan& plan = plans[i];
      const Route* reference = &*a.route;
      double s_ref = a.route_s;
      double x_lat = a.x_lateral;
      double a_idm = plan.a_idm;
      if (changes[i]) {
        reference = &changes[i]->route;
        const PolylineProjection pr = reference->geometry.project_window(a.state.position, -5.0, 10.0);
        s_ref = pr.s;
        x_lat = pr.lateral;
        a_idm = changes[i]->a_idm;
      }
      const ControlCommand cmd = track_reference(a.state, reference->geometry, s_ref, x_lat, plan.v_ref, a_idm,
                                                 a.log.geometry, a.ctrl, plan.a_cap);
      next[i] = step_kinematics(a.state, cmd.a_cmd, cmd.phi, a.log.geometry, cfg_.dt);
    }

    // Apply simultaneously.
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      Agent& a = agents_[i];
      if (!a.active) continue;
      const double v_prev = a.state.v;
      a.state = next[i];
      if (a.route && !a.log.replayed) {
        if (changes[i]) {
          a.route = std::move(changes[i]->route);
          a.route_s = a.route->geometry.project_window(a.state.position, -5.0, 10.0).s;
          a.changing = true;
          a.last_change_t = t;
          ++a.log.lane_changes;
        }
        const PolylineProjection pr =
            a.route->geometry.project_window(a.state.position, a.route_s - 2.0, a.route_s + v_prev * cfg_.dt + 5.0);
        a.route_s = pr.s;
        a.x_lateral = pr.lateral;
        if (a.changing && std::abs(a.x_lateral) < cfg_.lane_change_settled) a.changing = false;
      }
      record(a);
      if (a.route && !a.log.replayed && a.route_s > a.route->total_length) {
        a.active = false;
        a.log.exit_step = k + 1;
      }
    }
  }

  const Scene& scene_;
  const RoadGraph& graph_;
  SimConfig cfg_;
  int variant_ = 0;
  std::vector<Agent> agents_;
  std::map<std::int64_t, std::size_t> index_;
};

}  // namespace

SimLog simulate_scene(const Scene& scene, const BehaviorSet& assignment, const SimConfig& config) {
  if (!scene.graph) throw ValidationError("scene has no road graph");
  return SceneSimulator(scene, assignment, config).run();
}

DatasetResult run_dataset(const std::vector<Scene>& scenes, const ProfilePool& pool, const SimConfig& config,
                          int jobs) {
  if (scenes.empty()) throw ValidationError("run_dataset needs at least one scene");
  struct Slot {
    std::vector<SimLog> logs;
    std::optional<SceneFailure> failure;
  };
  std::vector<Slot> slots(scenes.size());

  auto run_one = [&](std::size_t idx) {
    const Scene& scene = scenes[idx];
    try {
      std::vector<std::int64_t> fixed;
      if (config.ego_mode == EgoMode::kReplay && scene.ego_id) fixed.push_back(*scene.ego_id);
      const std::uint64_t behavior_seed =
          SeedHash(config.master_seed).add(std::string_view(scene.scene_id)).add(std::string_view("behavior")).value();
      auto sets = sample_behaviors(scene, *scene.graph, behavior_seed, config.max_variants, config.routes, fixed);
      std::vector<SimLog> logs;
      for (BehaviorSet& set : sets) {
        const std::uint64_t profile_seed = SeedHash(config.master_seed)
                                               .add(std::string_view(scene.scene_id))
                                               .add(set.variant)
                                               .add(std::string_view("profile"))
                                               .value();
        attach_profiles(set, scene, pool, profile_seed, config.profile_noise_std, config.onset);
        logs.push_back(simulate_scene(scene, set, config));
      }
      slots[idx].logs = std::move(logs);
    } catch (const std::exception& e) {
      slots[idx].failure = SceneFailure{scene.scene_id, e.what()};
    }
  };

  const std::size_t workers = static_cast<std::size_t>(std::clamp(jobs, 1, 256));
  if (workers == 1) {
    for (std::size_t i = 0; i < scenes.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool_threads;
    for (std::size_t w = 0; w < std::min(workers, scenes.size()); ++w) {
      pool_threads.emplace_back([&] {
        for (std::size_t i = next++; i < scenes.size(); i = next++) run_one(i);
      });
    }
    for (auto& th : pool_threads) th.join();
  }

  DatasetResult out;
  for (Slot& s : slots) {
    if (s.failure) {
      out.failures.push_back(std::move(*s.failure));
      continue;
    }
    for (SimLog& l : s.logs) out.logs.push_back(std::move(l));
  }
  return out;
}

}  // namespace trafficforge
