#include "trafficforge/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "trafficforge/rng.hpp"

namespace trafficforge {

double distance_before_turn(std::span<const TimedPoint> traj, const TurnOnsetOptions& opt) {
  const std::size_t n = traj.size();
  if (n < 3) throw ValidationError("distance_before_turn needs at least 3 positions");

  std::vector<double> arc(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) arc[i] = arc[i - 1] + distance(traj[i - 1].p, traj[i].p);

  // Segment headings; stationary segments inherit the previous valid heading.
  std::vector<std::optional<double>> raw(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Vec2 d = traj[i + 1].p - traj[i].p;
    if (d.norm() > 1e-9) raw[i] = d.heading();
  }
  std::optional<double> first_valid;
  for (const auto& h : raw) {
    if (h) {
      first_valid = h;
      break;
    }
  }
  if (!first_valid) return arc.back();
  std::vector<double> heading(n - 1);
  double carry = *first_valid;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (raw[i]) carry = *raw[i];
    heading[i] = carry;
  }

  // rate[i] is the turn rate at vertex i+1, covering half of each adjacent interval.
  const std::size_t m = n - 2;
  std::vector<double> rate(m), span(m);
  for (std::size_t i = 0; i < m; ++i) {
    span[i] = (traj[i + 2].t - traj[i].t) / 2.0;
    rate[i] = span[i] > 0.0 ? wrap_angle(heading[i + 1] - heading[i]) / span[i] : 0.0;
  }

  for (std::size_t i = 0; i < m; ++i) {
    double sustained = 0.0;
    for (std::size_t j = i; j < m && std::abs(rate[j]) > opt.rate_threshold; ++j) {
      sustained += span[j];
      if (sustained >= opt.sustain - 1e-9) {
        // A turn detected at the first vertex means the first segment is already turning.
        return i == 0 ? 0.0 : arc[i + 1];
      }
    }
  }
  return arc.back();
}

double VelocityProfile::at(std::size_t k) const {
  if (samples.empty()) return 0.0;
  return samples[std::min(k, samples.size() - 1)];
}

void ProfilePool::add(VelocityProfile profile) {
  by_label_[static_cast<std::size_t>(profile.maneuver)].push_back(profiles_.size());
  profiles_.push_back(std::move(profile));
}

PoolBuildResult build_profile_pool(const std::vector<TimedTrajectory>& real_trajs, double dt,
                                   double straight_threshold, const TurnOnsetOptions& onset) {
  if (!(dt > 0.0)) throw ValidationError("profile pool dt must be > 0");
  PoolBuildResult out{ProfilePool(dt), {}};
  for (std::size_t idx = 0; idx < real_trajs.size(); ++idx) {
    const TimedTrajectory& tr = real_trajs[idx];
    if (tr.size() < 3) {
      out.skipped.push_back({idx, "too short: fewer than 3 points"});
      continue;
    }
    bool monotone = true;
    for (std::size_t i = 1; i < tr.size(); ++i) monotone = monotone && tr[i].t > tr[i - 1].t;
    if (!monotone) {
      out.skipped.push_back({idx, "non-increasing timestamps"});
      continue;
    }

    // Resample positions onto the pool's time base.
    std::vector<Vec2> pos;
    const double t_first = tr.front().t;
    std::size_t seg = 0;
    for (std::size_t k = 0;; ++k) {
      const double t = t_first + static_cast<double>(k) * dt;
      if (t > tr.back().t + 1e-9) break;
      while (seg + 2 < tr.size() && tr[seg + 1].t < t) ++seg;
      const double alpha = std::clamp((t - tr[seg].t) / (tr[seg + 1].t - tr[seg].t), 0.0, 1.0);
      pos.push_back(tr[seg].p + (tr[seg + 1].p - tr[seg].p) * alpha);
    }
    if (pos.size() < 3) {
      out.skipped.push_back({idx, "too short after resampling"});
      continue;
    }

    VelocityProfile prof;
    prof.dt = dt;
    prof.samples.resize(pos.size());
    const std::size_t last = pos.size() - 1;
    for (std::size_t k = 0; k <= last; ++k) {
      if (k == 0) {
        prof.samples[k] = distance(pos[1], pos[0]) / dt;
      } else if (k == last) {
        prof.samples[k] = distance(pos[last], pos[last - 1]) / dt;
      } else {
        prof.samples[k] = distance(pos[k + 1], pos[k - 1]) / (2.0 * dt);
      }
    }
    std::vector<Vec2> raw;
    raw.reserve(tr.size());
    for (const TimedPoint& p : tr) raw.push_back(p.p);
    prof.maneuver = classify_maneuver(raw, straight_threshold);
    if (prof.maneuver == Maneuver::kStraight) {
      double sum = 0.0;
      for (double v : prof.samples) sum += v;
      prof.feature = sum / static_cast<double>(prof.samples.size());
    } else {
      prof.feature = distance_before_turn(tr, onset);
    }
    out.pool.add(std::move(prof));
  }
  return out;
}

VelocityProfile match_profile(const ProfilePool& pool, Maneuver label, double feature_query, std::uint64_t rng_seed,
                              double noise_std) {
  const auto part = pool.partition(label);
  if (part.empty()) throw MissingProfileError(label);
  std::size_t best = part.front();
  double best_d = std::abs(pool.profiles()[best].feature - feature_query);
  for (std::size_t idx : part) {
    const double d = std::abs(pool.profiles()[idx].feature - feature_query);
    if (d < best_d) {
      best = idx;
      best_d = d;
    }
  }
  VelocityProfile out = pool.profiles()[best];
  if (noise_std > 0.0) {
    Rng rng(rng_seed);
    for (double& v : out.samples) v = std::max(0.0, v + gaussian(rng, 0.0, noise_std));
  }
  return out;
}

double feature_for_behavior(const AgentInit& agent, const Route& route, const TurnOnsetOptions& onset) {
  if (route.maneuver == Maneuver::kStraight) return agent.state.v;
  const double step = onset.route_arc_step;
  TimedTrajectory walk;
  for (std::size_t k = 0;; ++k) {
    const double s = static_cast<double>(k) * step;
    if (s > route.total_length + 1e-9) break;
    walk.push_back({s / onset.route_nominal_speed, route.geometry.sample(std::min(s, route.total_length)).point});
  }
  if (walk.size() < 3) return 0.0;
  return distance_before_turn(walk, onset);
}

namespace {

struct AgentOptions {
  std::vector<Maneuver> labels;                       // shuffled distinct labels
  std::map<Maneuver, std::vector<std::size_t>> by_label;  // shuffled route indices
  std::vector<Route> routes;
};

using LabelChoice = std::vector<std::pair<std::int64_t, Maneuver>>;

}  // namespace

std::vector<BehaviorSet> sample_behaviors(const Scene& scene, const RoadGraph& graph, std::uint64_t rng_seed,
                                          int max_variants, const RouteOptions& route_options,
                                          std::span<const std::int64_t> fixed_agents) {
  if (max_variants < 1) throw ValidationError("max_variants must be >= 1");

  std::vector<AgentOptions> per_agent;
  per_agent.reserve(scene.agents.size());
  for (const AgentInit& agent : scene.agents) {
    Rng rng(SeedHash(rng_seed).add(agent.agent_id).value());
    AgentOptions ao;
    const bool fixed = std::find(fixed_agents.begin(), fixed_agents.end(), agent.agent_id) != fixed_agents.end();
    if (!fixed) ao.routes = enumerate_routes(graph, agent.lane, route_options);
    for (std::size_t i = 0; i < ao.routes.size(); ++i) ao.by_label[ao.routes[i].maneuver].push_back(i);
    for (auto& [label, idx] : ao.by_label) {
      ao.labels.push_back(label);
      stable_shuffle(idx, rng);
    }
    stable_shuffle(ao.labels, rng);
    per_agent.push_back(std::move(ao));
  }

  Rng redraw_rng(SeedHash(rng_seed).add(std::string_view("redraw")).value());
  std::set<LabelChoice> seen;
  std::vector<BehaviorSet> sets;
  std::vector<std::map<Maneuver, std::size_t>> label_uses(per_agent.size());

  auto choice_for = [&](const std::vector<std::optional<Maneuver>>& labels) {
    LabelChoice c;
    for (std::size_t a = 0; a < per_agent.size(); ++a) {
      c.push_back({scene.agents[a].agent_id, labels[a].value_or(Maneuver::kStraight)});
    }
    return c;
  };

  for (int v = 0; v < max_variants; ++v) {
    // Cycle through each agent's distinct labels first.
    std::vector<std::optional<Maneuver>> labels(per_agent.size());
    for (std::size_t a = 0; a < per_agent.size(); ++a) {
      const auto& ls = per_agent[a].labels;
      if (!ls.empty()) labels[a] = ls[static_cast<std::size_t>(v) % ls.size()];
    }
    // A repeated label combination gets a bounded number of uniform re-draws.
    for (int attempt = 0; attempt < 32 && seen.contains(choice_for(labels)); ++attempt) {
      for (std::size_t a = 0; a < per_agent.size(); ++a) {
        const auto& ls = per_agent[a].labels;
        if (!ls.empty()) labels[a] = ls[uniform_index(redraw_rng, ls.size())];
      }
    }
    const LabelChoice choice = choice_for(labels);
    if (seen.contains(choice)) continue;
    seen.insert(choice);

    BehaviorSet set;
    set.variant = static_cast<int>(sets.size());
    for (std::size_t a = 0; a < per_agent.size(); ++a) {
      BehaviorAssignment ba;
      ba.agent_id = scene.agents[a].agent_id;
      if (labels[a]) {
        const auto& idx = per_agent[a].by_label.at(*labels[a]);
        std::size_t& uses = label_uses[a][*labels[a]];
        ba.route = per_agent[a].routes[idx[uses % idx.size()]];
        ++uses;
        ba.label = ba.route->maneuver;
      }
      set.assignments.push_back(std::move(ba));
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

void attach_profiles(BehaviorSet& set, const Scene& scene, const ProfilePool& pool, std::uint64_t seed,
                     double noise_std, const TurnOnsetOptions& onset) {
  for (BehaviorAssignment& ba : set.assignments) {
    if (ba.is_static()) continue;
    auto it = std::find_if(scene.agents.begin(), scene.agents.end(),
                           [&](const AgentInit& a) { return a.agent_id == ba.agent_id; });
    if (it == scene.agents.end()) {
      throw ValidationError("assignment for unknown agent " + std::to_string(ba.agent_id));
    }
    const double feature = feature_for_behavior(*it, *ba.route, onset);
    ba.profile = match_profile(pool, ba.label, feature, SeedHash(seed).add(ba.agent_id).value(), noise_std);
  }
}

}  // namespace trafficforge
