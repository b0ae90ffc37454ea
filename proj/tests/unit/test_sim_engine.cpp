#include <gtest/gtest.h>

#include "support/synthetic.hpp"
#include "trafficforge/io.hpp"
#include "trafficforge/sim_engine.hpp"

using namespace trafficforge;

namespace {

std::shared_ptr<const RoadGraph> straight_graph(double length = 200.0) {
  return std::make_shared<const RoadGraph>(build_graph(tf_test::straight_road(length)));
}

VelocityProfile constant_profile(double v, std::size_t n = 80) {
  return {0.1, std::vector<double>(n, v), v, Maneuver::kStraight};
}

BehaviorSet straight_assignments(const Scene& scene, const std::vector<VelocityProfile>& profiles) {
  BehaviorSet set;
  for (std::size_t i = 0; i < scene.agents.size(); ++i) {
    BehaviorAssignment ba;
    ba.agent_id = scene.agents[i].agent_id;
    ba.route = enumerate_routes(*scene.graph, scene.agents[i].lane).front();
    ba.profile = profiles[i];
    set.assignments.push_back(std::move(ba));
  }
  return set;
}

SimConfig quiet_config() {
  SimConfig cfg;
  cfg.epsilon_std = 0.0;
  cfg.master_seed = 17;
  return cfg;
}

}  // namespace

TEST(SimConfig, StepsAndDigest) {
  SimConfig cfg;
  EXPECT_EQ(cfg.steps(), 70);
  SimConfig other = cfg;
  EXPECT_EQ(config_digest(cfg), config_digest(other));
  other.mobil.p = 0.5;
  EXPECT_NE(config_digest(cfg), config_digest(other));
}

TEST(Simulate, SingleAgentConstantSpeed) {
  const auto g = straight_graph();
  const Scene sc = instantiate_agents(g, {tf_test::straight_tracklet(1, {10, 0}, {1, 0}, 10.0)}, 0.0);
  const SimLog log = simulate_scene(sc, straight_assignments(sc, {constant_profile(10.0)}), quiet_config());
  ASSERT_EQ(log.agents.size(), 1u);
  const AgentLog& a = log.agents[0];
  ASSERT_EQ(a.states.size(), 71u);
  EXPECT_NEAR(a.states.back().position.x - a.states.front().position.x, 70.0, 0.5);
  for (const VehicleState& s : a.states) EXPECT_NEAR(s.position.y, 0.0, 1e-6);
}

TEST(Simulate, FollowerKeepsSafeGapBehindSlowLeader) {
  const auto g = straight_graph(400.0);
  const Scene sc = instantiate_agents(
      g, {tf_test::straight_tracklet(1, {10, 0}, {1, 0}, 15.0), tf_test::straight_tracklet(2, {54, 0}, {1, 0}, 5.0)},
      0.0);
  const SimLog log =
      simulate_scene(sc, straight_assignments(sc, {constant_profile(15.0), constant_profile(5.0)}), quiet_config());
  const AgentLog& f = log.agents[0];
  const AgentLog& l = log.agents[1];
  EXPECT_LT(f.states.back().v, 15.0);
  double min_gap = 1e9;
  for (std::size_t k = 0; k < std::min(f.states.size(), l.states.size()); ++k) {
    min_gap = std::min(min_gap, l.states[k].position.x - f.states[k].position.x - 4.0);
  }
  EXPECT_GE(min_gap, f.idm.s0);
}

TEST(Simulate, DeterministicSerialization) {
  const auto g = std::make_shared<const RoadGraph>(build_graph(tf_test::intersection_map()));
  const ProfilePool pool = tf_test::intersection_pool(2);
  const Scene sc = instantiate_scene(g, tf_test::intersection_scene("d", 8));
  SimConfig cfg;
  cfg.master_seed = 5;
  const DatasetResult a = run_dataset({sc}, pool, cfg, 1);
  const DatasetResult b = run_dataset({sc}, pool, cfg, 1);
  ASSERT_EQ(a.logs.size(), b.logs.size());
  for (std::size_t i = 0; i < a.logs.size(); ++i) {
    EXPECT_EQ(io::simlog_csv(a.logs[i]), io::simlog_csv(b.logs[i]));
    EXPECT_EQ(io::simlog_sidecar_json(a.logs[i]), io::simlog_sidecar_json(b.logs[i]));
  }
}

TEST(Dataset, VariantCountsAndParallelEquality) {
  const auto g = std::make_shared<const RoadGraph>(build_graph(tf_test::intersection_map()));
  const ProfilePool pool = tf_test::intersection_pool(2);
  std::vector<Scene> scenes;
  for (int i = 0; i < 2; ++i) {
    SceneRecord rec;
    rec.scene_id = "s" + std::to_string(i);
    rec.tracks.push_back(tf_test::straight_tracklet(1, {40.0 + i, 1.75}, {-1, 0}, 8.0));
    scenes.push_back(instantiate_scene(g, rec));
  }
  SimConfig cfg;
  cfg.master_seed = 1;
  const DatasetResult seq = run_dataset(scenes, pool, cfg, 1);
  EXPECT_EQ(seq.logs.size(), 6u);
  const DatasetResult par = run_dataset(scenes, pool, cfg, 4);
  ASSERT_EQ(par.logs.size(), seq.logs.size());
  for (std::size_t i = 0; i < seq.logs.size(); ++i) EXPECT_EQ(io::simlog_csv(seq.logs[i]), io::simlog_csv(par.logs[i]));

  // Every agent with a single route collapses the variants to one.
  const auto sg = straight_graph();
  SceneRecord rec;
  rec.scene_id = "one";
  rec.tracks.push_back(tf_test::straight_tracklet(1, {10, 0}, {1, 0}, 8.0));
  rec.tracks.push_back(tf_test::straight_tracklet(2, {60, 0}, {1, 0}, 8.0));
  EXPECT_EQ(run_dataset({instantiate_scene(sg, rec)}, pool, cfg, 1).logs.size(), 1u);
}

TEST(Dataset, MissingProfileIsReportedPerScene) {
  const auto g = std::make_shared<const RoadGraph>(build_graph(tf_test::intersection_map()));
  ProfilePool straight_only(0.1);
  straight_only.add(constant_profile(8.0));
  SimConfig cfg;
  const DatasetResult r = run_dataset({instantiate_scene(g, tf_test::intersection_scene("m", 1))}, straight_only, cfg, 1);
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].scene_id, "m");
}

TEST(Simulate, ReplayEgoFollowsRecording) {
  const auto g = straight_graph();
  SceneRecord rec;
  rec.scene_id = "r";
  rec.tracks.push_back(tf_test::straight_tracklet(1, {10, 0}, {1, 0}, 6.0, 71));
  rec.tracks.push_back(tf_test::straight_tracklet(2, {60, 0}, {1, 0}, 8.0));
  rec.ego_id = 1;
  const Scene sc = instantiate_scene(g, rec);
  SimConfig cfg = quiet_config();
  cfg.ego_mode = EgoMode::kReplay;
  const SimLog log = simulate_scene(sc, straight_assignments(sc, {constant_profile(12.0), constant_profile(8.0)}), cfg);
  const AgentLog& ego = log.agents[0];
  EXPECT_TRUE(ego.replayed);
  EXPECT_NEAR(ego.states[50].position.x, 10.0 + 6.0 * 5.0, 1e-9);
}

TEST(Simulate, LaneChangeOnTwoLaneRoad) {
  const auto g = std::make_shared<const RoadGraph>(build_graph(tf_test::straight_road(600.0, 2)));
  // A fast agent stuck behind a slow one in the left lane should move right.
  const Scene sc = instantiate_agents(g,
                                      {tf_test::straight_tracklet(1, {10, 1.75}, {1, 0}, 14.0),
                                       tf_test::straight_tracklet(2, {45, 1.75}, {1, 0}, 4.0)},
                                      0.0);
  const SimLog log =
      simulate_scene(sc, straight_assignments(sc, {constant_profile(14.0), constant_profile(4.0)}), quiet_config());
  EXPECT_GE(log.agents[0].lane_changes, 1);
  EXPECT_LT(log.agents[0].states.back().position.y, 0.0);
}
