#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "support/synthetic.hpp"
#include "trafficforge/bev_render.hpp"
#include "trafficforge/io.hpp"

using namespace trafficforge;
namespace fs = std::filesystem;

namespace {

SimLog two_agent_log(int steps = 70) {
  SimLog log;
  log.scene_id = "scene/one";
  log.steps = steps;
  for (std::int64_t id : {3, 5}) {
    AgentLog a;
    a.agent_id = id;
    a.label = id == 3 ? Maneuver::kLeft : Maneuver::kStraight;
    a.idm = IdmParams{};
    for (int k = 0; k <= steps; ++k) {
      VehicleState s;
      s.position = {1.0 * k, id == 3 ? 0.0 : 3.0};
      s.v = 10.0;
      a.states.push_back(s);
      a.lateral_offsets.push_back(0.0);
      a.changing_lane.push_back(false);
    }
    log.agents.push_back(std::move(a));
  }
  return log;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tf_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Grid, CellIndexConvention) {
  GridSpec spec;
  spec.H = 40;
  spec.W = 40;
  spec.resolution = 0.5;
  spec.origin = {0, 0};
  const auto idx = spec.cell_of({10.3, 4.7});
  ASSERT_TRUE(idx.has_value());
  EXPECT_EQ(*idx % spec.W, 20u);
  EXPECT_EQ(*idx / spec.W, 9u);
  // Rows grow with y, so a point below the origin is outside this grid.
  EXPECT_FALSE(spec.cell_of({10.3, -4.7}).has_value());
  GridSpec below = spec;
  below.origin = {0, -10};
  EXPECT_EQ(*below.cell_of({10.3, -4.7}) % below.W, 20u);
}

TEST(Context, EmptyGraphAndOneHot) {
  GridSpec spec;
  spec.H = 16;
  spec.W = 16;
  const ContextMap empty = render_context(RoadGraph{}, spec);
  for (CellClass c : empty.cells) EXPECT_EQ(c, CellClass::kUnknown);

  const RoadGraph g = build_graph(tf_test::intersection_map());
  const ContextMap ctx = render_context(g, GridSpec::centered({0, 0}, 64, 64, 1.0));
  std::size_t sum = 0;
  for (CellClass c : {CellClass::kRoad, CellClass::kLane, CellClass::kUnknown}) {
    for (float v : ctx.plane(c)) sum += v == 1.0f ? 1 : 0;
  }
  EXPECT_EQ(sum, ctx.spec.cells());
}

TEST(Context, StraightLaneBandMatchesAnalyticArea) {
  const RoadGraph g = build_graph({{{1, {{-100, 0.1}, {100, 0.1}}, 1, true, 3.5}}});
  GridSpec spec;
  spec.H = 40;
  spec.W = 80;
  spec.resolution = 0.25;
  spec.origin = {-10, -5};
  const ContextMap ctx = render_context(g, spec);
  std::size_t drivable = 0, lane = 0;
  for (std::size_t i = 0; i < ctx.cells.size(); ++i) {
    drivable += ctx.drivable(i) ? 1 : 0;
    lane += ctx.cells[i] == CellClass::kLane ? 1 : 0;
  }
  const double rows = static_cast<double>(drivable) / spec.W;
  EXPECT_NEAR(rows, 3.5 / spec.resolution, 1.0);
  EXPECT_EQ(lane, spec.W);
}

TEST(Rasterize, OwnStartLowerIdWinsAndMaskCount) {
  SimLog log = two_agent_log();
  GridSpec spec;
  spec.H = 32;
  spec.W = 32;
  spec.resolution = 1.0;
  spec.origin = {-8, -8};
  const AgentMaps start = rasterize_states(log, 0, spec);
  const std::size_t cell = *spec.cell_of({0, 0});
  EXPECT_EQ(start.mask[cell], 1.0f);
  EXPECT_EQ(start.state_x[cell], 0.0f);
  EXPECT_EQ(start.ids[cell], 4);
  EXPECT_EQ(start.label[static_cast<int>(Maneuver::kLeft)][cell], 1.0f);

  const AgentMaps later = rasterize_states(log, 5, spec);
  EXPECT_EQ(later.state_x[*spec.cell_of({5, 0})], 5.0f);

  // Both agents in one cell.
  log.agents[1].states[2].position = log.agents[0].states[2].position;
  const AgentMaps clash = rasterize_states(log, 2, spec);
  float mask_sum = 0;
  for (float m : clash.mask) mask_sum += m;
  EXPECT_EQ(mask_sum, 1.0f);
  EXPECT_EQ(clash.collisions, 1);
  EXPECT_EQ(clash.ids[*spec.cell_of(log.agents[0].states[2].position)], 4);

  // Exited agents leave the mask.
  log.agents[1].states.resize(4);
  log.agents[1].exit_step = 3;
  float at10 = 0;
  for (float m : rasterize_states(log, 10, spec).mask) at10 += m;
  EXPECT_EQ(at10, 1.0f);
}

TEST(Samples, CountNamesAndRoundTrip) {
  const SimLog log = two_agent_log();
  const RoadGraph g = build_graph(tf_test::straight_road(200.0));
  const GridSpec spec = default_grid_for(log, 24, 24, 1.0);
  const ContextMap ctx = render_context(g, spec);
  ExportOptions opts;
  const auto samples = build_samples(log, ctx, opts);
  ASSERT_EQ(samples.size(), 1u);
  EXPECT_EQ(samples[0].frames.size(), 71u);
  EXPECT_EQ(samples[0].t_obs, 20u);

  const fs::path dir = scratch("bev");
  const fs::path file = dir / sample_file_name(samples[0]);
  EXPECT_EQ(file.filename().string().find('/'), std::string::npos);
  write_grid_sample(samples[0], file);
  const GridSample back = read_grid_sample(file);
  EXPECT_EQ(back.context.cells, samples[0].context.cells);
  ASSERT_EQ(back.frames.size(), samples[0].frames.size());
  for (std::size_t t = 0; t < back.frames.size(); ++t) {
    EXPECT_EQ(back.frames[t].state_x, samples[0].frames[t].state_x);
    EXPECT_EQ(back.frames[t].state_y, samples[0].frames[t].state_y);
    EXPECT_EQ(back.frames[t].mask, samples[0].frames[t].mask);
    EXPECT_EQ(back.frames[t].ids, samples[0].frames[t].ids);
  }

  std::string bytes = io::read_text(file);
  bytes[0] = 'X';
  io::write_text(dir / "bad.bevg", bytes);
  EXPECT_THROW(read_grid_sample(dir / "bad.bevg"), Error);
  fs::remove_all(dir);
}

TEST(Io, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5, 123456789.125}) {
    EXPECT_EQ(std::stod(io::format_double(v)), v);
  }
}

TEST(Io, MapAndTrackletParsing) {
  const MapSpec m = io::parse_map(R"({"centerlines":[{"id":4,"points":[[0,0],[10,0]],"lanes":2,"oneway":false}]})");
  ASSERT_EQ(m.centerlines.size(), 1u);
  EXPECT_EQ(m.centerlines[0].lanes, 2);
  EXPECT_FALSE(m.centerlines[0].oneway);
  EXPECT_THROW(io::parse_map(R"({"lines":[]})"), ValidationError);
  EXPECT_THROW(io::load_map("/nonexistent/map.json"), ValidationError);

  const auto scenes = io::parse_tracklets(
      R"({"scene_id":"a","ego_id":2,"tracks":[{"agent_id":2,"poses":[{"t":0,"x":1,"y":2},{"t":0.1,"x":2,"y":2}]}]})");
  ASSERT_EQ(scenes.size(), 1u);
  EXPECT_EQ(scenes[0].ego_id, 2);
  EXPECT_EQ(scenes[0].tracks[0].poses[1].position.x, 2.0);
}

TEST(Io, SimlogRoundTrip) {
  const SimLog log = two_agent_log(10);
  const SimLog back = io::parse_simlog(io::simlog_csv(log), io::simlog_sidecar_json(log));
  EXPECT_EQ(back.scene_id, log.scene_id);
  ASSERT_EQ(back.agents.size(), 2u);
  EXPECT_EQ(back.agents[0].label, Maneuver::kLeft);
  EXPECT_EQ(back.agents[1].states.size(), 11u);
  EXPECT_EQ(io::simlog_csv(back), io::simlog_csv(log));
}

TEST(Io, ProfilePoolRoundTrip) {
  const ProfilePool pool = tf_test::intersection_pool(1);
  const ProfilePool back = io::parse_profile_pool(io::profile_pool_json(pool));
  ASSERT_EQ(back.profiles().size(), pool.profiles().size());
  EXPECT_EQ(back.profiles()[3].samples, pool.profiles()[3].samples);
  EXPECT_EQ(io::profile_pool_json(back), io::profile_pool_json(pool));
}

TEST(Io, PredictionsJsonLines) {
  const auto sets = io::parse_predictions(
      "{\"agent_id\":1,\"dt\":0.1,\"gt\":[[0,0],[1,0]],\"samples\":[[[0,0],[1,1]],[[0,0],[1,0]]]}\n\n");
  ASSERT_EQ(sets.size(), 1u);
  EXPECT_EQ(sets[0].samples.size(), 2u);
  EXPECT_THROW(io::parse_predictions("{\"agent_id\":1,\"dt\":0.1,\"gt\":[[0,0]],\"samples\":[[[0,0],[1,1]]]}"),
               ValidationError);
}
