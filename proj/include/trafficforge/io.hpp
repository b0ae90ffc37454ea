#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "trafficforge/behavior.hpp"
#include "trafficforge/metrics.hpp"
#include "trafficforge/road_graph.hpp"
#include "trafficforge/scene_ingest.hpp"
#include "trafficforge/sim_engine.hpp"

namespace trafficforge::io {

std::string read_text(const std::filesystem::path& path);
/// Writes atomically: a sibling temporary file renamed over `path`.
void write_text(const std::filesystem::path& path, const std::string& text);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

MapSpec parse_map(const std::string& json_text);
MapSpec load_map(const std::filesystem::path& path);

/// A tracklet file holds one scene object or an array of them.
std::vector<SceneRecord> parse_tracklets(const std::string& json_text);
std::vector<SceneRecord> load_tracklets(const std::filesystem::path& path);

std::string profile_pool_json(const ProfilePool& pool);
ProfilePool parse_profile_pool(const std::string& json_text);
ProfilePool load_profile_pool(const std::filesystem::path& path);

/// Summary of a built graph: nodes, edges with geometry and neighbours.
std::string graph_json(const RoadGraph& graph);

/// One CSV row per logged agent state.
std::string simlog_csv(const SimLog& log);
/// Provenance and per-agent sampled parameters.
std::string simlog_sidecar_json(const SimLog& log);
std::string simlog_basename(const SimLog& log);
/// Inverse of simlog_csv + simlog_sidecar_json.
SimLog parse_simlog(const std::string& csv_text, const std::string& sidecar_text);
/// Every `<name>.csv` with a `<name>.meta.json` in `dir`, sorted by file name.
std::vector<SimLog> load_simlogs(const std::filesystem::path& dir);

/// Prediction file: one JSON object per line with agent_id, gt, samples, dt.
std::vector<PredictionSet> parse_predictions(const std::string& jsonl_text);

}  // namespace trafficforge::io
