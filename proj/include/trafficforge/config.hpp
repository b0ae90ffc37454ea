#pragma once

#include <string>
#include <vector>

#include "trafficforge/bev_render.hpp"
#include "trafficforge/road_graph.hpp"
#include "trafficforge/scene_ingest.hpp"
#include "trafficforge/sim_engine.hpp"

namespace trafficforge {

struct GridOptions {
  std::uint32_t H = 256;
  std::uint32_t W = 256;
  double resolution = 0.5;
};

struct MetricOptions {
  std::vector<double> horizons_s{1.0, 2.0, 3.0, 4.0, 5.0};
  double validity_margin = 0.0;
  int pca_components = 2;
  int realism_eval = 1000;
};

struct RunConfig {
  std::string map_path;
  std::string tracklets_path;
  std::string pool_path;
  std::string out_dir;
  SimConfig sim;
  GraphOptions graph;
  IngestOptions ingest;
  GridOptions grid;
  ExportOptions render;
  MetricOptions metrics;
  std::string log_level = "warn";
};

/// Aggregated configuration problems, one line per offending key.
class ConfigError : public ValidationError {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Parses a JSON config document (nested objects or dotted keys) and applies
/// `key=value` overrides on top. Unknown keys and every invalid value are
/// reported together.
RunConfig validate_config(const std::string& json_text, const std::vector<std::string>& overrides = {});

/// Every accepted dotted key with its default, one per line.
std::string config_keys_help();

}  // namespace trafficforge
