#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "trafficforge/common.hpp"
#include "trafficforge/road_graph.hpp"
#include "trafficforge/sim_engine.hpp"

namespace trafficforge {

/// Axis-aligned raster. Cell (row, col) covers
/// [origin.x + col*res, origin.x + (col+1)*res) x [origin.y + row*res, origin.y + (row+1)*res).
struct GridSpec {
  std::uint32_t H = 256;
  std::uint32_t W = 256;
  double resolution = 0.5;
  Vec2 origin;

  void validate() const;
  std::size_t cells() const { return static_cast<std::size_t>(H) * W; }
  Vec2 cell_center(std::uint32_t row, std::uint32_t col) const;
  /// Row-major cell index of p, or nullopt outside the grid.
  std::optional<std::size_t> cell_of(const Vec2& p) const;

  /// H x W grid with the given resolution centred on `center`.
  static GridSpec centered(const Vec2& center, std::uint32_t H = 256, std::uint32_t W = 256, double res = 0.5);
};

enum class CellClass : std::uint8_t { kRoad = 0, kLane = 1, kUnknown = 2 };

struct ContextMap {
  GridSpec spec;
  std::vector<CellClass> cells;  // row-major

  CellClass at(std::uint32_t row, std::uint32_t col) const { return cells[static_cast<std::size_t>(row) * spec.W + col]; }
  /// Channel plane c in {road, lane, unknown} as 0/1 floats.
  std::vector<float> plane(CellClass c) const;
  bool drivable(std::size_t index) const { return cells[index] != CellClass::kUnknown; }
};

struct AgentMaps {
  GridSpec spec;
  std::vector<float> state_x;  // metres relative to the agent's first logged position
  std::vector<float> state_y;
  std::vector<float> mask;
  std::vector<float> label[3];  // indexed by Maneuver
  std::vector<std::int32_t> ids;  // agent_id + 1; 0 marks an empty cell
  int collisions = 0;  // agents hidden by a lower id in the same cell
};

struct GridSample {
  std::string scene_id;
  int variant = 0;
  std::uint32_t start_step = 0;
  std::uint32_t t_obs = 0;
  ContextMap context;
  std::vector<AgentMaps> frames;
};

ContextMap render_context(const RoadGraph& graph, const GridSpec& spec);
AgentMaps rasterize_states(const SimLog& log, int t, const GridSpec& spec);

/// Grid centred on the ego's first logged position (lowest agent id without an ego).
GridSpec default_grid_for(const SimLog& log, std::uint32_t H = 256, std::uint32_t W = 256, double res = 0.5);

struct ExportOptions {
  std::uint32_t t_obs = 20;
  std::uint32_t stride = 71;
  /// Frames per sample; 0 takes the whole log.
  std::uint32_t seq_len = 0;
};

/// In-memory windows of the log, one per stride offset that fits.
std::vector<GridSample> build_samples(const SimLog& log, const ContextMap& context, const ExportOptions& options);

std::string sample_file_name(const GridSample& sample);
void write_grid_sample(const GridSample& sample, const std::filesystem::path& path);
GridSample read_grid_sample(const std::filesystem::path& path);

/// Writes every sample into `dir` and returns the written paths.
std::vector<std::filesystem::path> export_sequence(const SimLog& log, const ContextMap& context,
                                                   const ExportOptions& options, const std::filesystem::path& dir);

}  // namespace trafficforge
