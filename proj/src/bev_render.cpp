#include "trafficforge/bev_render.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace trafficforge {

static_assert(std::endian::native == std::endian::little, "grid files are written in native little-endian order");

void GridSpec::validate() const {
  if (H == 0 || W == 0) throw ValidationError("grid H and W must be > 0");
  if (!(resolution > 0.0) || !std::isfinite(resolution)) throw ValidationError("grid resolution must be > 0");
  if (!origin.finite()) throw ValidationError("grid origin must be finite");
}

Vec2 GridSpec::cell_center(std::uint32_t row, std::uint32_t col) const {
  return {origin.x + (col + 0.5) * resolution, origin.y + (row + 0.5) * resolution};
}

std::optional<std::size_t> GridSpec::cell_of(const Vec2& p) const {
  const double cx = std::floor((p.x - origin.x) / resolution);
  const double cy = std::floor((p.y - origin.y) / resolution);
  if (!(cx >= 0.0 && cy >= 0.0 && cx < W && cy < H)) return std::nullopt;
  return static_cast<std::size_t>(cy) * W + static_cast<std::size_t>(cx);
}

GridSpec GridSpec::centered(const Vec2& center, std::uint32_t H, std::uint32_t W, double res) {
  GridSpec g;
  g.H = H;
  g.W = W;
  g.resolution = res;
  g.origin = {center.x - 0.5 * W * res, center.y - 0.5 * H * res};
  return g;
}

std::vector<float> ContextMap::plane(CellClass c) const {
  std::vector<float> out(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) out[i] = cells[i] == c ? 1.0f : 0.0f;
  return out;
}

ContextMap render_context(const RoadGraph& graph, const GridSpec& spec) {
  spec.validate();
  ContextMap map{spec, std::vector<CellClass>(spec.cells(), CellClass::kUnknown)};
  if (graph.empty()) return map;
  const double reach = std::max(graph.max_lane_width() / 2.0, spec.resolution);
  for (std::uint32_t row = 0; row < spec.H; ++row) {
    for (std::uint32_t col = 0; col < spec.W; ++col) {
      const Vec2 c = spec.cell_center(row, col);
      CellClass cls = CellClass::kUnknown;
      for (int eid : graph.edges_near(c - Vec2{reach, reach}, c + Vec2{reach, reach})) {
        const LaneEdge& e = graph.edge(eid);
        const double d = e.polyline.project(c).distance;
        if (d < spec.resolution / 2.0) {
          cls = CellClass::kLane;
          break;
        }
        if (d <= e.lane_width / 2.0) cls = CellClass::kRoad;
      }
      map.cells[static_cast<std::size_t>(row) * spec.W + col] = cls;
    }
  }
  return map;
}

AgentMaps rasterize_states(const SimLog& log, int t, const GridSpec& spec) {
  spec.validate();
  if (t < 0 || t > log.steps) {
    throw BoundsError("step " + std::to_string(t) + " outside log range [0, " + std::to_string(log.steps) + "]");
  }
  AgentMaps m;
  m.spec = spec;
  const std::size_t n = spec.cells();
  m.state_x.assign(n, 0.0f);
  m.state_y.assign(n, 0.0f);
  m.mask.assign(n, 0.0f);
  for (auto& l : m.label) l.assign(n, 0.0f);
  m.ids.assign(n, 0);

  // active_at is ascending by id, so the first writer of a cell has the lowest id.
  for (const AgentLog* a : log.active_at(t)) {
    const VehicleState& s = a->states[static_cast<std::size_t>(t)];
    const auto cell = spec.cell_of(s.position);
    if (!cell) continue;
    if (m.mask[*cell] != 0.0f) {
      ++m.collisions;
      continue;
    }
    const Vec2 rel = s.position - a->states.front().position;
    m.state_x[*cell] = static_cast<float>(rel.x);
    m.state_y[*cell] = static_cast<float>(rel.y);
    m.mask[*cell] = 1.0f;
    m.label[static_cast<std::size_t>(a->label)][*cell] = 1.0f;
    m.ids[*cell] = static_cast<std::int32_t>(a->agent_id + 1);
  }
  return m;
}

GridSpec default_grid_for(const SimLog& log, std::uint32_t H, std::uint32_t W, double res) {
  if (log.agents.empty()) throw ValidationError("log " + log.scene_id + " has no agents");
  const AgentLog* anchor = &log.agents.front();
  for (const AgentLog& a : log.agents) {
    if (log.ego_id && a.agent_id == *log.ego_id) anchor = &a;
  }
  return GridSpec::centered(anchor->states.front().position, H, W, res);
}

std::vector<GridSample> build_samples(const SimLog& log, const ContextMap& context, const ExportOptions& options) {
  const std::uint32_t frames = static_cast<std::uint32_t>(log.steps) + 1;
  const std::uint32_t len = options.seq_len == 0 ? frames : options.seq_len;
  if (options.stride == 0) throw ValidationError("render stride must be >= 1");
  if (len > frames) throw ValidationError("sequence length exceeds the log's " + std::to_string(frames) + " frames");
  if (options.t_obs >= len) throw ValidationError("t_obs must be smaller than the sequence length");
  std::vector<GridSample> out;
  for (std::uint32_t start = 0; start + len <= frames; start += options.stride) {
    GridSample s;
    s.scene_id = log.scene_id;
    s.variant = log.variant;
    s.start_step = start;
    s.t_obs = options.t_obs;
    s.context = context;
    for (std::uint32_t k = 0; k < len; ++k) s.frames.push_back(rasterize_states(log, static_cast<int>(start + k), context.spec));
    out.push_back(std::move(s));
  }
  return out;
}

std::string sample_file_name(const GridSample& sample) {
  std::string id;
  for (char c : sample.scene_id) id += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return id + "_v" + std::to_string(sample.variant) + "_s" + std::to_string(sample.start_step) + ".bevg";
}

namespace {

constexpr char kMagic[4] = {'B', 'E', 'V', 'G'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 64;

class Writer {
 public:
  explicit Writer(std::vector<char>& buf) : buf_(buf) {}
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  template <typename T>
  void put_plane(const std::vector<T>& plane) {
    const auto* p = reinterpret_cast<const char*>(plane.data());
    buf_.insert(buf_.end(), p, p + plane.size() * sizeof(T));
  }

 private:
  std::vector<char>& buf_;
};

class Reader {
 public:
  Reader(const std::vector<char>& buf, const std::filesystem::path& path) : buf_(buf), path_(path) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  template <typename T>
  std::vector<T> plane(std::size_t n) {
    need(n * sizeof(T));
    std::vector<T> v(n);
    std::memcpy(v.data(), buf_.data() + pos_, n * sizeof(T));
    pos_ += n * sizeof(T);
    return v;
  }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw IoError(path_.string() + ": truncated grid file");
  }
  const std::vector<char>& buf_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_grid_sample(const GridSample& sample, const std::filesystem::path& path) {
  const GridSpec& g = sample.context.spec;
  std::vector<char> buf;
  Writer w(buf);
  for (char c : kMagic) w.put(c);
  w.put<std::uint32_t>(kVersion);
  w.put<std::uint32_t>(g.H);
  w.put<std::uint32_t>(g.W);
  w.put<double>(g.resolution);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(sample.frames.size()));
  w.put<std::uint32_t>(sample.t_obs);
  w.put<double>(g.origin.x);
  w.put<double>(g.origin.y);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(sample.variant));
  w.put<std::uint32_t>(sample.start_step);
  w.put<std::uint64_t>(0);
  for (CellClass c : {CellClass::kRoad, CellClass::kLane, CellClass::kUnknown}) w.put_plane(sample.context.plane(c));
  for (const AgentMaps& f : sample.frames) {
    w.put_plane(f.state_x);
    w.put_plane(f.state_y);
    w.put_plane(f.mask);
    for (const auto& l : f.label) w.put_plane(l);
  }
  for (const AgentMaps& f : sample.frames) w.put_plane(f.ids);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

GridSample read_grid_sample(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(buf, path);
  char magic[4];
  for (char& c : magic) c = r.get<char>();
  if (std::memcmp(magic, kMagic, 4) != 0) throw IoError(path.string() + ": not a grid file");
  if (r.get<std::uint32_t>() != kVersion) throw IoError(path.string() + ": unsupported grid file version");

  GridSample s;
  GridSpec& g = s.context.spec;
  g.H = r.get<std::uint32_t>();
  g.W = r.get<std::uint32_t>();
  g.resolution = r.get<double>();
  const std::uint32_t T = r.get<std::uint32_t>();
  s.t_obs = r.get<std::uint32_t>();
  g.origin.x = r.get<double>();
  g.origin.y = r.get<double>();
  s.variant = static_cast<int>(r.get<std::uint32_t>());
  s.start_step = r.get<std::uint32_t>();
  r.skip(8);
  g.validate();

  const std::size_t n = g.cells();
  s.context.cells.assign(n, CellClass::kUnknown);
  std::vector<float> planes[3];
  for (auto& p : planes) p = r.plane<float>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const float sum = planes[0][i] + planes[1][i] + planes[2][i];
    if (sum != 1.0f) throw IoError(path.string() + ": context cell " + std::to_string(i) + " is not one-hot");
    s.context.cells[i] = planes[0][i] == 1.0f ? CellClass::kRoad : planes[1][i] == 1.0f ? CellClass::kLane : CellClass::kUnknown;
  }
  s.frames.resize(T);
  for (AgentMaps& f : s.frames) {
    f.spec = g;
    f.state_x = r.plane<float>(n);
    f.state_y = r.plane<float>(n);
    f.mask = r.plane<float>(n);
    for (auto& l : f.label) l = r.plane<float>(n);
  }
  for (AgentMaps& f : s.frames) f.ids = r.plane<std::int32_t>(n);
  if (!r.done()) throw IoError(path.string() + ": trailing bytes after grid data");
  static_assert(kHeaderBytes == 4 + 4 * 3 + 8 + 4 * 2 + 8 * 2 + 4 * 2 + 8);
  // The header carries no scene id; recover it from the file name written by export_sequence.
  const std::string stem = path.stem().string();
  const std::string suffix = "_v" + std::to_string(s.variant) + "_s" + std::to_string(s.start_step);
  s.scene_id = stem.ends_with(suffix) ? stem.substr(0, stem.size() - suffix.size()) : stem;
  return s;
}

std::vector<std::filesystem::path> export_sequence(const SimLog& log, const ContextMap& context,
                                                   const ExportOptions& options, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> paths;
  for (const GridSample& s : build_samples(log, context, options)) {
    paths.push_back(dir / sample_file_name(s));
    write_grid_sample(s, paths.back());
  }
  return paths;
}

}  // namespace trafficforge
