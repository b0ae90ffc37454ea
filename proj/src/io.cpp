#include "trafficforge/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace trafficforge::io {

using nlohmann::json;

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(what + ": malformed JSON: " + e.what());
  }
}

/// Typed field access with path-precise messages.
template <typename T>
T field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw ValidationError(where + ": missing field \"" + key + "\"");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(where + "." + key + ": wrong type");
  }
}

template <typename T>
std::optional<T> opt_field(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return field<T>(obj, key, where);
}

Vec2 point(const json& p, const std::string& where) {
  if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
    throw ValidationError(where + ": expected [x, y]");
  }
  return {p[0].get<double>(), p[1].get<double>()};
}

std::vector<Vec2> points(const json& arr, const std::string& where) {
  if (!arr.is_array()) throw ValidationError(where + ": expected an array of [x, y]");
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(point(arr[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

double parse_number(std::string_view s, const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ValidationError(where + ": bad number \"" + std::string(s) + "\"");
  }
  return v;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace

MapSpec parse_map(const std::string& text) {
  const json doc = parse_json(text, "map");
  if (!doc.is_object() || !doc.contains("centerlines") || !doc["centerlines"].is_array()) {
    throw ValidationError("map: expected {\"centerlines\": [...]}");
  }
  MapSpec spec;
  for (std::size_t i = 0; i < doc["centerlines"].size(); ++i) {
    const json& c = doc["centerlines"][i];
    const std::string where = "centerlines[" + std::to_string(i) + "]";
    CenterlineSpec cl;
    cl.id = field<std::int64_t>(c, "id", where);
    cl.points = points(c.contains("points") ? c["points"] : json(), where + ".points");
    cl.lanes = opt_field<int>(c, "lanes", where).value_or(1);
    cl.oneway = opt_field<bool>(c, "oneway", where).value_or(true);
    cl.lane_width = opt_field<double>(c, "lane_width", where);
    spec.centerlines.push_back(std::move(cl));
  }
  return spec;
}

MapSpec load_map(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ValidationError("map file not found: " + path.string());
  try {
    return parse_map(read_text(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

namespace {

SceneRecord parse_scene(const json& s, const std::string& where) {
  SceneRecord rec;
  rec.scene_id = field<std::string>(s, "scene_id", where);
  rec.t0 = opt_field<double>(s, "t0", where);
  rec.ego_id = opt_field<std::int64_t>(s, "ego_id", where);
  if (!s.contains("tracks") || !s["tracks"].is_array()) throw ValidationError(where + ": missing array \"tracks\"");
  for (std::size_t i = 0; i < s["tracks"].size(); ++i) {
    const json& t = s["tracks"][i];
    const std::string tw = where + ".tracks[" + std::to_string(i) + "]";
    Tracklet tr;
    tr.agent_id = field<std::int64_t>(t, "agent_id", tw);
    tr.geometry.length = opt_field<double>(t, "length", tw).value_or(tr.geometry.length);
    tr.geometry.width = opt_field<double>(t, "width", tw).value_or(tr.geometry.width);
    if (!t.contains("poses") || !t["poses"].is_array()) throw ValidationError(tw + ": missing array \"poses\"");
    for (std::size_t k = 0; k < t["poses"].size(); ++k) {
      const json& p = t["poses"][k];
      const std::string pw = tw + ".poses[" + std::to_string(k) + "]";
      TrackletPose pose;
      pose.t = field<double>(p, "t", pw);
      pose.position = {field<double>(p, "x", pw), field<double>(p, "y", pw)};
      pose.heading = opt_field<double>(p, "heading", pw);
      pose.speed = opt_field<double>(p, "speed", pw);
      tr.poses.push_back(pose);
    }
    rec.tracks.push_back(std::move(tr));
  }
  return rec;
}

}  // namespace

std::vector<SceneRecord> parse_tracklets(const std::string& text) {
  const json doc = parse_json(text, "tracklets");
  std::vector<SceneRecord> out;
  if (doc.is_array()) {
    for (std::size_t i = 0; i < doc.size(); ++i) out.push_back(parse_scene(doc[i], "scenes[" + std::to_string(i) + "]"));
  } else {
    out.push_back(parse_scene(doc, "scene"));
  }
  return out;
}

std::vector<SceneRecord> load_tracklets(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ValidationError("tracklet file not found: " + path.string());
  try {
    return parse_tracklets(read_text(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string profile_pool_json(const ProfilePool& pool) {
  json doc;
  doc["dt"] = pool.dt();
  doc["profiles"] = json::array();
  for (const VelocityProfile& p : pool.profiles()) {
    doc["profiles"].push_back({{"label", std::string(to_string(p.maneuver))}, {"feature", p.feature}, {"samples", p.samples}});
  }
  return doc.dump(1) + "\n";
}

ProfilePool parse_profile_pool(const std::string& text) {
  const json doc = parse_json(text, "profile pool");
  const double dt = field<double>(doc, "dt", "pool");
  if (!(dt > 0.0)) throw ValidationError("pool.dt must be > 0");
  ProfilePool pool(dt);
  if (!doc.contains("profiles") || !doc["profiles"].is_array()) throw ValidationError("pool: missing array \"profiles\"");
  for (std::size_t i = 0; i < doc["profiles"].size(); ++i) {
    const json& p = doc["profiles"][i];
    const std::string where = "pool.profiles[" + std::to_string(i) + "]";
    VelocityProfile prof;
    prof.dt = dt;
    const auto label = parse_maneuver(field<std::string>(p, "label", where));
    if (!label) throw ValidationError(where + ".label: expected left, right or straight");
    prof.maneuver = *label;
    prof.feature = field<double>(p, "feature", where);
    prof.samples = field<std::vector<double>>(p, "samples", where);
    if (prof.samples.empty()) throw ValidationError(where + ".samples: empty");
    pool.add(std::move(prof));
  }
  return pool;
}

ProfilePool load_profile_pool(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ValidationError("profile pool not found: " + path.string());
  try {
    return parse_profile_pool(read_text(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string graph_json(const RoadGraph& graph) {
  json doc;
  doc["nodes"] = json::array();
  for (const LaneNode& n : graph.nodes()) doc["nodes"].push_back({{"id", n.id}, {"x", n.position.x}, {"y", n.position.y}});
  doc["edges"] = json::array();
  for (const LaneEdge& e : graph.edges()) {
    json pts = json::array();
    for (const Vec2& p : e.polyline.points()) pts.push_back({p.x, p.y});
    json je{{"id", e.id},
            {"from", e.from_node},
            {"to", e.to_node},
            {"length", e.length()},
            {"lane_width", e.lane_width},
            {"centerline_id", e.centerline_id},
            {"lane_index", e.lane_index},
            {"reversed", e.reversed},
            {"points", pts}};
    je["left_neighbor"] = e.left_neighbor ? json(*e.left_neighbor) : json(nullptr);
    je["right_neighbor"] = e.right_neighbor ? json(*e.right_neighbor) : json(nullptr);
    doc["edges"].push_back(std::move(je));
  }
  return doc.dump(1) + "\n";
}

std::string simlog_basename(const SimLog& log) {
  std::string id;
  for (char c : log.scene_id) id += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return id + "_v" + std::to_string(log.variant);
}

std::string simlog_csv(const SimLog& log) {
  std::string out = "scene_id,variant,agent_id,t,x,y,v,psi,a,phi,label\n";
  const std::string scene = csv_field(log.scene_id);
  char tbuf[32];
  for (const AgentLog& a : log.agents) {
    const std::string prefix = scene + "," + std::to_string(log.variant) + "," + std::to_string(a.agent_id) + ",";
    const std::string label(to_string(a.label));
    for (std::size_t k = 0; k < a.states.size(); ++k) {
      const VehicleState& s = a.states[k];
      std::snprintf(tbuf, sizeof(tbuf), "%.3f", static_cast<double>(k) * log.dt);
      out += prefix;
      out += tbuf;
      for (double v : {s.position.x, s.position.y, s.v, s.psi, s.a, s.phi}) {
        out += ',';
        out += format_double(v);
      }
      out += ',';
      out += label;
      out += '\n';
    }
  }
  return out;
}

std::string simlog_sidecar_json(const SimLog& log) {
  json doc;
  doc["scene_id"] = log.scene_id;
  doc["variant"] = log.variant;
  doc["dt"] = log.dt;
  doc["steps"] = log.steps;
  doc["master_seed"] = log.master_seed;
  doc["config_digest"] = log.config_digest;
  doc["ego_id"] = log.ego_id ? json(*log.ego_id) : json(nullptr);
  doc["agents"] = json::array();
  for (const AgentLog& a : log.agents) {
    json ja{{"agent_id", a.agent_id},
            {"label", std::string(to_string(a.label))},
            {"route_edges", a.route_edges},
            {"static", a.is_static},
            {"replayed", a.replayed},
            {"epsilon", a.epsilon},
            {"length", a.geometry.length},
            {"width", a.geometry.width},
            {"lane_changes", a.lane_changes},
            {"idm", {{"v0", a.idm.v0}, {"delta", a.idm.delta}, {"T", a.idm.T}, {"s0", a.idm.s0}, {"a", a.idm.a}, {"b", a.idm.b}}}};
    ja["exit_step"] = a.exit_step ? json(*a.exit_step) : json(nullptr);
    doc["agents"].push_back(std::move(ja));
  }
  return doc.dump(1) + "\n";
}

SimLog parse_simlog(const std::string& csv_text, const std::string& sidecar_text) {
  const json meta = parse_json(sidecar_text, "log sidecar");
  SimLog log;
  log.scene_id = field<std::string>(meta, "scene_id", "sidecar");
  log.variant = field<int>(meta, "variant", "sidecar");
  log.dt = field<double>(meta, "dt", "sidecar");
  log.steps = field<int>(meta, "steps", "sidecar");
  log.master_seed = field<std::uint64_t>(meta, "master_seed", "sidecar");
  log.config_digest = field<std::string>(meta, "config_digest", "sidecar");
  log.ego_id = opt_field<std::int64_t>(meta, "ego_id", "sidecar");
  std::map<std::int64_t, std::size_t> index;
  for (const json& ja : meta.at("agents")) {
    AgentLog a;
    a.agent_id = field<std::int64_t>(ja, "agent_id", "sidecar.agents");
    const auto label = parse_maneuver(field<std::string>(ja, "label", "sidecar.agents"));
    if (!label) throw ValidationError("sidecar: bad label for agent " + std::to_string(a.agent_id));
    a.label = *label;
    a.route_edges = field<std::vector<int>>(ja, "route_edges", "sidecar.agents");
    a.is_static = field<bool>(ja, "static", "sidecar.agents");
    a.replayed = field<bool>(ja, "replayed", "sidecar.agents");
    a.epsilon = field<double>(ja, "epsilon", "sidecar.agents");
    a.geometry = {field<double>(ja, "length", "sidecar.agents"), field<double>(ja, "width", "sidecar.agents")};
    a.lane_changes = field<int>(ja, "lane_changes", "sidecar.agents");
    const json& idm = ja.at("idm");
    a.idm = {idm.at("v0").get<double>(), idm.at("delta").get<double>(), idm.at("T").get<double>(),
             idm.at("s0").get<double>(), idm.at("a").get<double>(), idm.at("b").get<double>()};
    a.exit_step = opt_field<int>(ja, "exit_step", "sidecar.agents");
    index[a.agent_id] = log.agents.size();
    log.agents.push_back(std::move(a));
  }

  std::istringstream in(csv_text);
  std::string line;
  std::getline(in, line);
  if (line != "scene_id,variant,agent_id,t,x,y,v,psi,a,phi,label") throw ValidationError("log CSV: unexpected header");
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const std::string where = "log CSV row " + std::to_string(row);
    const auto cols = split_csv_line(line);
    if (cols.size() != 11) throw ValidationError(where + ": expected 11 columns");
    const auto id = static_cast<std::int64_t>(parse_number(cols[2], where));
    auto it = index.find(id);
    if (it == index.end()) throw ValidationError(where + ": agent " + cols[2] + " missing from sidecar");
    AgentLog& a = log.agents[it->second];
    const auto step = std::llround(parse_number(cols[3], where) / log.dt);
    if (step != static_cast<long long>(a.states.size())) throw ValidationError(where + ": steps out of order");
    VehicleState s;
    s.position = {parse_number(cols[4], where), parse_number(cols[5], where)};
    s.v = parse_number(cols[6], where);
    s.psi = parse_number(cols[7], where);
    s.a = parse_number(cols[8], where);
    s.phi = parse_number(cols[9], where);
    a.states.push_back(s);
  }
  return log;
}

std::vector<SimLog> load_simlogs(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ValidationError("log directory not found: " + dir.string());
  std::vector<std::filesystem::path> csvs;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") csvs.push_back(entry.path());
  }
  std::sort(csvs.begin(), csvs.end());
  std::vector<SimLog> logs;
  for (const auto& csv : csvs) {
    std::filesystem::path meta = csv;
    meta.replace_extension(".meta.json");
    if (!std::filesystem::exists(meta)) continue;
    try {
      logs.push_back(parse_simlog(read_text(csv), read_text(meta)));
    } catch (const ValidationError& e) {
      throw ValidationError(csv.string() + ": " + e.what());
    }
  }
  return logs;
}

std::vector<PredictionSet> parse_predictions(const std::string& text) {
  std::vector<PredictionSet> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "predictions line " + std::to_string(lineno);
    const json doc = parse_json(line, where);
    PredictionSet ps;
    ps.agent_id = field<std::int64_t>(doc, "agent_id", where);
    const double dt = field<double>(doc, "dt", where);
    if (!(dt > 0.0)) throw ValidationError(where + ".dt: must be > 0");
    ps.ground_truth = {dt, points(doc.contains("gt") ? doc["gt"] : json(), where + ".gt")};
    if (!doc.contains("samples") || !doc["samples"].is_array()) throw ValidationError(where + ": missing array \"samples\"");
    for (std::size_t i = 0; i < doc["samples"].size(); ++i) {
      Trajectory2D s{dt, points(doc["samples"][i], where + ".samples[" + std::to_string(i) + "]")};
      if (s.points.size() != ps.ground_truth.points.size()) {
        throw ValidationError(where + ".samples[" + std::to_string(i) + "]: length differs from gt");
      }
      ps.samples.push_back(std::move(s));
    }
    if (ps.samples.empty()) throw ValidationError(where + ": needs at least 1 sample");
    out.push_back(std::move(ps));
  }
  return out;
}

}  // namespace trafficforge::io
