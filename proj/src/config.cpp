#include "trafficforge/config.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "json.hpp"
#include "trafficforge/io.hpp"

namespace trafficforge {

using nlohmann::json;

ConfigError::ConfigError(std::vector<std::string> problems)
    : ValidationError([&] {
        std::string msg = "invalid configuration:";
        for (const auto& p : problems) msg += "\n  " + p;
        return msg;
      }()),
      problems_(std::move(problems)) {}

namespace {

enum class Kind { kNumber, kInteger, kBool, kString, kNumberList };

struct Key {
  std::string name;
  Kind kind;
  std::function<std::string(RunConfig&, const json&)> apply;  // returns a problem, or ""
  std::function<std::string(const RunConfig&)> show;
};

std::string fmt(double v) { return io::format_double(v); }

Key number(std::string name, std::function<double&(RunConfig&)> ref, double lo, bool lo_open,
           std::string requirement) {
  auto apply = [ref, lo, lo_open, requirement](RunConfig& c, const json& v) -> std::string {
    const double x = v.get<double>();
    if (!std::isfinite(x) || (lo_open ? !(x > lo) : !(x >= lo))) return requirement;
    ref(c) = x;
    return "";
  };
  auto show = [ref](const RunConfig& c) { return fmt(ref(const_cast<RunConfig&>(c))); };
  return {std::move(name), Kind::kNumber, apply, show};
}

Key degrees(std::string name, std::function<double&(RunConfig&)> ref, double hi) {
  auto apply = [ref, hi](RunConfig& c, const json& v) -> std::string {
    const double x = v.get<double>();
    if (!(x > 0.0 && x <= hi)) return "must be in (0, " + fmt(hi) + "] degrees";
    ref(c) = deg_to_rad(x);
    return "";
  };
  auto show = [ref](const RunConfig& c) {
    return fmt(std::round(ref(const_cast<RunConfig&>(c)) * 180.0 / kPi * 1e9) / 1e9);
  };
  return {std::move(name), Kind::kNumber, apply, show};
}

template <typename Int>
Key integer(std::string name, std::function<Int&(RunConfig&)> ref, long long lo) {
  auto apply = [ref, lo](RunConfig& c, const json& v) -> std::string {
    const auto x = v.get<long long>();
    if (x < lo) return "must be >= " + std::to_string(lo);
    ref(c) = static_cast<Int>(x);
    return "";
  };
  auto show = [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); };
  return {std::move(name), Kind::kInteger, apply, show};
}

Key optional_number(std::string name, std::function<std::optional<double>&(RunConfig&)> ref, double lo,
                    std::string unset = "sampled") {
  auto apply = [ref, lo](RunConfig& c, const json& v) -> std::string {
    if (v.is_null()) {
      ref(c).reset();
      return "";
    }
    const double x = v.get<double>();
    if (!(x > lo)) return "must be > " + fmt(lo) + " or null";
    ref(c) = x;
    return "";
  };
  auto show = [ref, unset](const RunConfig& c) {
    const auto& v = ref(const_cast<RunConfig&>(c));
    return v ? fmt(*v) : unset;
  };
  return {std::move(name), Kind::kNumber, apply, show};
}

Key string_key(std::string name, std::function<std::string&(RunConfig&)> ref) {
  return {std::move(name), Kind::kString,
          [ref](RunConfig& c, const json& v) {
            ref(c) = v.get<std::string>();
            return std::string();
          },
          [ref](const RunConfig& c) { return "\"" + ref(const_cast<RunConfig&>(c)) + "\""; }};
}

const std::vector<Key>& schema() {
  static const std::vector<Key> keys = [] {
    std::vector<Key> k;
    k.push_back(number("sim.dt", [](RunConfig& c) -> double& { return c.sim.dt; }, 0.0, true, "must be > 0"));
    k.push_back(number("sim.horizon", [](RunConfig& c) -> double& { return c.sim.horizon; }, 0.0, true, "must be > 0"));
    k.push_back(integer<int>("sim.max_variants", [](RunConfig& c) -> int& { return c.sim.max_variants; }, 1));
    k.push_back(number("sim.v0_min", [](RunConfig& c) -> double& { return c.sim.v0_min; }, 0.0, true, "must be > 0"));
    k.push_back(number("sim.profile_noise_std", [](RunConfig& c) -> double& { return c.sim.profile_noise_std; }, 0.0,
                       false, "must be >= 0"));
    k.push_back({"sim.ego", Kind::kString,
                 [](RunConfig& c, const json& v) -> std::string {
                   const auto s = v.get<std::string>();
                   if (s == "simulate") c.sim.ego_mode = EgoMode::kSimulate;
                   else if (s == "replay") c.sim.ego_mode = EgoMode::kReplay;
                   else return "must be \"simulate\" or \"replay\"";
                   return "";
                 },
                 [](const RunConfig& c) {
                   return std::string(c.sim.ego_mode == EgoMode::kReplay ? "\"replay\"" : "\"simulate\"");
                 }});
    k.push_back(number("sensing_range", [](RunConfig& c) -> double& { return c.sim.sensing_range; }, 0.0, true,
                       "must be > 0"));
    k.push_back(optional_number("idm.delta", [](RunConfig& c) -> std::optional<double>& { return c.sim.idm.delta; }, 0.0,
                                "4"));
    k.push_back(optional_number("idm.T", [](RunConfig& c) -> std::optional<double>& { return c.sim.idm.T; }, 0.0));
    k.push_back(optional_number("idm.s0", [](RunConfig& c) -> std::optional<double>& { return c.sim.idm.s0; }, 0.0));
    k.push_back(optional_number("idm.a", [](RunConfig& c) -> std::optional<double>& { return c.sim.idm.a; }, 0.0));
    k.push_back(optional_number("idm.b", [](RunConfig& c) -> std::optional<double>& { return c.sim.idm.b; }, 0.0));
    k.push_back(number("idm.a_max_decel", [](RunConfig& c) -> double& { return c.sim.a_max_decel; }, 0.0, true,
                       "must be > 0"));
    k.push_back({"mobil.enabled", Kind::kBool,
                 [](RunConfig& c, const json& v) {
                   c.sim.lane_changes = v.get<bool>();
                   return std::string();
                 },
                 [](const RunConfig& c) { return std::string(c.sim.lane_changes ? "true" : "false"); }});
    k.push_back(number("mobil.p", [](RunConfig& c) -> double& { return c.sim.mobil.p; }, 0.0, false, "must be >= 0"));
    k.push_back(number("mobil.da_th", [](RunConfig& c) -> double& { return c.sim.mobil.da_th; }, -1e300, false, ""));
    k.push_back(number("mobil.b_safe", [](RunConfig& c) -> double& { return c.sim.mobil.b_safe; }, 0.0, true,
                       "must be > 0"));
    k.push_back(number("mobil.da_bias", [](RunConfig& c) -> double& { return c.sim.mobil.da_bias; }, -1e300, false, ""));
    k.push_back(number("mobil.cooldown", [](RunConfig& c) -> double& { return c.sim.lane_change_cooldown; }, 0.0, false,
                       "must be >= 0"));
    k.push_back(number("mobil.settled", [](RunConfig& c) -> double& { return c.sim.lane_change_settled; }, 0.0, true,
                       "must be > 0"));
    k.push_back(number("controller.kp_lateral", [](RunConfig& c) -> double& { return c.sim.controller.kp_lateral; },
                       0.0, true, "must be > 0"));
    k.push_back(number("controller.kp_heading", [](RunConfig& c) -> double& { return c.sim.controller.kp_heading; },
                       0.0, true, "must be > 0"));
    k.push_back(number("controller.kp_speed", [](RunConfig& c) -> double& { return c.sim.controller.kp_speed; }, 0.0,
                       true, "must be > 0"));
    k.push_back(number("controller.epsilon_std", [](RunConfig& c) -> double& { return c.sim.epsilon_std; }, 0.0, false,
                       "must be >= 0"));
    k.push_back(number("controller.lookahead_time",
                       [](RunConfig& c) -> double& { return c.sim.controller.lookahead_time; }, 0.0, false,
                       "must be >= 0"));
    k.push_back(number("controller.lookahead_min", [](RunConfig& c) -> double& { return c.sim.controller.lookahead_min; },
                       0.0, false, "must be >= 0"));
    k.push_back(number("controller.v_eps", [](RunConfig& c) -> double& { return c.sim.controller.v_eps; }, 0.0, true,
                       "must be > 0"));
    k.push_back(degrees("controller.phi_max_deg", [](RunConfig& c) -> double& { return c.sim.controller.phi_max; }, 89.0));
    k.push_back(degrees("controller.psi_req_max_deg",
                        [](RunConfig& c) -> double& { return c.sim.controller.psi_req_max; }, 90.0));
    k.push_back(number("routes.horizon", [](RunConfig& c) -> double& { return c.sim.routes.horizon_dist; }, 0.0, true,
                       "must be > 0"));
    k.push_back(integer<int>("routes.max_routes", [](RunConfig& c) -> int& { return c.sim.routes.max_routes; }, 1));
    k.push_back(degrees("routes.straight_threshold_deg",
                        [](RunConfig& c) -> double& { return c.sim.routes.straight_threshold; }, 180.0));
    k.push_back(degrees("routes.u_turn_threshold_deg",
                        [](RunConfig& c) -> double& { return c.sim.routes.u_turn_threshold; }, 360.0));
    k.push_back(number("onset.rate_threshold", [](RunConfig& c) -> double& { return c.sim.onset.rate_threshold; }, 0.0,
                       true, "must be > 0"));
    k.push_back(number("onset.sustain", [](RunConfig& c) -> double& { return c.sim.onset.sustain; }, 0.0, true,
                       "must be > 0"));
    k.push_back(number("graph.join_tolerance", [](RunConfig& c) -> double& { return c.graph.join_tolerance; }, 0.0,
                       false, "must be >= 0"));
    k.push_back(number("graph.default_lane_width", [](RunConfig& c) -> double& { return c.graph.default_lane_width; },
                       0.0, true, "must be > 0"));
    k.push_back(number("ingest.max_snap_distance", [](RunConfig& c) -> double& { return c.ingest.max_snap_distance; },
                       0.0, true, "must be > 0"));
    k.push_back(number("ingest.min_spawn_gap", [](RunConfig& c) -> double& { return c.ingest.min_spawn_gap; }, 0.0,
                       false, "must be >= 0"));
    k.push_back(integer<std::uint32_t>("grid.H", [](RunConfig& c) -> std::uint32_t& { return c.grid.H; }, 1));
    k.push_back(integer<std::uint32_t>("grid.W", [](RunConfig& c) -> std::uint32_t& { return c.grid.W; }, 1));
    k.push_back(number("grid.res", [](RunConfig& c) -> double& { return c.grid.resolution; }, 0.0, true, "must be > 0"));
    k.push_back(integer<std::uint32_t>("render.t_obs", [](RunConfig& c) -> std::uint32_t& { return c.render.t_obs; }, 0));
    k.push_back(integer<std::uint32_t>("render.stride", [](RunConfig& c) -> std::uint32_t& { return c.render.stride; }, 1));
    k.push_back(integer<std::uint32_t>("render.seq_len", [](RunConfig& c) -> std::uint32_t& { return c.render.seq_len; }, 0));
    k.push_back({"metrics.horizons_s", Kind::kNumberList,
                 [](RunConfig& c, const json& v) -> std::string {
                   std::vector<double> hs = v.get<std::vector<double>>();
                   if (hs.empty()) return "must list at least one horizon";
                   for (double h : hs) {
                     if (!(h > 0.0)) return "every horizon must be > 0";
                   }
                   c.metrics.horizons_s = std::move(hs);
                   return "";
                 },
                 [](const RunConfig& c) {
                   std::string s = "[";
                   for (std::size_t i = 0; i < c.metrics.horizons_s.size(); ++i) {
                     s += (i ? ", " : "") + fmt(c.metrics.horizons_s[i]);
                   }
                   return s + "]";
                 }});
    k.push_back(number("metrics.validity_margin", [](RunConfig& c) -> double& { return c.metrics.validity_margin; }, 0.0,
                       false, "must be >= 0"));
    k.push_back(integer<int>("metrics.pca_components", [](RunConfig& c) -> int& { return c.metrics.pca_components; }, 1));
    k.push_back(integer<int>("metrics.realism_eval", [](RunConfig& c) -> int& { return c.metrics.realism_eval; }, 1));
    k.push_back(string_key("paths.map", [](RunConfig& c) -> std::string& { return c.map_path; }));
    k.push_back(string_key("paths.tracklets", [](RunConfig& c) -> std::string& { return c.tracklets_path; }));
    k.push_back(string_key("paths.pool", [](RunConfig& c) -> std::string& { return c.pool_path; }));
    k.push_back(string_key("paths.out", [](RunConfig& c) -> std::string& { return c.out_dir; }));
    k.push_back({"log.level", Kind::kString,
                 [](RunConfig& c, const json& v) -> std::string {
                   const auto s = v.get<std::string>();
                   static const char* levels[] = {"trace", "debug", "info", "warn", "error", "critical", "off"};
                   for (const char* l : levels) {
                     if (s == l) {
                       c.log_level = s;
                       return "";
                     }
                   }
                   return "must be one of trace, debug, info, warn, error, critical, off";
                 },
                 [](const RunConfig& c) { return "\"" + c.log_level + "\""; }});
    return k;
  }();
  return keys;
}

bool kind_matches(Kind kind, const json& v) {
  switch (kind) {
    case Kind::kNumber: return v.is_number() || v.is_null();
    case Kind::kInteger: return v.is_number_integer();
    case Kind::kBool: return v.is_boolean();
    case Kind::kString: return v.is_string();
    case Kind::kNumberList: return v.is_array();
  }
  return false;
}

const char* kind_name(Kind kind) {
  switch (kind) {
    case Kind::kNumber: return "a number";
    case Kind::kInteger: return "an integer";
    case Kind::kBool: return "true or false";
    case Kind::kString: return "a string";
    case Kind::kNumberList: return "a list of numbers";
  }
  return "";
}

void flatten(const json& node, const std::string& prefix, std::vector<std::pair<std::string, json>>& out) {
  if (node.is_object()) {
    for (auto it = node.begin(); it != node.end(); ++it) {
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    }
  } else {
    out.emplace_back(prefix, node);
  }
}

json override_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return json(text);
  }
}

}  // namespace

RunConfig validate_config(const std::string& json_text, const std::vector<std::string>& overrides) {
  std::vector<std::string> problems;
  std::vector<std::pair<std::string, json>> entries;
  if (!json_text.empty()) {
    try {
      const json doc = json::parse(json_text);
      if (!doc.is_object()) {
        problems.push_back("config: top level must be a JSON object");
      } else {
        flatten(doc, "", entries);
      }
    } catch (const json::parse_error& e) {
      problems.push_back(std::string("config: malformed JSON: ") + e.what());
    }
  }
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) {
      problems.push_back("--set " + ov + ": expected key=value");
      continue;
    }
    entries.emplace_back(ov.substr(0, eq), override_value(ov.substr(eq + 1)));
  }

  std::map<std::string, const Key*> by_name;
  for (const Key& k : schema()) by_name[k.name] = &k;

  RunConfig cfg;
  for (const auto& [name, value] : entries) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      problems.push_back(name + ": unknown key");
      continue;
    }
    const Key& key = *it->second;
    if (!kind_matches(key.kind, value)) {
      problems.push_back(name + ": must be " + kind_name(key.kind));
      continue;
    }
    try {
      const std::string p = key.apply(cfg, value);
      if (!p.empty()) problems.push_back(name + ": " + p);
    } catch (const json::exception&) {
      problems.push_back(name + ": must be " + kind_name(key.kind));
    }
  }

  // Cross-field checks.
  if (cfg.sim.dt > 0.0 && cfg.sim.horizon > 0.0) {
    const double ratio = cfg.sim.horizon / cfg.sim.dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-6 * std::max(1.0, ratio)) {
      problems.push_back("sim.horizon: " + fmt(cfg.sim.horizon) + " is not a multiple of sim.dt = " + fmt(cfg.sim.dt));
    }
  }
  if (cfg.render.seq_len != 0 && cfg.render.t_obs >= cfg.render.seq_len) {
    problems.push_back("render.t_obs: must be smaller than render.seq_len");
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return cfg;
}

std::string config_keys_help() {
  const RunConfig defaults;
  std::ostringstream os;
  for (const Key& k : schema()) os << "  " << k.name << " = " << k.show(defaults) << "\n";
  return os.str();
}

}  // namespace trafficforge
