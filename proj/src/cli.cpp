#include "trafficforge/cli.hpp"

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "trafficforge/bev_render.hpp"
#include "trafficforge/config.hpp"
#include "trafficforge/io.hpp"
#include "trafficforge/metrics.hpp"
#include "trafficforge/sim_engine.hpp"

namespace trafficforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> sets;
  bool pretty = false;
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::shared_ptr<spdlog::logger> log;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file (nested objects or dotted keys)");
  cmd->add_option("--set", f.sets, "Override one config key, e.g. --set sim.dt=0.1 (repeatable)");
  cmd->add_flag("--pretty", f.pretty, "Human-readable report instead of compact JSON");
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw ValidationError(what + " path is empty");
  if (!fs::exists(path)) throw ValidationError(what + " not found: " + path);
}

RunConfig load_config(const CommonFlags& f, std::vector<std::string> extra_sets) {
  std::string text;
  if (!f.config_path.empty()) {
    require_file(f.config_path, "config file");
    text = io::read_text(f.config_path);
  }
  std::vector<std::string> sets = f.sets;
  sets.insert(sets.end(), extra_sets.begin(), extra_sets.end());
  return validate_config(text, sets);
}

void apply_log_level(Context& ctx, const RunConfig& cfg) {
  std::string level = cfg.log_level;
  if (const char* env = std::getenv("TRAFFICFORGE_LOG"); env != nullptr && *env != '\0') level = env;
  ctx.log->set_level(spdlog::level::from_str(level));
}

void emit(Context& ctx, const json& report, bool pretty, const std::string& out_path = "") {
  const std::string text = report.dump(pretty ? 2 : -1) + "\n";
  if (out_path.empty()) {
    ctx.out << text;
  } else {
    io::write_text(out_path, text);
  }
}

template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::shared_ptr<const RoadGraph> load_graph(const std::string& path, const GraphOptions& options) {
  require_file(path, "map file");
  return std::make_shared<const RoadGraph>(build_graph(io::load_map(path), options));
}

// ---------------------------------------------------------------- build-graph

struct BuildGraphArgs {
  CommonFlags common;
  std::string map;
  std::string out;
};

int run_build_graph(Context& ctx, const BuildGraphArgs& a) {
  RunConfig cfg = load_config(a.common, {});
  apply_log_level(ctx, cfg);
  const auto graph = load_graph(a.map, cfg.graph);
  ctx.log->info("built graph with {} nodes and {} edges", graph->nodes().size(), graph->edges().size());
  const std::string text = io::graph_json(*graph);
  if (a.out.empty()) {
    ctx.out << text;
  } else {
    io::write_text(a.out, text);
  }
  return kExitOk;
}

// --------------------------------------------------------------- profile-pool

struct ProfilePoolArgs {
  CommonFlags common;
  std::vector<std::string> tracklets;
  double dt = 0.1;
  std::string out;
};

int run_profile_pool(Context& ctx, const ProfilePoolArgs& a) {
  RunConfig cfg = load_config(a.common, {});
  apply_log_level(ctx, cfg);
  if (!(a.dt > 0.0)) throw ValidationError("--dt must be > 0");
  std::vector<TimedTrajectory> trajs;
  for (const std::string& path : a.tracklets) {
    require_file(path, "tracklet file");
    for (const SceneRecord& rec : io::load_tracklets(path)) {
      for (const Tracklet& tr : rec.tracks) {
        TimedTrajectory t;
        for (const TrackletPose& p : tr.poses) t.push_back({p.t, p.position});
        trajs.push_back(std::move(t));
      }
    }
  }
  PoolBuildResult res = build_profile_pool(trajs, a.dt, cfg.sim.routes.straight_threshold, cfg.sim.onset);
  for (const PoolSkip& s : res.skipped) ctx.log->warn("trajectory {} skipped: {}", s.index, s.reason);
  if (res.pool.empty()) throw ValidationError("no usable trajectories for the profile pool");
  io::write_text(a.out, io::profile_pool_json(res.pool));

  json report{{"profiles", res.pool.profiles().size()}, {"skipped", res.skipped.size()}};
  for (Maneuver m : {Maneuver::kLeft, Maneuver::kRight, Maneuver::kStraight}) {
    report["by_label"][std::string(to_string(m))] = res.pool.partition(m).size();
  }
  emit(ctx, report, a.common.pretty);
  return kExitOk;
}

// ------------------------------------------------------------------- simulate

struct SimulateArgs {
  CommonFlags common;
  std::string map, tracklets, pool, out;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string ego;
};

int run_simulate(Context& ctx, const SimulateArgs& a) {
  std::vector<std::string> extra;
  if (!a.ego.empty()) extra.push_back("sim.ego=\"" + a.ego + "\"");
  RunConfig cfg = load_config(a.common, extra);
  apply_log_level(ctx, cfg);
  cfg.sim.master_seed = a.seed;
  if (a.jobs < 1) throw ValidationError("--jobs must be >= 1");
  require_file(a.map, "map file");
  require_file(a.tracklets, "tracklet file");
  require_file(a.pool, "profile pool");

  const std::string map_text = io::read_text(a.map);
  const auto graph = std::make_shared<const RoadGraph>(build_graph(io::parse_map(map_text), cfg.graph));
  const std::vector<SceneRecord> records = io::load_tracklets(a.tracklets);
  const ProfilePool pool = io::load_profile_pool(a.pool);
  if (std::abs(pool.dt() - cfg.sim.dt) > 1e-12) {
    ctx.log->info("profile dt {} differs from sim dt {}; profiles are indexed by time", pool.dt(), cfg.sim.dt);
  }

  std::set<std::string> ids;
  for (const SceneRecord& r : records) {
    if (!ids.insert(r.scene_id).second) throw ValidationError("duplicate scene_id \"" + r.scene_id + "\"");
  }

  json summary;
  summary["master_seed"] = cfg.sim.master_seed;
  summary["config_digest"] = config_digest(cfg.sim);
  summary["scenes"] = json::array();
  std::vector<Scene> scenes;
  std::vector<SceneFailure> failures;
  for (const SceneRecord& r : records) {
    try {
      Scene s = instantiate_scene(graph, r, cfg.ingest);
      json dropped = json::array();
      for (const DropEntry& d : s.dropped) {
        dropped.push_back({{"agent_id", d.agent_id}, {"reason", d.reason}, {"detail", d.detail}});
      }
      summary["scenes"].push_back({{"scene_id", s.scene_id}, {"agents", s.agents.size()}, {"dropped", dropped}});
      scenes.push_back(std::move(s));
    } catch (const EmptySceneError& e) {
      failures.push_back({r.scene_id, e.what()});
    }
  }
  if (scenes.empty()) throw EmptySceneError("no scene could be instantiated");

  DatasetResult result = run_dataset(scenes, pool, cfg.sim, a.jobs);
  failures.insert(failures.end(), result.failures.begin(), result.failures.end());
  std::sort(failures.begin(), failures.end(), [](const auto& x, const auto& y) { return x.scene_id < y.scene_id; });

  summary["logs"] = json::array();
  for (const SimLog& log : result.logs) summary["logs"].push_back(io::simlog_basename(log));
  summary["failures"] = json::array();
  for (const SceneFailure& f : failures) {
    ctx.log->warn("scene {} failed: {}", f.scene_id, f.message);
    summary["failures"].push_back({{"scene_id", f.scene_id}, {"message", f.message}});
  }

  const fs::path out(a.out);
  io::write_text(out / "map.json", map_text);
  for (const SimLog& log : result.logs) {
    const std::string base = io::simlog_basename(log);
    io::write_text(out / "logs" / (base + ".csv"), io::simlog_csv(log));
    io::write_text(out / "logs" / (base + ".meta.json"), io::simlog_sidecar_json(log));
  }
  io::write_text(out / "summary.json", summary.dump(1) + "\n");

  json report{{"logs", result.logs.size()}, {"scenes", scenes.size()}, {"failures", failures.size()},
              {"out", a.out}};
  emit(ctx, report, a.common.pretty);
  return result.logs.empty() ? kExitRuntime : kExitOk;
}

// --------------------------------------------------------------------- render

struct RenderArgs {
  CommonFlags common;
  std::string logs, map, spec, out;
  std::optional<std::uint32_t> t_obs, stride, seq_len;
  int jobs = 1;
};

int run_render(Context& ctx, const RenderArgs& a) {
  std::vector<std::string> extra;
  if (!a.spec.empty()) {
    json spec;
    try {
      spec = json::parse(a.spec);
    } catch (const json::parse_error& e) {
      throw ValidationError(std::string("--spec: malformed JSON: ") + e.what());
    }
    if (!spec.is_object()) throw ValidationError("--spec: expected an object like {\"H\":256,\"W\":256,\"res\":0.5}");
    for (auto it = spec.begin(); it != spec.end(); ++it) extra.push_back("grid." + it.key() + "=" + it.value().dump());
  }
  if (a.t_obs) extra.push_back("render.t_obs=" + std::to_string(*a.t_obs));
  if (a.stride) extra.push_back("render.stride=" + std::to_string(*a.stride));
  if (a.seq_len) extra.push_back("render.seq_len=" + std::to_string(*a.seq_len));
  RunConfig cfg = load_config(a.common, extra);
  apply_log_level(ctx, cfg);
  if (a.jobs < 1) throw ValidationError("--jobs must be >= 1");

  std::string map_path = a.map;
  if (map_path.empty()) {
    for (const fs::path& cand : {fs::path(a.logs) / "map.json", fs::path(a.logs).parent_path() / "map.json"}) {
      if (fs::exists(cand)) {
        map_path = cand.string();
        break;
      }
    }
    if (map_path.empty()) throw ValidationError("no --map given and no map.json next to " + a.logs);
  }
  const auto graph = load_graph(map_path, cfg.graph);
  const std::vector<SimLog> logs = io::load_simlogs(a.logs);
  if (logs.empty()) throw ValidationError("no simulation logs in " + a.logs);
  for (const SimLog& log : logs) {
    const std::uint32_t frames = static_cast<std::uint32_t>(log.steps) + 1;
    const std::uint32_t len = cfg.render.seq_len == 0 ? frames : cfg.render.seq_len;
    if (cfg.render.t_obs >= len || len > frames) {
      throw ValidationError("render.t_obs/seq_len do not fit log " + io::simlog_basename(log) + " with " +
                            std::to_string(frames) + " frames");
    }
  }

  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw IoError("cannot create " + a.out + ": " + ec.message());
  std::vector<std::vector<fs::path>> written(logs.size());
  std::vector<int> collisions(logs.size(), 0);
  parallel_for(logs.size(), a.jobs, [&](std::size_t i) {
    const GridSpec spec = default_grid_for(logs[i], cfg.grid.H, cfg.grid.W, cfg.grid.resolution);
    const ContextMap context = render_context(*graph, spec);
    for (const GridSample& s : build_samples(logs[i], context, cfg.render)) {
      for (const AgentMaps& f : s.frames) collisions[i] += f.collisions;
      written[i].push_back(fs::path(a.out) / sample_file_name(s));
      write_grid_sample(s, written[i].back());
    }
  });

  json files = json::array();
  int total_collisions = 0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    for (const fs::path& p : written[i]) files.push_back(p.filename().string());
    total_collisions += collisions[i];
  }
  json index{{"grid", {{"H", cfg.grid.H}, {"W", cfg.grid.W}, {"res", cfg.grid.resolution}}},
             {"t_obs", cfg.render.t_obs},
             {"stride", cfg.render.stride},
             {"files", files},
             {"cell_collisions", total_collisions}};
  io::write_text(fs::path(a.out) / "index.json", index.dump(1) + "\n");
  emit(ctx, {{"samples", files.size()}, {"cell_collisions", total_collisions}, {"out", a.out}}, a.common.pretty);
  return kExitOk;
}

// -------------------------------------------------------------------- metrics

struct MetricsArgs {
  CommonFlags common;
  std::string logs, predictions, map, real, out;
  std::optional<std::uint64_t> seed;
};

std::vector<Trajectory2D> log_trajectories(const std::vector<SimLog>& logs) {
  std::vector<Trajectory2D> out;
  for (const SimLog& log : logs) {
    for (const AgentLog& a : log.agents) {
      if (a.is_static || a.replayed || a.states.size() < 3) continue;
      Trajectory2D t{log.dt, {}};
      for (const VehicleState& s : a.states) t.points.push_back(s.position);
      out.push_back(std::move(t));
    }
  }
  return out;
}

std::vector<Trajectory2D> tracklet_trajectories(const std::vector<SceneRecord>& records, double dt) {
  std::vector<Trajectory2D> out;
  for (const SceneRecord& r : records) {
    for (const Tracklet& tr : r.tracks) {
      if (tr.poses.size() < 2) continue;
      Trajectory2D t{dt, {}};
      const double t0 = tr.poses.front().t;
      for (std::size_t k = 0;; ++k) {
        const double tk = t0 + static_cast<double>(k) * dt;
        if (tk > tr.poses.back().t + 1e-9) break;
        t.points.push_back(interpolate_pose(tr, std::min(tk, tr.poses.back().t)).position);
      }
      if (t.points.size() >= 3) out.push_back(std::move(t));
    }
  }
  return out;
}

json summary_json(const Summary& s) { return {{"mean", s.mean}, {"median", s.median}}; }

std::string horizon_key(double h) { return io::format_double(h) + "s"; }

void print_pretty_metrics(std::ostream& os, const json& r) {
  if (r.contains("predictions")) {
    os << fmt::format("{:>8} {:>10} {:>10} {:>10} {:>6}\n", "horizon", "minADE", "minFDE", "NLL", "n");
    for (const auto& [h, v] : r["predictions"]["horizons"].items()) {
      auto num = [&](const char* k) {
        return v.contains(k) && v[k].is_number() ? fmt::format("{:.4f}", v[k].get<double>()) : std::string("-");
      };
      os << fmt::format("{:>8} {:>10} {:>10} {:>10} {:>6}\n", h, num("min_ade"), num("min_fde"), num("nll"),
                        v["count"].get<int>());
    }
    if (r["predictions"].contains("validity")) {
      os << fmt::format("validity {:.4f}\n", r["predictions"]["validity"].get<double>());
    }
  }
  if (r.contains("diversity")) {
    const json& d = r["diversity"];
    os << fmt::format("{:>16} {:>10} {:>10}\n", "diversity", "mean", "median");
    for (const char* k : {"y_wasserstein", "xdd_wasserstein"}) {
      os << fmt::format("{:>16} {:>10.4f} {:>10.4f}\n", k, d[k]["mean"].get<double>(), d[k]["median"].get<double>());
    }
    os << fmt::format("trajectories {} (skipped {})\n", d["count"].get<int>(), d["skipped"].get<int>());
  }
  if (r.contains("log_validity")) os << fmt::format("log validity {:.4f}\n", r["log_validity"].get<double>());
  if (r.contains("realism")) {
    os << fmt::format("realism loglik real {:.4f} sim {:.4f}\n", r["realism"]["loglik_real"].get<double>(),
                      r["realism"]["loglik_sim"].get<double>());
  }
}

int run_metrics(Context& ctx, const MetricsArgs& a) {
  RunConfig cfg = load_config(a.common, {});
  apply_log_level(ctx, cfg);
  if (a.logs.empty() && a.predictions.empty()) throw ValidationError("metrics needs --logs and/or --predictions");
  if (!a.real.empty() && !a.seed) throw ValidationError("--real (realism check) is randomized and requires --seed");
  if (!a.real.empty() && a.logs.empty()) throw ValidationError("--real needs --logs to compare against");

  std::shared_ptr<const RoadGraph> graph;
  if (!a.map.empty()) graph = load_graph(a.map, cfg.graph);

  json report;
  if (!a.predictions.empty()) {
    require_file(a.predictions, "prediction file");
    const auto sets = io::parse_predictions(io::read_text(a.predictions));
    if (sets.empty()) throw ValidationError(a.predictions + ": no predictions");
    json horizons = json::object();
    for (double h : cfg.metrics.horizons_s) {
      double ade_sum = 0.0, fde_sum = 0.0, nll_sum = 0.0;
      int count = 0, nll_count = 0;
      for (const PredictionSet& ps : sets) {
        const int steps = static_cast<int>(std::llround(h / ps.ground_truth.dt));
        if (steps < 1 || static_cast<std::size_t>(steps) > ps.ground_truth.points.size()) continue;
        ade_sum += min_over_samples(ps, DisplacementMetric::kAde, steps);
        fde_sum += min_over_samples(ps, DisplacementMetric::kFde, steps);
        ++count;
        if (ps.samples.size() >= 2) {
          nll_sum += nll(ps, steps);
          ++nll_count;
        }
      }
      json entry{{"count", count}};
      entry["min_ade"] = count ? json(ade_sum / count) : json(nullptr);
      entry["min_fde"] = count ? json(fde_sum / count) : json(nullptr);
      entry["nll"] = nll_count ? json(nll_sum / nll_count) : json(nullptr);
      horizons[horizon_key(h)] = entry;
    }
    report["predictions"] = {{"sets", sets.size()}, {"horizons", horizons}};
    if (graph) {
      std::vector<Trajectory2D> all;
      for (const PredictionSet& ps : sets) all.insert(all.end(), ps.samples.begin(), ps.samples.end());
      report["predictions"]["validity"] = validity_ratio(all, *graph, cfg.metrics.validity_margin);
    }
  }

  if (!a.logs.empty()) {
    fs::path dir(a.logs);
    if (fs::is_directory(dir / "logs")) dir /= "logs";
    const std::vector<SimLog> logs = io::load_simlogs(dir);
    if (logs.empty()) throw ValidationError("no simulation logs in " + a.logs);
    const std::vector<Trajectory2D> trajs = log_trajectories(logs);
    if (trajs.empty()) throw ValidationError("logs in " + a.logs + " contain no moving agents");
    const DiversityReport d = diversity_report(trajs);
    report["diversity"] = {{"y_wasserstein", summary_json(d.y_wasserstein)},
                           {"xdd_wasserstein", summary_json(d.xdd_wasserstein)},
                           {"count", d.y_values.size()},
                           {"skipped", d.skipped}};
    if (graph) report["log_validity"] = validity_ratio(trajs, *graph, cfg.metrics.validity_margin);
    if (!a.real.empty()) {
      require_file(a.real, "real tracklet file");
      const auto real = tracklet_trajectories(io::load_tracklets(a.real), logs.front().dt);
      RealismOptions ro;
      ro.n_components = cfg.metrics.pca_components;
      ro.n_eval = cfg.metrics.realism_eval;
      const RealismResult rr = pca_kde_realism(real, trajs, *a.seed, ro);
      report["realism"] = {{"loglik_real", rr.loglik_real}, {"loglik_sim", rr.loglik_sim}};
    }
  }

  if (a.common.pretty && a.out.empty()) {
    print_pretty_metrics(ctx.out, report);
  } else {
    emit(ctx, report, a.common.pretty, a.out);
  }
  return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  Context ctx{out, err, std::make_shared<spdlog::logger>("trafficforge", sink)};
  ctx.log->set_pattern("[%l] %v");
  ctx.log->set_level(spdlog::level::warn);

  CLI::App app{"Deterministic multi-agent driving-scenario simulator"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  app.footer("Config keys (set via --config or --set key=value):\n" + config_keys_help() +
             "\nExit codes: 0 success, 1 validation or usage error, 2 runtime error.\n"
             "TRAFFICFORGE_LOG sets verbosity (trace, debug, info, warn, error, off).");

  BuildGraphArgs bg;
  auto* cmd_bg = app.add_subcommand("build-graph", "Build the lane graph from a centerline map and print it as JSON");
  cmd_bg->add_option("--map", bg.map, "Centerline map JSON")->required();
  cmd_bg->add_option("--out", bg.out, "Output file (stdout when omitted)");
  add_common(cmd_bg, bg.common);

  ProfilePoolArgs pp;
  auto* cmd_pp = app.add_subcommand("profile-pool", "Mine reference velocity profiles from tracklet files");
  cmd_pp->add_option("--tracklets", pp.tracklets, "Tracklet JSON files")->required();
  cmd_pp->add_option("--dt", pp.dt, "Profile sample spacing in seconds")->capture_default_str();
  cmd_pp->add_option("--out", pp.out, "Output profile pool JSON")->required();
  add_common(cmd_pp, pp.common);

  SimulateArgs sim;
  auto* cmd_sim = app.add_subcommand("simulate", "Generate diverse simulated trajectories for every scene");
  cmd_sim->add_option("--map", sim.map, "Centerline map JSON")->required();
  cmd_sim->add_option("--tracklets", sim.tracklets, "Tracklet JSON (one scene or an array of scenes)")->required();
  cmd_sim->add_option("--pool", sim.pool, "Profile pool JSON")->required();
  cmd_sim->add_option("--out", sim.out, "Output directory")->required();
  cmd_sim->add_option("--seed", sim.seed, "Master seed")->required();
  cmd_sim->add_option("--jobs", sim.jobs, "Worker threads over scenes")->capture_default_str();
  cmd_sim->add_option("--ego", sim.ego, "Ego handling")->check(CLI::IsMember({"simulate", "replay"}));
  add_common(cmd_sim, sim.common);

  RenderArgs rd;
  auto* cmd_rd = app.add_subcommand("render", "Rasterize simulation logs into grid-map samples");
  cmd_rd->add_option("--logs", rd.logs, "Directory with <name>.csv and <name>.meta.json logs")->required();
  cmd_rd->add_option("--map", rd.map, "Centerline map JSON (default: map.json next to the logs)");
  cmd_rd->add_option("--spec", rd.spec, "Grid as JSON, e.g. {\"H\":256,\"W\":256,\"res\":0.5}");
  cmd_rd->add_option("--t-obs", rd.t_obs, "Observed frames per sample");
  cmd_rd->add_option("--stride", rd.stride, "Steps between sample start frames");
  cmd_rd->add_option("--seq-len", rd.seq_len, "Frames per sample (0 = whole log)");
  cmd_rd->add_option("--out", rd.out, "Output directory")->required();
  cmd_rd->add_option("--jobs", rd.jobs, "Worker threads over logs")->capture_default_str();
  add_common(cmd_rd, rd.common);

  MetricsArgs mt;
  std::uint64_t mt_seed = 0;
  auto* cmd_mt = app.add_subcommand("metrics", "Evaluate predictions and simulated datasets");
  cmd_mt->add_option("--logs", mt.logs, "Simulation output or log directory (diversity report)");
  cmd_mt->add_option("--predictions", mt.predictions, "Prediction JSON-lines file (ADE/FDE/NLL)");
  cmd_mt->add_option("--map", mt.map, "Centerline map JSON for road validity");
  cmd_mt->add_option("--real", mt.real, "Real tracklet JSON for the PCA+KDE realism check");
  auto* seed_opt = cmd_mt->add_option("--seed", mt_seed, "Seed for the realism check sampling");
  cmd_mt->add_option("--out", mt.out, "Report file (stdout when omitted)");
  add_common(cmd_mt, mt.common);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    err << "run with --help for usage\n";
    return kExitValidation;
  }
  if (seed_opt->count() > 0) mt.seed = mt_seed;

  try {
    if (cmd_bg->parsed()) return run_build_graph(ctx, bg);
    if (cmd_pp->parsed()) return run_profile_pool(ctx, pp);
    if (cmd_sim->parsed()) return run_simulate(ctx, sim);
    if (cmd_rd->parsed()) return run_render(ctx, rd);
    if (cmd_mt->parsed()) return run_metrics(ctx, mt);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace trafficforge
