#include "mononav/config.hpp"
#include "mononav/depth_io.hpp"
#include "mononav/eval.hpp"
#include "mononav/primitives.hpp"
#include "mononav/scene.hpp"
#include "mononav/simulator.hpp"
#include "mononav/tsdf.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace mononav;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << text;
  if (!os) throw IoError("write failed: " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::vector<Scene> resolve_scenes(const std::vector<std::string>& names) {
  std::vector<Scene> out;
  for (const std::string& name : names) {
    if (name == "all") {
      for (const BundledScene& b : bundled_scenes()) out.push_back(b.scene);
    } else if (auto s = find_bundled_scene(name)) {
      out.push_back(*s);
    } else {
      out.push_back(load_scene(name));
    }
  }
  return out;
}

// Flags that override a config value.
struct ConfigFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> noise_sigma;
  std::optional<std::string> noise_preset;
  std::optional<double> clearance;
  std::optional<int> max_steps;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file (default: $MONONAV_CONFIG)");
    cmd->add_option("--seed", seed, "Master seed");
    cmd->add_option("--noise-sigma", noise_sigma, "Per-pixel relative depth noise std");
    cmd->add_option("--noise", noise_preset, "Noise preset")->check(CLI::IsMember({"none", "monocular"}));
    cmd->add_option("--clearance", clearance, "Planner clearance in meters");
    cmd->add_option("--max-steps", max_steps, "Planning-cycle budget per episode");
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_path.empty()) {
      cfg = load_config(config_path);
    } else if (auto env = env_config_path()) {
      cfg = load_config(*env);
    }
    nlohmann::json overlay = nlohmann::json::object();
    if (noise_preset) overlay["noise"] = *noise_preset == "monocular" ? nlohmann::json("monocular")
                                                                      : nlohmann::json::object({{"mult_sigma", 0.0},
                                                                                                {"bias_sigma", 0.0},
                                                                                                {"dropout_p", 0.0}});
    merge_config(cfg, overlay);
    overlay = nlohmann::json::object();
    if (seed) overlay["seed"] = *seed;
    if (noise_sigma) overlay["noise"] = {{"mult_sigma", *noise_sigma}};
    if (clearance) overlay["clearance"] = *clearance;
    if (max_steps) overlay["max_steps"] = *max_steps;
    merge_config(cfg, overlay);
    return cfg;
  }
};

int cmd_gen_primitives(const LibraryParams& params, const std::string& out) {
  const PrimitiveLibrary lib = generate_library(params);
  save_library(out, lib);
  std::cout << fmt::format("wrote {} primitives to {}\n", lib.size(), out);
  return 0;
}

struct SimFlags {
  std::vector<std::string> scenes{"straight_hall"};
  int trials = 1;
  int workers = 1;
  std::string out;
  bool ply = false;
  bool save_map = false;
};

int cmd_sim(const SimFlags& f, const ConfigFlags& cf) {
  const RunConfig cfg = cf.resolve();
  const std::vector<Scene> scenes = resolve_scenes(f.scenes);
  const fs::path root(f.out);
  ensure_dir(root);
  write_text(root / "config.json", config_to_json(cfg).dump(2) + "\n");

  std::vector<VoxelBlockGrid> maps;
  const bool want_maps = f.ply || f.save_map;
  const BatchResult r = batch_evaluate(scenes, cfg, f.trials, f.workers, want_maps ? &maps : nullptr);

  nlohmann::ordered_json episodes = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < r.episodes.size(); ++i) {
    const RunLog& log = r.episodes[i];
    const int trial = static_cast<int>(i % static_cast<std::size_t>(f.trials));
    const fs::path dir = root / fmt::format("{}_{:03d}", log.scene, trial);
    ensure_dir(dir);
    RunConfig episode_cfg = cfg;
    episode_cfg.seed = log.seed;
    write_text(dir / "config.json", config_to_json(episode_cfg).dump(2) + "\n");
    write_text(dir / "runlog.csv", runlog_csv(log));
    write_text(dir / "summary.json", runlog_summary(log).dump(2) + "\n");
    if (f.ply) export_pointcloud(maps[i], cfg.filter, dir / "map.ply");
    if (f.save_map) maps[i].save(dir / "map.mnvg");

    nlohmann::ordered_json e;
    e["run"] = dir.filename().string();
    e["scene"] = log.scene;
    e["seed"] = log.seed;
    e["outcome"] = to_string(log.outcome);
    e["goal_completion"] = log.goal_completion();
    episodes.push_back(std::move(e));
  }
  nlohmann::ordered_json summary = batch_summary_json(r);
  summary["episodes"] = std::move(episodes);
  write_text(root / "summary.json", summary.dump(2) + "\n");
  std::cout << format_batch_table(r);
  return 0;
}

Intrinsics load_intrinsics(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open intrinsics file: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
    Intrinsics intr{j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(),
                    j.at("cy").get<double>(), j.at("width").get<int>(),  j.at("height").get<int>()};
    intr.validate();
    return intr;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed intrinsics file " + path.string() + ": " + e.what());
  }
}

DepthImage read_depth(const fs::path& path, const std::optional<Intrinsics>& intr) {
  if (path.extension() == ".png") {
    if (!intr) throw IoError("reading " + path.string() + " needs --intrinsics");
    return read_depth_png(path, *intr);
  }
  return read_depth_mndp(path);
}

std::vector<fs::path> depth_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".mndp" || ext == ".png")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

int cmd_eval_depth(const std::string& gt, const std::string& est, const std::string& intrinsics,
                   const std::string& format) {
  std::optional<Intrinsics> intr;
  if (!intrinsics.empty()) intr = load_intrinsics(intrinsics);

  std::vector<std::pair<fs::path, fs::path>> pairs;
  if (fs::is_directory(gt) != fs::is_directory(est)) {
    throw IoError("--gt and --est must both be files or both be directories");
  }
  if (fs::is_directory(gt)) {
    for (const fs::path& g : depth_files(gt)) {
      const fs::path e = fs::path(est) / g.filename();
      if (!fs::exists(e)) throw IoError("no estimate for " + g.filename().string() + " in " + est);
      pairs.emplace_back(g, e);
    }
    if (pairs.empty()) throw IoError("no depth frames in " + gt);
  } else {
    pairs.emplace_back(gt, est);
  }

  std::vector<std::pair<DepthImage, DepthImage>> frames;
  for (const auto& [g, e] : pairs) frames.emplace_back(read_depth(g, intr), read_depth(e, intr));
  const SequenceResult r = evaluate_sequence(frames);
  if (format == "json") {
    nlohmann::ordered_json j = format_report_json(r);
    j["hardware_reference"] = format_report_json(reference_hardware_row());
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << format_report_text(r, "result");
    std::cout << format_report_text(reference_hardware_row(), "reference");
  }
  return 0;
}

int cmd_export(const std::string& map_path, const std::vector<std::string>& scene_names,
               const ConfigFlags& cf, const std::string& out) {
  const RunConfig cfg = cf.resolve();
  VoxelBlockGrid grid(cfg.tsdf);
  if (!map_path.empty()) {
    grid = VoxelBlockGrid::load(map_path);
  } else {
    const std::vector<Scene> scenes = resolve_scenes(scene_names);
    if (scenes.size() != 1) throw std::invalid_argument("export replays exactly one scene");
    run_episode(scenes.front(), cfg, &grid);
  }
  const std::size_t n = export_pointcloud(grid, cfg.filter, out);
  std::cout << fmt::format("wrote {} vertices to {}\n", n, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monocular-style mapping and motion-primitive navigation in simulated scenes"};
  app.require_subcommand(1);

  LibraryParams lib;
  std::string lib_out = "primitives.json";
  auto* gen = app.add_subcommand("gen-primitives", "Generate a motion primitive library");
  gen->add_option("--speed", lib.speed, "Forward speed (m/s)")->capture_default_str();
  gen->add_option("--horizon", lib.horizon, "Primitive duration (s)")->capture_default_str();
  gen->add_option("--max-yaw-rate", lib.max_yaw_rate, "Largest yaw amplitude (rad/s)")->capture_default_str();
  gen->add_option("--count", lib.count, "Number of primitives")->capture_default_str();
  gen->add_option("--waypoints", lib.waypoints, "Waypoints per primitive")->capture_default_str();
  gen->add_option("--out", lib_out, "Output JSON")->capture_default_str();

  SimFlags sim_flags;
  ConfigFlags sim_cfg;
  auto* sim = app.add_subcommand("sim", "Run closed-loop episodes");
  sim->add_option("--scene", sim_flags.scenes, "Bundled scene name, 'all', or scene JSON path (repeatable)")
      ->capture_default_str();
  sim->add_option("--trials", sim_flags.trials, "Episodes per scene")->check(CLI::PositiveNumber)->capture_default_str();
  sim->add_option("--workers", sim_flags.workers, "Parallel episodes")->check(CLI::PositiveNumber)->capture_default_str();
  sim->add_option("--out", sim_flags.out, "Output directory")->required();
  sim->add_flag("--ply", sim_flags.ply, "Write each final map as PLY");
  sim->add_flag("--save-map", sim_flags.save_map, "Write each final map in binary form");
  sim_cfg.add_to(sim);

  std::string gt, est, intrinsics, format = "text";
  auto* ev = app.add_subcommand("eval-depth", "Depth error metrics against ground truth");
  ev->add_option("--gt", gt, "Ground-truth depth file or directory")->required();
  ev->add_option("--est", est, "Estimated depth file or directory")->required();
  ev->add_option("--intrinsics", intrinsics, "Intrinsics JSON (needed for PNG depth)");
  ev->add_option("--format", format, "Report format")->check(CLI::IsMember({"text", "json"}))->capture_default_str();

  std::string map_path, export_out;
  std::vector<std::string> export_scenes;
  ConfigFlags export_cfg;
  auto* ex = app.add_subcommand("export", "Write occupied voxels of a map as PLY");
  auto* map_opt = ex->add_option("--map", map_path, "Binary map file");
  auto* scene_opt = ex->add_option("--scene", export_scenes, "Scene to replay");
  map_opt->excludes(scene_opt);
  ex->add_option("--out", export_out, "Output PLY")->required();
  export_cfg.add_to(ex);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_primitives(lib, lib_out);
    if (sim->parsed()) return cmd_sim(sim_flags, sim_cfg);
    if (ev->parsed()) return cmd_eval_depth(gt, est, intrinsics, format);
    if (ex->parsed()) {
      if (map_path.empty() && export_scenes.empty()) throw std::invalid_argument("export needs --map or --scene");
      return cmd_export(map_path, export_scenes, export_cfg, export_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
