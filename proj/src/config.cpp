#include "mononav/config.hpp"

#include "mononav/depth_io.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <string_view>
#include <utility>
#include <vector>

namespace mononav {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

using Setter = std::function<void(const json&, const std::string&)>;
using Bindings = std::vector<std::pair<std::string_view, Setter>>;

Setter number(double& dst) {
  return [&dst](const json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError("config key " + key + " must be a number");
    dst = v.get<double>();
  };
}

Setter integer(int& dst) {
  return [&dst](const json& v, const std::string& key) {
    if (!v.is_number_integer()) throw ConfigError("config key " + key + " must be an integer");
    dst = v.get<int>();
  };
}

template <typename U>
Setter unsigned_integer(U& dst) {
  return [&dst](const json& v, const std::string& key) {
    if (!v.is_number_unsigned()) throw ConfigError("config key " + key + " must be a non-negative integer");
    dst = v.get<U>();
  };
}

void apply(const json& section, const std::string& prefix, const Bindings& bindings) {
  if (!section.is_object()) {
    throw ConfigError("config key " + (prefix.empty() ? std::string("<root>") : prefix) + " must be an object");
  }
  for (const auto& [key, value] : section.items()) {
    const std::string full = prefix.empty() ? key : prefix + "." + key;
    bool found = false;
    for (const auto& [name, set] : bindings) {
      if (name == key) {
        set(value, full);
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError("unknown config key " + full);
  }
}

Setter section(std::function<Bindings()> make, std::string prefix) {
  return [make = std::move(make), prefix = std::move(prefix)](const json& v, const std::string&) {
    apply(v, prefix, make());
  };
}

}  // namespace

ordered_json config_to_json(const RunConfig& c) {
  ordered_json j;
  j["library"] = {{"speed", c.library.speed},         {"max_yaw_rate", c.library.max_yaw_rate},
                  {"count", c.library.count},         {"horizon", c.library.horizon},
                  {"waypoints", c.library.waypoints}, {"substeps", c.library.substeps}};
  j["clearance"] = c.clearance;
  j["sensor_period"] = c.sensor_period;
  j["replan_period"] = c.replan_period;
  j["warm_start_frames"] = c.warm_start_frames;
  j["max_steps"] = c.max_steps;
  j["goal_radius"] = c.goal_radius;
  j["robot_radius"] = c.robot_radius;
  j["tsdf"] = {{"voxel_size", c.tsdf.voxel_size}, {"truncation", c.tsdf.truncation},
               {"block_size", c.tsdf.block_size}, {"max_weight", c.tsdf.max_weight},
               {"max_depth", c.tsdf.max_depth}};
  j["filter"] = {{"min_weight", c.filter.min_weight}, {"tsdf_band", c.filter.tsdf_band},
                 {"z_min", c.filter.z_min},           {"z_max", c.filter.z_max}};
  j["noise"] = {{"mult_sigma", c.noise.mult_sigma},
                {"bias_sigma", c.noise.bias_sigma},
                {"dropout_p", c.noise.dropout_p}};
  j["camera"] = {{"fx", c.camera.fx}, {"fy", c.camera.fy},       {"cx", c.camera.cx},
                 {"cy", c.camera.cy}, {"width", c.camera.width}, {"height", c.camera.height}};
  j["camera_max_range"] = c.camera_max_range;
  j["fusion_window"] = c.fusion_window;
  j["frame_delay"] = c.frame_delay;
  j["pose_noise_xy"] = c.pose_noise_xy;
  j["pose_noise_yaw"] = c.pose_noise_yaw;
  j["planner"] = {{"index_threshold", c.planner.index_threshold},
                  {"tie_tolerance", c.planner.tie_tolerance}};
  j["seed"] = c.seed;
  return j;
}

void merge_config(RunConfig& c, const json& overlay) {
  const Setter noise_setter = [&c](const json& v, const std::string& key) {
    if (v.is_string()) {
      if (v.get<std::string>() != "monocular") {
        throw ConfigError("config key " + key + " must be an object or \"monocular\"");
      }
      c.noise = NoiseModel::monocular();
      return;
    }
    apply(v, key, {{"mult_sigma", number(c.noise.mult_sigma)},
                   {"bias_sigma", number(c.noise.bias_sigma)},
                   {"dropout_p", number(c.noise.dropout_p)}});
  };

  apply(overlay, "",
        {
            {"library", section([&c] {
                          return Bindings{{"speed", number(c.library.speed)},
                                          {"max_yaw_rate", number(c.library.max_yaw_rate)},
                                          {"count", integer(c.library.count)},
                                          {"horizon", number(c.library.horizon)},
                                          {"waypoints", integer(c.library.waypoints)},
                                          {"substeps", integer(c.library.substeps)}};
                        }, "library")},
            {"clearance", number(c.clearance)},
            {"sensor_period", number(c.sensor_period)},
            {"replan_period", number(c.replan_period)},
            {"warm_start_frames", integer(c.warm_start_frames)},
            {"max_steps", integer(c.max_steps)},
            {"goal_radius", number(c.goal_radius)},
            {"robot_radius", number(c.robot_radius)},
            {"tsdf", section([&c] {
                       return Bindings{{"voxel_size", number(c.tsdf.voxel_size)},
                                       {"truncation", number(c.tsdf.truncation)},
                                       {"block_size", integer(c.tsdf.block_size)},
                                       {"max_weight", number(c.tsdf.max_weight)},
                                       {"max_depth", number(c.tsdf.max_depth)}};
                     }, "tsdf")},
            {"filter", section([&c] {
                         return Bindings{{"min_weight", number(c.filter.min_weight)},
                                         {"tsdf_band", number(c.filter.tsdf_band)},
                                         {"z_min", number(c.filter.z_min)},
                                         {"z_max", number(c.filter.z_max)}};
                       }, "filter")},
            {"noise", noise_setter},
            {"camera", section([&c] {
                         return Bindings{{"fx", number(c.camera.fx)},       {"fy", number(c.camera.fy)},
                                         {"cx", number(c.camera.cx)},       {"cy", number(c.camera.cy)},
                                         {"width", integer(c.camera.width)}, {"height", integer(c.camera.height)}};
                       }, "camera")},
            {"camera_max_range", number(c.camera_max_range)},
            {"fusion_window", integer(c.fusion_window)},
            {"frame_delay", integer(c.frame_delay)},
            {"pose_noise_xy", number(c.pose_noise_xy)},
            {"pose_noise_yaw", number(c.pose_noise_yaw)},
            {"planner", section([&c] {
                          return Bindings{{"index_threshold", unsigned_integer(c.planner.index_threshold)},
                                          {"tie_tolerance", number(c.planner.tie_tolerance)}};
                        }, "planner")},
            {"seed", unsigned_integer(c.seed)},
        });

  try {
    c.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file: " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError("malformed config file " + path.string() + ": " + e.what());
  }
  RunConfig cfg;
  merge_config(cfg, j);
  return cfg;
}

std::optional<std::filesystem::path> env_config_path() {
  const char* v = std::getenv("MONONAV_CONFIG");
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::filesystem::path(v);
}

}  // namespace mononav
