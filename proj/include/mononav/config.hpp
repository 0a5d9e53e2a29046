#pragma once

#include "mononav/simulator.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>

namespace mononav {

/// Bad configuration. The message names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Full effective configuration, every key present.
nlohmann::ordered_json config_to_json(const RunConfig& cfg);

/// Overlays the keys present in `overlay` onto `cfg`. Nested sections
/// (library, tsdf, filter, noise, camera, planner) merge key by key.
/// "noise": "monocular" selects NoiseModel::monocular(). Unknown keys and
/// type mismatches throw ConfigError; the result is validated.
void merge_config(RunConfig& cfg, const nlohmann::json& overlay);

/// Defaults overlaid with the JSON file at `path`.
RunConfig load_config(const std::filesystem::path& path);

/// Value of MONONAV_CONFIG, if set and non-empty.
std::optional<std::filesystem::path> env_config_path();

}  // namespace mononav
