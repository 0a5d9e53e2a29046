#pragma once

#include "mononav/camera.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mononav {

struct Box {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  /// Euclidean distance from p to the box (0 inside).
  double distance(const Vec3& p) const;
  /// Distance from p to the box surface (positive inside and outside).
  double surface_distance(const Vec3& p) const;
};

/// Axis-aligned box world. Positions are ENU meters.
struct Scene {
  std::string name;
  std::vector<Box> boxes;
  Vec3 start_position = Vec3::Zero();
  double start_yaw = 0.0;  // radians
  Vec3 goal = Vec3::Zero();
  double flight_height = 0.4;
  /// Leaving this box counts as a collision. Derived from the content when absent.
  std::optional<Box> arena;

  /// Throws std::invalid_argument on degenerate boxes or a start inside a box.
  void validate() const;
  Box arena_bounds() const;
  Pose start_pose() const;
};

/// Distance from p to the nearest box surface in the scene.
double distance_to_surfaces(const Scene& scene, const Vec3& p);

/// Per-pixel z-depth of the first box hit along each pixel ray from a camera at
/// `camera_pose` (optical frame to world). Hits beyond `max_range` z-depth
/// and rays starting inside a box read 0.
DepthImage raycast_depth(const Scene& scene, const Pose& camera_pose, const Intrinsics& intr,
                         double max_range);

/// True iff a sphere of `radius` at `position` touches any box or reaches the
/// arena boundary. Contact counts.
bool check_collision(const Scene& scene, const Vec3& position, double radius);

nlohmann::json scene_to_json(const Scene& s);
Scene scene_from_json(const nlohmann::json& j);
Scene load_scene(const std::filesystem::path& path);
void save_scene(const std::filesystem::path& path, const Scene& s);

struct BundledScene {
  Scene scene;
  /// False when the default library cannot reach the goal and a self-stop is expected.
  bool goal_reachable = true;
};

/// straight_hall, l_corner_left, l_corner_right, t_intersection, column_room.
const std::vector<BundledScene>& bundled_scenes();
std::optional<Scene> find_bundled_scene(const std::string& name);

}  // namespace mononav
