#include "mononav/scene.hpp"

#include "mononav/depth_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace mononav {

using nlohmann::json;

double Box::distance(const Vec3& p) const {
  const Vec3 d = (min - p).cwiseMax(p - max).cwiseMax(Vec3::Zero());
  return d.norm();
}

double Box::surface_distance(const Vec3& p) const {
  if (!contains(p)) return distance(p);
  const Vec3 in = (p - min).cwiseMin(max - p);
  return in.minCoeff();
}

void Scene::validate() const {
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const Box& b = boxes[i];
    if (!is_finite(b.min) || !is_finite(b.max) || !(b.min.array() < b.max.array()).all()) {
      throw std::invalid_argument("scene box " + std::to_string(i) + " must have min < max");
    }
    if (b.contains(start_position)) {
      throw std::invalid_argument("scene start position lies inside box " + std::to_string(i));
    }
  }
  if (!is_finite(start_position) || !is_finite(goal) || !std::isfinite(start_yaw)) {
    throw std::invalid_argument("scene start and goal must be finite");
  }
  if (!(flight_height > 0.0)) throw std::invalid_argument("scene flight_height must be positive");
  if (arena && !(arena->min.array() < arena->max.array()).all()) {
    throw std::invalid_argument("scene arena must have min < max");
  }
}

Box Scene::arena_bounds() const {
  if (arena) return *arena;
  Box b{start_position, start_position};
  auto grow = [&](const Vec3& p) {
    b.min = b.min.cwiseMin(p);
    b.max = b.max.cwiseMax(p);
  };
  grow(goal);
  for (const Box& box : boxes) {
    grow(box.min);
    grow(box.max);
  }
  b.min -= Vec3(0.5, 0.5, 0.0);
  b.max += Vec3(0.5, 0.5, 0.0);
  b.min.z() = std::min(b.min.z(), 0.0) - 1.0;
  b.max.z() = std::max(b.max.z(), flight_height) + 1.0;
  return b;
}

Pose Scene::start_pose() const {
  return Pose::from_yaw(start_yaw, Vec3(start_position.x(), start_position.y(), flight_height));
}

double distance_to_surfaces(const Scene& scene, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const Box& b : scene.boxes) best = std::min(best, b.surface_distance(p));
  return best;
}

namespace {

// Entry parameter of the ray o + t*d into box b; nullopt on a miss or when
// the origin is inside the box.
std::optional<double> slab_entry(const Box& b, const Vec3& o, const Vec3& d) {
  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < b.min[a] || o[a] > b.max[a]) return std::nullopt;
      continue;
    }
    double t1 = (b.min[a] - o[a]) / d[a];
    double t2 = (b.max[a] - o[a]) / d[a];
    if (t1 > t2) std::swap(t1, t2);
    t_enter = std::max(t_enter, t1);
    t_exit = std::min(t_exit, t2);
  }
  if (t_enter > t_exit || t_enter < 0.0) return std::nullopt;
  return t_enter;
}

}  // namespace

DepthImage raycast_depth(const Scene& scene, const Pose& camera_pose, const Intrinsics& intr,
                         double max_range) {
  DepthImage img(intr, 0.0f);
  const Vec3& origin = camera_pose.translation();
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      // Unit optical-z component, so the hit parameter is the z-depth.
      const Vec3 dir = camera_pose.rotate(Vec3((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0));
      double best = std::numeric_limits<double>::infinity();
      for (const Box& b : scene.boxes) {
        if (const auto t = slab_entry(b, origin, dir); t && *t < best) best = *t;
      }
      if (best <= max_range) img.at(u, v) = static_cast<float>(best);
    }
  }
  return img;
}

bool check_collision(const Scene& scene, const Vec3& position, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("robot radius must be positive");
  for (const Box& b : scene.boxes) {
    if (b.distance(position) <= radius) return true;
  }
  const Box arena = scene.arena_bounds();
  return ((position.array() - radius) <= arena.min.array()).any() ||
         ((position.array() + radius) >= arena.max.array()).any();
}

namespace {

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("scene." + key + " must be [x,y,z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json box_json(const Box& b) { return json{{"min", vec_json(b.min)}, {"max", vec_json(b.max)}}; }

Box box_from(const json& j, const std::string& key) {
  return {vec_from(j.at("min"), key + ".min"), vec_from(j.at("max"), key + ".max")};
}

}  // namespace

json scene_to_json(const Scene& s) {
  json boxes = json::array();
  for (const Box& b : s.boxes) boxes.push_back(box_json(b));
  json j{{"name", s.name},
         {"boxes", boxes},
         {"start", {{"position", vec_json(s.start_position)}, {"yaw_deg", rad_to_deg(s.start_yaw)}}},
         {"goal", vec_json(s.goal)},
         {"flight_height", s.flight_height}};
  if (s.arena) j["arena"] = box_json(*s.arena);
  return j;
}

Scene scene_from_json(const json& j) {
  Scene s;
  s.name = j.value("name", std::string{});
  for (std::size_t i = 0; i < j.at("boxes").size(); ++i) {
    s.boxes.push_back(box_from(j.at("boxes")[i], "boxes[" + std::to_string(i) + "]"));
  }
  const json& start = j.at("start");
  s.start_position = vec_from(start.at("position"), "start.position");
  s.start_yaw = deg_to_rad(start.value("yaw_deg", 0.0));
  s.goal = vec_from(j.at("goal"), "goal");
  s.flight_height = j.value("flight_height", 0.4);
  if (j.contains("arena")) s.arena = box_from(j.at("arena"), "arena");
  s.validate();
  return s;
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open scene file: " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw IoError("malformed scene file " + path.string() + ": " + e.what());
  }
  Scene s = scene_from_json(j);
  if (s.name.empty()) s.name = path.stem().string();
  return s;
}

void save_scene(const std::filesystem::path& path, const Scene& s) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << scene_to_json(s).dump(2) << '\n';
}

namespace {

constexpr double kWallHeight = 2.0;

// Wall slab spanning [x0, x1] x [y0, y1] on the floor.
Box wall(double x0, double y0, double x1, double y1) {
  return {Vec3(std::min(x0, x1), std::min(y0, y1), 0.0),
          Vec3(std::max(x0, x1), std::max(y0, y1), kWallHeight)};
}

Box column(double x, double y, double half = 0.2) { return wall(x - half, y - half, x + half, y + half); }

Scene base(const std::string& name, const Vec3& goal) {
  Scene s;
  s.name = name;
  s.start_position = Vec3(-1.5, 0.0, 0.4);
  s.start_yaw = 0.0;
  s.goal = goal;
  s.flight_height = 0.4;
  return s;
}

Scene straight_hall() {
  Scene s = base("straight_hall", Vec3(8.0, 0.0, 0.4));
  s.boxes = {wall(-3.2, -1.45, 12.2, -1.25), wall(-3.2, 1.25, 12.2, 1.45),
             wall(-3.2, -1.25, -3.0, 1.25), wall(12.0, -1.25, 12.2, 1.25)};
  return s;
}

Scene mirror_y(Scene s, const std::string& name) {
  s.name = name;
  for (Box& b : s.boxes) {
    const double lo = -b.max.y();
    const double hi = -b.min.y();
    b.min.y() = lo;
    b.max.y() = hi;
  }
  s.goal.y() = -s.goal.y();
  s.start_position.y() = -s.start_position.y();
  s.start_yaw = -s.start_yaw;
  return s;
}

Scene l_corner_left() {
  // The hall ends 3 m past the start of planning and turns left into a 3 m wide branch.
  Scene s = base("l_corner_left", Vec3(1.5, 6.5, 0.4));
  s.boxes = {
      wall(-3.2, -1.45, 3.2, -1.25),  // outer wall of the main run
      wall(3.0, -1.25, 3.2, 8.2),     // outer wall of the branch
      wall(-3.2, 1.25, 0.0, 1.45),    // inner wall of the main run
      wall(-0.2, 1.45, 0.0, 8.2),     // inner wall of the branch
      wall(-3.2, -1.25, -3.0, 1.25),  // back
      wall(0.0, 8.0, 3.0, 8.2),       // branch end
  };
  return s;
}

Scene t_intersection() {
  // The goal sits behind the far wall of the junction.
  Scene s = base("t_intersection", Vec3(10.0, 0.0, 0.4));
  s.boxes = {
      wall(-3.2, -1.45, 3.75, -1.25), wall(-3.2, 1.25, 3.75, 1.45),  // stem
      wall(3.55, 1.45, 3.75, 6.2),    wall(3.55, -6.2, 3.75, -1.45),  // junction near side
      wall(6.25, -6.2, 6.45, 6.2),                                    // junction far side
      wall(3.75, 6.0, 6.25, 6.2),     wall(3.75, -6.2, 6.25, -6.0),   // branch ends
      wall(-3.2, -1.25, -3.0, 1.25),                                  // back
  };
  return s;
}

Scene column_room() {
  Scene s = base("column_room", Vec3(8.5, 1.0, 0.4));
  s.boxes = {
      wall(-3.2, -4.2, 10.7, -4.0), wall(-3.2, 4.0, 10.7, 4.2),  // long walls
      wall(-3.2, -4.0, -3.0, 4.0),  wall(10.5, -4.0, 10.7, 4.0),  // short walls
      column(2.0, -1.0), column(2.5, 2.2), column(4.5, -0.4),
      column(5.5, -2.0), column(7.0, 2.4), column(7.0, -0.8),
  };
  return s;
}

}  // namespace

const std::vector<BundledScene>& bundled_scenes() {
  static const std::vector<BundledScene> scenes = [] {
    const Scene left = l_corner_left();
    return std::vector<BundledScene>{
        {straight_hall(), true},
        {left, true},
        {mirror_y(left, "l_corner_right"), true},
        {t_intersection(), false},
        {column_room(), true},
    };
  }();
  return scenes;
}

std::optional<Scene> find_bundled_scene(const std::string& name) {
  for (const BundledScene& b : bundled_scenes()) {
    if (b.scene.name == name) return b.scene;
  }
  return std::nullopt;
}

}  // namespace mononav
