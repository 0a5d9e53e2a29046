#include "mononav/primitives.hpp"

#include "mononav/depth_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace mononav {

using nlohmann::json;

void PrimitiveSpec::validate(double max_yaw_amplitude) const {
  if (!(speed > 0.0) || !std::isfinite(speed)) throw std::invalid_argument("speed must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("horizon must be positive");
  }
  if (waypoints < 2) throw std::invalid_argument("a primitive needs at least 2 waypoints");
  if (!std::isfinite(yaw_amplitude) || std::abs(yaw_amplitude) > max_yaw_amplitude) {
    throw std::invalid_argument("yaw amplitude exceeds the configured maximum");
  }
}

void LibraryParams::validate() const {
  if (!(speed > 0.0) || !std::isfinite(speed)) {
    throw std::invalid_argument("library.speed must be positive");
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("library.horizon must be positive");
  }
  if (!(max_yaw_rate >= 0.0) || !std::isfinite(max_yaw_rate)) {
    throw std::invalid_argument("library.max_yaw_rate must be non-negative");
  }
  if (count < 1) throw std::invalid_argument("library.count must be >= 1");
  if (waypoints < 2) throw std::invalid_argument("library.waypoints must be >= 2");
  if (substeps < 1) throw std::invalid_argument("library.substeps must be >= 1");
}

double sin_pi_unit(double s) {
  const double r = std::min(s, 1.0 - s);
  return std::sin(std::numbers::pi * r);
}

double heading_at(const PrimitiveSpec& spec, double t) {
  const double scale = spec.yaw_amplitude * spec.horizon / std::numbers::pi;
  return scale * (1.0 - std::cos(std::numbers::pi * t / spec.horizon));
}

Primitive generate_primitive(const PrimitiveSpec& spec, int substeps) {
  spec.validate(std::abs(spec.yaw_amplitude));
  if (substeps < 1) throw std::invalid_argument("substeps must be >= 1");

  Primitive prim;
  prim.spec = spec;
  const int n = spec.waypoints;
  prim.waypoints.reserve(n);
  prim.headings.reserve(n);
  prim.setpoints.reserve(n);

  auto velocity = [&](double t) {
    const double psi = heading_at(spec, t);
    return Eigen::Vector2d(spec.speed * std::cos(psi), spec.speed * std::sin(psi));
  };

  Eigen::Vector2d xy = Eigen::Vector2d::Zero();
  for (int i = 0; i < n; ++i) {
    const double s = static_cast<double>(i) / (n - 1);
    const double t = spec.horizon * s;
    if (i > 0) {
      const double t0 = spec.horizon * static_cast<double>(i - 1) / (n - 1);
      const double h = (t - t0) / substeps;
      for (int k = 0; k < substeps; ++k) {
        const double tk = t0 + k * h;
        const Eigen::Vector2d k1 = velocity(tk);
        const Eigen::Vector2d k2 = velocity(tk + 0.5 * h);
        const Eigen::Vector2d k4 = velocity(tk + h);
        // The vector field depends on t only, so k3 == k2.
        xy += (h / 6.0) * (k1 + 4.0 * k2 + k4);
      }
    }
    prim.waypoints.emplace_back(xy.x(), xy.y(), 0.0);
    prim.headings.push_back(heading_at(spec, t));
    prim.setpoints.push_back({spec.speed, spec.yaw_amplitude * sin_pi_unit(s)});
  }
  return prim;
}

std::vector<double> library_amplitudes(double max_yaw_rate, int count) {
  if (count < 1) throw std::invalid_argument("library.count must be >= 1");
  if (count == 1) return {0.0};
  // (k - mid) / mid is exactly antisymmetric, so the library mirrors bit-for-bit.
  const double mid = (count - 1) / 2.0;
  std::vector<double> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) out.push_back(max_yaw_rate * ((k - mid) / mid));
  return out;
}

PrimitiveLibrary generate_library(const LibraryParams& params) {
  params.validate();
  PrimitiveLibrary lib;
  lib.params = params;
  for (const double a : library_amplitudes(params.max_yaw_rate, params.count)) {
    PrimitiveSpec spec{params.speed, a, params.horizon, params.waypoints};
    lib.primitives.push_back(generate_primitive(spec, params.substeps));
  }
  return lib;
}

std::vector<Vec3> to_world(const Primitive& p, const Pose& pose, double flight_height) {
  const double yaw = pose.yaw();
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  const Vec3& o = pose.translation();
  std::vector<Vec3> out;
  out.reserve(p.waypoints.size());
  for (const Vec3& w : p.waypoints) {
    out.emplace_back(o.x() + c * w.x() - s * w.y(), o.y() + s * w.x() + c * w.y(), flight_height);
  }
  return out;
}

bool mirror_symmetry_check(const PrimitiveLibrary& lib, double tol) {
  for (const Primitive& p : lib.primitives) {
    const auto partner = std::find_if(lib.primitives.begin(), lib.primitives.end(), [&](const Primitive& q) {
      return std::abs(q.spec.yaw_amplitude + p.spec.yaw_amplitude) <= tol;
    });
    if (partner == lib.primitives.end()) return false;
    if (partner->waypoints.size() != p.waypoints.size()) return false;
    for (std::size_t i = 0; i < p.waypoints.size(); ++i) {
      const Vec3& a = p.waypoints[i];
      const Vec3& b = partner->waypoints[i];
      if (std::abs(a.x() - b.x()) > tol || std::abs(a.y() + b.y()) > tol ||
          std::abs(a.z() - b.z()) > tol) {
        return false;
      }
    }
  }
  return true;
}

void to_json(json& j, const LibraryParams& p) {
  j = json{{"speed", p.speed},         {"max_yaw_rate", p.max_yaw_rate}, {"count", p.count},
           {"horizon", p.horizon},     {"waypoints", p.waypoints},       {"substeps", p.substeps}};
}

void from_json(const json& j, LibraryParams& p) {
  for (const auto& [key, value] : j.items()) {
    if (key == "speed") p.speed = value.get<double>();
    else if (key == "max_yaw_rate") p.max_yaw_rate = value.get<double>();
    else if (key == "count") p.count = value.get<int>();
    else if (key == "horizon") p.horizon = value.get<double>();
    else if (key == "waypoints") p.waypoints = value.get<int>();
    else if (key == "substeps") p.substeps = value.get<int>();
    else throw std::invalid_argument("unknown key library." + key);
  }
}

json library_to_json(const PrimitiveLibrary& lib) {
  json prims = json::array();
  for (const Primitive& p : lib.primitives) {
    json wps = json::array();
    for (const Vec3& w : p.waypoints) wps.push_back({w.x(), w.y(), w.z()});
    json sps = json::array();
    for (const Setpoint& s : p.setpoints) sps.push_back({s.speed, s.yaw_rate});
    prims.push_back({{"yaw_amplitude", p.spec.yaw_amplitude},
                     {"speed", p.spec.speed},
                     {"horizon", p.spec.horizon},
                     {"waypoints", std::move(wps)},
                     {"headings", p.headings},
                     {"setpoints", std::move(sps)}});
  }
  return json{{"format", "mononav-primitives/1"}, {"params", lib.params}, {"primitives", prims}};
}

PrimitiveLibrary library_from_json(const json& j) {
  PrimitiveLibrary lib;
  lib.params = j.at("params").get<LibraryParams>();
  lib.params.validate();
  for (const json& jp : j.at("primitives")) {
    Primitive p;
    p.spec.yaw_amplitude = jp.at("yaw_amplitude").get<double>();
    p.spec.speed = jp.at("speed").get<double>();
    p.spec.horizon = jp.at("horizon").get<double>();
    for (const json& w : jp.at("waypoints")) {
      p.waypoints.emplace_back(w.at(0).get<double>(), w.at(1).get<double>(), w.at(2).get<double>());
    }
    p.headings = jp.at("headings").get<std::vector<double>>();
    for (const json& s : jp.at("setpoints")) p.setpoints.push_back({s.at(0).get<double>(), s.at(1).get<double>()});
    p.spec.waypoints = static_cast<int>(p.waypoints.size());
    if (p.waypoints.size() < 2 || p.headings.size() != p.waypoints.size() ||
        p.setpoints.size() != p.waypoints.size()) {
      throw std::invalid_argument("primitive arrays have inconsistent lengths");
    }
    lib.primitives.push_back(std::move(p));
  }
  if (lib.primitives.empty()) throw std::invalid_argument("primitive library is empty");
  return lib;
}

void save_library(const std::filesystem::path& path, const PrimitiveLibrary& lib) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << library_to_json(lib).dump(2) << '\n';
  if (!os) throw IoError("write failed: " + path.string());
}

PrimitiveLibrary load_library(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open primitive library: " + path.string());
  return library_from_json(json::parse(is));
}

}  // namespace mononav
