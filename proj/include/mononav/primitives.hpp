#pragma once

#include "mononav/geometry.hpp"

#include "json.hpp"

#include <filesystem>
#include <vector>

namespace mononav {

/// Constant forward speed with a half-sine yaw-rate profile
///   yaw_rate(t) = yaw_amplitude * sin(pi * t / horizon),  t in [0, horizon].
struct PrimitiveSpec {
  double speed = 0.5;          // m/s
  double yaw_amplitude = 0.0;  // rad/s
  double horizon = 1.0;        // s
  int waypoints = 21;

  double dt() const { return horizon / (waypoints - 1); }
  void validate(double max_yaw_amplitude) const;
};

/// Commanded (forward speed, yaw rate) at one waypoint time.
struct Setpoint {
  double speed = 0.0;
  double yaw_rate = 0.0;
};

struct Primitive {
  PrimitiveSpec spec;
  /// Planar body-frame positions, z == 0. waypoints[0] is the origin.
  std::vector<Vec3> waypoints;
  /// Body-frame heading at each waypoint time.
  std::vector<double> headings;
  std::vector<Setpoint> setpoints;

  double duration() const { return spec.horizon; }
  double net_heading_change() const { return headings.back(); }
};

struct LibraryParams {
  double speed = 0.5;
  double max_yaw_rate = 0.7;
  int count = 7;
  double horizon = 1.0;
  int waypoints = 21;
  /// RK4 sub-steps per waypoint interval.
  int substeps = 16;

  void validate() const;
  friend bool operator==(const LibraryParams&, const LibraryParams&) = default;
};

struct PrimitiveLibrary {
  LibraryParams params;
  /// Ordered by yaw amplitude, ascending.
  std::vector<Primitive> primitives;

  std::size_t size() const { return primitives.size(); }
  const Primitive& operator[](std::size_t i) const { return primitives[i]; }
};

/// sin(pi * s) for s in [0, 1], exactly zero at both ends.
double sin_pi_unit(double s);

/// Closed-form heading after time t: (A*T/pi) * (1 - cos(pi*t/T)).
double heading_at(const PrimitiveSpec& spec, double t);

/// Integrates a single primitive with fixed-step RK4 (`substeps` per waypoint interval).
Primitive generate_primitive(const PrimitiveSpec& spec, int substeps = 16);

/// Amplitudes evenly spaced over [-max_yaw_rate, max_yaw_rate]; an odd count
/// includes 0 and count == 1 yields only 0. Throws std::invalid_argument on
/// bad parameters.
PrimitiveLibrary generate_library(const LibraryParams& params);
std::vector<double> library_amplitudes(double max_yaw_rate, int count);

/// Body-frame waypoints placed at the planar position and yaw of `pose`,
/// at altitude `flight_height`.
std::vector<Vec3> to_world(const Primitive& p, const Pose& pose, double flight_height);

/// True iff the primitive with amplitude -A is the y-mirror of the one with +A
/// (within `tol`) for every amplitude in the library.
bool mirror_symmetry_check(const PrimitiveLibrary& lib, double tol = 1e-9);

void to_json(nlohmann::json& j, const LibraryParams& p);
void from_json(const nlohmann::json& j, LibraryParams& p);
nlohmann::json library_to_json(const PrimitiveLibrary& lib);
PrimitiveLibrary library_from_json(const nlohmann::json& j);

void save_library(const std::filesystem::path& path, const PrimitiveLibrary& lib);
PrimitiveLibrary load_library(const std::filesystem::path& path);

}  // namespace mononav
