#pragma once

#include "mononav/primitives.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace mononav {

struct PlanQuery {
  Pose pose;
  Vec3 goal = Vec3::Zero();
  /// Occupied voxel centers.
  std::span<const Vec3> obstacles;
  double clearance = 0.5;
  double flight_height = 0.4;

  void validate() const;
};

struct PlannerOptions {
  /// Above this many obstacles, clearance is computed through a uniform grid.
  std::size_t index_threshold = 10000;
  /// Goal distances within this of the best are treated as tied.
  double tie_tolerance = 1e-9;
};

struct PrimitiveEvaluation {
  double goal_distance = 0.0;
  /// Minimum waypoint-to-obstacle distance; +inf with no obstacles.
  double clearance = 0.0;
  bool feasible = false;
};

struct Selected {
  std::size_t index = 0;
  std::vector<Vec3> waypoints;
  double goal_distance = 0.0;
  double clearance = 0.0;
};

struct Stop {
  std::string reason;
};

struct PlanResult {
  std::variant<Selected, Stop> decision;
  std::vector<PrimitiveEvaluation> evaluations;

  bool stopped() const { return std::holds_alternative<Stop>(decision); }
  const Selected& selected() const { return std::get<Selected>(decision); }
};

/// min over waypoints of ||waypoint - x||. Throws on an empty trajectory.
double trajectory_point_distance(std::span<const Vec3> trajectory, const Vec3& x);

/// Minimum distance from any waypoint to any obstacle (+inf when there are none).
double trajectory_clearance(std::span<const Vec3> trajectory, std::span<const Vec3> obstacles,
                            const PlannerOptions& opts = {});

std::vector<PrimitiveEvaluation> evaluate_primitives(const PrimitiveLibrary& lib, const PlanQuery& q,
                                                     const PlannerOptions& opts = {});

/// Among primitives whose every waypoint keeps at least q.clearance from every
/// obstacle, picks the one ending up closest to the goal. Ties go to the smaller
/// |yaw amplitude|, then library order. With nothing feasible, returns Stop.
PlanResult select_primitive(const PrimitiveLibrary& lib, const PlanQuery& q,
                            const PlannerOptions& opts = {});

/// Closed horizontal ball test. Throws if radius <= 0.
bool goal_reached(const Pose& pose, const Vec3& goal, double radius);

}  // namespace mononav
