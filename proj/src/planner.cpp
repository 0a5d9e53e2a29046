#include "mononav/planner.hpp"

#include "mononav/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace mononav {

void PlanQuery::validate() const {
  if (!(clearance > 0.0) || !std::isfinite(clearance)) {
    throw std::invalid_argument("clearance must be positive");
  }
  if (!is_finite(goal)) throw std::invalid_argument("goal must be finite");
}

double trajectory_point_distance(std::span<const Vec3> trajectory, const Vec3& x) {
  if (trajectory.empty()) throw std::invalid_argument("trajectory has no waypoints");
  double best_sq = std::numeric_limits<double>::infinity();
  for (const Vec3& w : trajectory) best_sq = std::min(best_sq, (w - x).squaredNorm());
  return std::sqrt(best_sq);
}

namespace {

double clearance_brute_force(std::span<const Vec3> trajectory, std::span<const Vec3> obstacles) {
  double best_sq = std::numeric_limits<double>::infinity();
  for (const Vec3& w : trajectory) {
    for (const Vec3& o : obstacles) best_sq = std::min(best_sq, (w - o).squaredNorm());
  }
  return std::sqrt(best_sq);
}

double clearance_indexed(std::span<const Vec3> trajectory, const UniformGridIndex& index) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& w : trajectory) best = std::min(best, index.nearest_distance(w));
  return best;
}

// Cell edge for the obstacle grid: a few voxels, so ring searches stay short.
constexpr double kIndexCell = 0.3;

}  // namespace

double trajectory_clearance(std::span<const Vec3> trajectory, std::span<const Vec3> obstacles,
                            const PlannerOptions& opts) {
  if (obstacles.size() > opts.index_threshold) {
    const UniformGridIndex index(obstacles, kIndexCell);
    return clearance_indexed(trajectory, index);
  }
  return clearance_brute_force(trajectory, obstacles);
}

std::vector<PrimitiveEvaluation> evaluate_primitives(const PrimitiveLibrary& lib, const PlanQuery& q,
                                                     const PlannerOptions& opts) {
  q.validate();
  std::optional<UniformGridIndex> index;
  if (q.obstacles.size() > opts.index_threshold) index.emplace(q.obstacles, kIndexCell);

  std::vector<PrimitiveEvaluation> evals;
  evals.reserve(lib.size());
  for (const Primitive& p : lib.primitives) {
    const std::vector<Vec3> world = to_world(p, q.pose, q.flight_height);
    PrimitiveEvaluation e;
    e.goal_distance = trajectory_point_distance(world, q.goal);
    e.clearance = index ? clearance_indexed(world, *index) : clearance_brute_force(world, q.obstacles);
    e.feasible = e.clearance >= q.clearance;
    evals.push_back(e);
  }
  return evals;
}

PlanResult select_primitive(const PrimitiveLibrary& lib, const PlanQuery& q, const PlannerOptions& opts) {
  if (lib.primitives.empty()) throw std::invalid_argument("primitive library is empty");
  PlanResult result;
  result.evaluations = evaluate_primitives(lib, q, opts);

  double best = std::numeric_limits<double>::infinity();
  for (const PrimitiveEvaluation& e : result.evaluations) {
    if (e.feasible) best = std::min(best, e.goal_distance);
  }
  if (!std::isfinite(best)) {
    result.decision = Stop{"no primitive keeps clearance " + std::to_string(q.clearance) + " m"};
    return result;
  }

  std::optional<std::size_t> pick;
  for (std::size_t i = 0; i < result.evaluations.size(); ++i) {
    const PrimitiveEvaluation& e = result.evaluations[i];
    if (!e.feasible || e.goal_distance > best + opts.tie_tolerance) continue;
    if (!pick || std::abs(lib[i].spec.yaw_amplitude) < std::abs(lib[*pick].spec.yaw_amplitude)) {
      pick = i;
    }
  }

  const PrimitiveEvaluation& chosen = result.evaluations[*pick];
  result.decision = Selected{*pick, to_world(lib[*pick], q.pose, q.flight_height),
                             chosen.goal_distance, chosen.clearance};
  return result;
}

bool goal_reached(const Pose& pose, const Vec3& goal, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("goal radius must be positive");
  const Vec3 d = pose.translation() - goal;
  return std::hypot(d.x(), d.y()) <= radius;
}

}  // namespace mononav
