#pragma once

#include "mononav/planner.hpp"
#include "mononav/scene.hpp"
#include "mononav/tsdf.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mononav {

/// Stand-in for monocular depth error: d' = d * (1 + b + e), with a per-frame
/// scale bias b ~ N(0, bias_sigma), per-pixel e ~ N(0, mult_sigma), and
/// per-pixel dropout to 0 with probability dropout_p.
struct NoiseModel {
  double mult_sigma = 0.0;
  double bias_sigma = 0.0;
  double dropout_p = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  bool is_zero() const { return mult_sigma == 0.0 && bias_sigma == 0.0 && dropout_p == 0.0; }

  /// Preset whose per-frame point cloud distance at 3 m against a clean
  /// frame is close to 0.4 m. See calibrate_mult_sigma.
  static NoiseModel monocular();
};

/// Deterministic in (noise.seed, frame_index). Zero pixels stay zero and
/// negative results clamp to zero.
DepthImage apply_noise(const DepthImage& img, const NoiseModel& noise, std::uint64_t frame_index);

/// Mean per-frame PCD (clean cloud to noisy cloud) of a fronto-parallel wall
/// at `range`, over `frames` noise draws.
double noisy_wall_pcd(const NoiseModel& noise, const Intrinsics& intr, double range, int frames);

/// Returns the candidate mult_sigma whose noisy_wall_pcd is nearest `target_pcd`,
/// holding the other fields of `base` fixed.
double calibrate_mult_sigma(const NoiseModel& base, std::span<const double> candidates,
                            double target_pcd, const Intrinsics& intr, double range, int frames);

/// Default simulated camera: 80x60, fx = fy = 70 px (about 60 by 47 degrees).
Intrinsics default_camera();

struct RunConfig {
  LibraryParams library;
  double clearance = 0.5;
  double sensor_period = 0.25;
  double replan_period = 1.0;
  int warm_start_frames = 12;
  /// Planning-cycle budget.
  int max_steps = 100;
  double goal_radius = 0.5;
  double robot_radius = 0.1;
  TsdfParams tsdf;
  OccupancyFilter filter;
  NoiseModel noise;
  Intrinsics camera = default_camera();
  double camera_max_range = 10.0;
  /// 0 fuses every frame; k > 0 keeps only the last k frames in the map.
  int fusion_window = 0;
  /// Frames are fused this many sensor periods after capture.
  int frame_delay = 0;
  /// Odometry error applied to the pose used for fusion.
  double pose_noise_xy = 0.0;
  double pose_noise_yaw = 0.0;
  PlannerOptions planner;
  std::uint64_t seed = 0;

  double tick() const { return library.horizon / (library.waypoints - 1); }
  /// Throws std::invalid_argument naming the offending key.
  void validate() const;
};

enum class Outcome { kGoalReached, kSelfStopped, kCollided, kStepLimit };
std::string to_string(Outcome o);

struct StepRecord {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;
  std::string action;
  std::string event;
};

struct ReplanRecord {
  double t = 0.0;
  /// -1 on a stop.
  int selected = -1;
  double goal_distance = 0.0;
  double clearance = 0.0;
  std::size_t occupied_voxels = 0;
  std::size_t allocated_blocks = 0;
  std::vector<PrimitiveEvaluation> evaluations;
};

struct RunLog {
  std::string scene;
  std::uint64_t seed = 0;
  std::vector<StepRecord> steps;
  std::vector<ReplanRecord> replans;
  Outcome outcome = Outcome::kStepLimit;
  Vec3 start = Vec3::Zero();
  Vec3 final_position = Vec3::Zero();
  Vec3 goal = Vec3::Zero();
  std::size_t frames_fused = 0;

  bool collided() const { return outcome == Outcome::kCollided; }
  /// 1 - |x_T - x_g| / |x_0 - x_g|, clamped to [0, 1].
  double goal_completion() const;
};

/// 1 - |final - goal| / |start - goal| without clamping.
double goal_completion_raw(const Vec3& start, const Vec3& final_position, const Vec3& goal);

/// Closed loop: render, perturb, fuse at the sensor rate; extract obstacles,
/// select a primitive and follow it exactly at the replan rate.
/// The first warm_start_frames sensor frames are taken while flying straight
/// ahead from the scene start, before any planning.
RunLog run_episode(const Scene& scene, const RunConfig& cfg);

/// Same loop, also returning the final map.
RunLog run_episode(const Scene& scene, const RunConfig& cfg, VoxelBlockGrid* final_map);

/// RunLog as CSV: t,x,y,z,yaw,action,event.
std::string runlog_csv(const RunLog& log);
nlohmann::ordered_json runlog_summary(const RunLog& log);

/// Seed for episode `index` of a batch.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

struct SceneSummary {
  std::string scene;
  std::size_t runs = 0;
  double mean_goal_completion = 0.0;
  double collision_rate = 0.0;
  std::size_t goal_reached = 0;
  std::size_t self_stopped = 0;
  std::size_t collided = 0;
  std::size_t step_limit = 0;
};

struct BatchResult {
  std::vector<RunLog> episodes;  // scene-major, then trial
  std::vector<SceneSummary> per_scene;
  SceneSummary overall;
};

SceneSummary summarize(const std::string& label, std::span<const RunLog> logs);

/// trials episodes per scene, episode seeds derived from cfg.seed. Episodes
/// may run on `workers` threads; results do not depend on the worker count.
/// When `final_maps` is given it receives each episode's final map, in episode order.
BatchResult batch_evaluate(std::span<const Scene> scenes, const RunConfig& cfg, int trials,
                           int workers = 1, std::vector<VoxelBlockGrid>* final_maps = nullptr);

std::string format_batch_table(const BatchResult& r);
nlohmann::ordered_json batch_summary_json(const BatchResult& r);

}  // namespace mononav
