#include "mononav/simulator.hpp"

#include "mononav/eval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <optional>
#include <random>
#include <stdexcept>
#include <thread>

namespace mononav {

namespace {

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t frame, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(frame), static_cast<std::uint32_t>(frame >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

constexpr std::uint64_t kDepthStream = 1;
constexpr std::uint64_t kPoseStream = 2;

// True when `ratio` is a positive integer within rounding error.
std::optional<int> integer_ratio(double ratio) {
  const double r = std::round(ratio);
  if (r < 1.0 || std::abs(ratio - r) > 1e-9 * std::max(1.0, r)) return std::nullopt;
  return static_cast<int>(r);
}

}  // namespace

void NoiseModel::validate() const {
  if (!(mult_sigma >= 0.0) || !std::isfinite(mult_sigma)) {
    throw std::invalid_argument("noise.mult_sigma must be >= 0");
  }
  if (!(bias_sigma >= 0.0) || !std::isfinite(bias_sigma)) {
    throw std::invalid_argument("noise.bias_sigma must be >= 0");
  }
  if (!(dropout_p >= 0.0 && dropout_p <= 1.0)) {
    throw std::invalid_argument("noise.dropout_p must be in [0, 1]");
  }
}

NoiseModel NoiseModel::monocular() {
  // Per-pixel noise alone saturates near 0.1 m PCD because neighbouring noisy
  // points stay close to the true wall, so the per-frame bias carries most of
  // the error. mult_sigma picked by calibrate_mult_sigma with bias 0.2,
  // dropout 0.05, 30 frames at 3 m; the unit tests rerun the sweep.
  return NoiseModel{0.015, 0.2, 0.05, 0};
}

DepthImage apply_noise(const DepthImage& img, const NoiseModel& noise, std::uint64_t frame_index) {
  noise.validate();
  if (noise.is_zero()) return img;

  std::mt19937_64 rng = make_rng(noise.seed, frame_index, kDepthStream);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  const double bias = noise.bias_sigma > 0.0 ? noise.bias_sigma * unit(rng) : 0.0;
  DepthImage out = img;
  for (float& d : out.data()) {
    if (d <= 0.0f) continue;
    const double eps = noise.mult_sigma > 0.0 ? noise.mult_sigma * unit(rng) : 0.0;
    const bool dropped = noise.dropout_p > 0.0 && coin(rng) < noise.dropout_p;
    if (dropped) {
      d = 0.0f;
      continue;
    }
    const double v = static_cast<double>(d) * (1.0 + bias + eps);
    d = v > 0.0 ? static_cast<float>(v) : 0.0f;
  }
  return out;
}

double noisy_wall_pcd(const NoiseModel& noise, const Intrinsics& intr, double range, int frames) {
  const DepthImage clean(intr, static_cast<float>(range));
  const PointCloud g = depth_to_pointcloud(clean, Pose::identity());
  double sum = 0.0;
  for (int f = 0; f < frames; ++f) {
    const DepthImage noisy = apply_noise(clean, noise, static_cast<std::uint64_t>(f));
    const PointCloud e = depth_to_pointcloud(noisy, Pose::identity());
    sum += point_cloud_distance(g.points, e.points).pcd;
  }
  return sum / frames;
}

double calibrate_mult_sigma(const NoiseModel& base, std::span<const double> candidates,
                            double target_pcd, const Intrinsics& intr, double range, int frames) {
  if (candidates.empty()) throw std::invalid_argument("calibration needs candidate sigmas");
  double best = candidates.front();
  double best_err = std::numeric_limits<double>::infinity();
  for (const double sigma : candidates) {
    NoiseModel n = base;
    n.mult_sigma = sigma;
    const double err = std::abs(noisy_wall_pcd(n, intr, range, frames) - target_pcd);
    if (err < best_err) {
      best_err = err;
      best = sigma;
    }
  }
  return best;
}

Intrinsics default_camera() { return Intrinsics{70.0, 70.0, 39.5, 29.5, 80, 60}; }

void RunConfig::validate() const {
  library.validate();
  tsdf.validate();
  filter.validate();
  noise.validate();
  try {
    camera.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("camera: ") + e.what());
  }
  auto positive = [](double v, const char* key) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(key) + " must be positive");
  };
  positive(clearance, "clearance");
  positive(sensor_period, "sensor_period");
  positive(replan_period, "replan_period");
  positive(goal_radius, "goal_radius");
  positive(robot_radius, "robot_radius");
  positive(camera_max_range, "camera_max_range");
  if (warm_start_frames < 0) throw std::invalid_argument("warm_start_frames must be >= 0");
  if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
  if (fusion_window < 0) throw std::invalid_argument("fusion_window must be >= 0");
  if (frame_delay < 0) throw std::invalid_argument("frame_delay must be >= 0");
  if (!(pose_noise_xy >= 0.0)) throw std::invalid_argument("pose_noise_xy must be >= 0");
  if (!(pose_noise_yaw >= 0.0)) throw std::invalid_argument("pose_noise_yaw must be >= 0");
  if (!integer_ratio(sensor_period / tick())) {
    throw std::invalid_argument("sensor_period must be a whole multiple of the primitive waypoint spacing");
  }
  if (!integer_ratio(replan_period / tick())) {
    throw std::invalid_argument("replan_period must be a whole multiple of the primitive waypoint spacing");
  }
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::kGoalReached: return "GoalReached";
    case Outcome::kSelfStopped: return "SelfStopped";
    case Outcome::kCollided: return "Collided";
    case Outcome::kStepLimit: return "StepLimit";
  }
  return "Unknown";
}

double goal_completion_raw(const Vec3& start, const Vec3& final_position, const Vec3& goal) {
  const double d0 = (start - goal).norm();
  if (d0 == 0.0) return 1.0;
  return 1.0 - (final_position - goal).norm() / d0;
}

double RunLog::goal_completion() const {
  return std::clamp(goal_completion_raw(start, final_position, goal), 0.0, 1.0);
}

RunLog run_episode(const Scene& scene, const RunConfig& cfg) { return run_episode(scene, cfg, nullptr); }

RunLog run_episode(const Scene& scene, const RunConfig& cfg, VoxelBlockGrid* final_map) {
  cfg.validate();
  scene.validate();

  const PrimitiveLibrary lib = generate_library(cfg.library);
  const double dt = cfg.tick();
  const int sensor_every = *integer_ratio(cfg.sensor_period / dt);
  const int replan_every = *integer_ratio(cfg.replan_period / dt);
  const long warm_ticks = static_cast<long>(cfg.warm_start_frames) * sensor_every;
  const double speed = cfg.library.speed;

  NoiseModel noise = cfg.noise;
  noise.seed = cfg.seed;

  const auto window = static_cast<std::size_t>(cfg.fusion_window);
  FusionMap map(cfg.tsdf, window);
  std::deque<Frame> pending;

  RunLog log;
  log.scene = scene.name;
  log.seed = cfg.seed;
  log.goal = scene.goal;

  Pose body = scene.start_pose();
  log.start = body.translation();

  struct Active {
    std::size_t index;
    std::vector<Vec3> waypoints;
    double yaw0;
    std::size_t next = 1;
  };
  std::optional<Active> active;

  long tick = 0;
  int cycles = 0;
  log.steps.push_back({0.0, body.translation(), body.yaw(), "", "start"});

  auto finish = [&](Outcome o) {
    log.outcome = o;
    log.final_position = body.translation();
  };

  while (true) {
    const double t = tick * dt;
    std::string event;
    std::string action;

    if (tick % sensor_every == 0) {
      const auto frame_index = static_cast<std::uint64_t>(tick / sensor_every);
      const Pose cam = frames::camera_pose_from_body(body);
      DepthImage depth = apply_noise(raycast_depth(scene, cam, cfg.camera, cfg.camera_max_range),
                                     noise, frame_index);
      Pose fused_pose = cam;
      if (cfg.pose_noise_xy > 0.0 || cfg.pose_noise_yaw > 0.0) {
        std::mt19937_64 rng = make_rng(cfg.seed, frame_index, kPoseStream);
        std::normal_distribution<double> unit(0.0, 1.0);
        const double ex = cfg.pose_noise_xy * unit(rng);
        const double ey = cfg.pose_noise_xy * unit(rng);
        const double eyaw = cfg.pose_noise_yaw * unit(rng);
        const Vec3& p = body.translation();
        fused_pose = frames::camera_pose_from_body(
            Pose::from_yaw(body.yaw() + eyaw, Vec3(p.x() + ex, p.y() + ey, p.z())));
      }
      pending.push_back({std::move(depth), fused_pose});
      if (pending.size() > static_cast<std::size_t>(cfg.frame_delay)) {
        map.integrate(std::move(pending.front()));
        pending.pop_front();
        if (window > 0 && map.frames_integrated() > window) map.reset_window(window);
        ++log.frames_fused;
      }
      event = "frame";
    }

    if (tick >= warm_ticks) {
      const bool exhausted = !active || active->next >= active->waypoints.size();
      if (exhausted || (tick - warm_ticks) % replan_every == 0) {
        if (cycles >= cfg.max_steps) {
          finish(Outcome::kStepLimit);
          log.steps.push_back({t, body.translation(), body.yaw(), "", "step_limit"});
          break;
        }
        const std::vector<Vec3> obstacles = extract_occupied(map.grid(), cfg.filter);
        PlanQuery q;
        q.pose = body;
        q.goal = scene.goal;
        q.obstacles = obstacles;
        q.clearance = cfg.clearance;
        q.flight_height = scene.flight_height;
        PlanResult plan = select_primitive(lib, q, cfg.planner);
        ++cycles;

        ReplanRecord rec;
        rec.t = t;
        rec.occupied_voxels = obstacles.size();
        rec.allocated_blocks = map.grid().block_count();
        rec.evaluations = plan.evaluations;
        if (plan.stopped()) {
          log.replans.push_back(std::move(rec));
          finish(Outcome::kSelfStopped);
          event += event.empty() ? "stop" : ";stop";
          log.steps.push_back({t, body.translation(), body.yaw(), "stop", event});
          break;
        }
        const Selected& sel = plan.selected();
        rec.selected = static_cast<int>(sel.index);
        rec.goal_distance = sel.goal_distance;
        rec.clearance = sel.clearance;
        log.replans.push_back(std::move(rec));
        active = Active{sel.index, sel.waypoints, body.yaw()};
        event += event.empty() ? "replan" : ";replan";
      }
      const Primitive& prim = lib[active->index];
      const std::size_t j = active->next++;
      body = Pose::from_yaw(active->yaw0 + prim.headings[j], active->waypoints[j]);
      action = std::to_string(active->index);
    } else {
      const double yaw = body.yaw();
      const Vec3 p = body.translation() + speed * dt * Vec3(std::cos(yaw), std::sin(yaw), 0.0);
      body = Pose::from_yaw(yaw, p);
      action = "warmup";
    }

    ++tick;
    const double t_next = tick * dt;
    if (check_collision(scene, body.translation(), cfg.robot_radius)) {
      finish(Outcome::kCollided);
      event += event.empty() ? "collision" : ";collision";
      log.steps.push_back({t_next, body.translation(), body.yaw(), action, event});
      break;
    }
    if (goal_reached(body, scene.goal, cfg.goal_radius)) {
      finish(Outcome::kGoalReached);
      event += event.empty() ? "goal" : ";goal";
      log.steps.push_back({t_next, body.translation(), body.yaw(), action, event});
      break;
    }
    log.steps.push_back({t_next, body.translation(), body.yaw(), action, event});
  }

  if (final_map) *final_map = map.grid();
  return log;
}

std::string runlog_csv(const RunLog& log) {
  std::string out = "t,x,y,z,yaw,action,event\n";
  for (const StepRecord& s : log.steps) {
    out += fmt::format("{:.3f},{:.6f},{:.6f},{:.6f},{:.6f},{},{}\n", s.t, s.position.x(),
                       s.position.y(), s.position.z(), s.yaw, s.action, s.event);
  }
  return out;
}

namespace {

nlohmann::ordered_json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

nlohmann::ordered_json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

nlohmann::ordered_json runlog_summary(const RunLog& log) {
  nlohmann::ordered_json j;
  j["scene"] = log.scene;
  j["seed"] = log.seed;
  j["outcome"] = to_string(log.outcome);
  j["goal_completion"] = log.goal_completion();
  j["goal_completion_raw"] = goal_completion_raw(log.start, log.final_position, log.goal);
  j["collided"] = log.collided();
  j["start"] = vec_json(log.start);
  j["final_position"] = vec_json(log.final_position);
  j["goal"] = vec_json(log.goal);
  j["duration"] = log.steps.empty() ? 0.0 : log.steps.back().t;
  j["frames_fused"] = log.frames_fused;
  nlohmann::ordered_json replans = nlohmann::ordered_json::array();
  for (const ReplanRecord& r : log.replans) {
    nlohmann::ordered_json jr;
    jr["t"] = r.t;
    jr["selected"] = r.selected;
    jr["goal_distance"] = r.selected >= 0 ? finite_or_null(r.goal_distance) : nullptr;
    jr["clearance"] = r.selected >= 0 ? finite_or_null(r.clearance) : nullptr;
    jr["occupied_voxels"] = r.occupied_voxels;
    jr["allocated_blocks"] = r.allocated_blocks;
    nlohmann::ordered_json cl = nlohmann::ordered_json::array();
    for (const PrimitiveEvaluation& e : r.evaluations) cl.push_back(finite_or_null(e.clearance));
    jr["primitive_clearances"] = std::move(cl);
    replans.push_back(std::move(jr));
  }
  j["replans"] = std::move(replans);
  return j;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 finalizer over a golden-ratio stride.
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SceneSummary summarize(const std::string& label, std::span<const RunLog> logs) {
  SceneSummary s;
  s.scene = label;
  s.runs = logs.size();
  for (const RunLog& l : logs) {
    s.mean_goal_completion += l.goal_completion();
    switch (l.outcome) {
      case Outcome::kGoalReached: ++s.goal_reached; break;
      case Outcome::kSelfStopped: ++s.self_stopped; break;
      case Outcome::kCollided: ++s.collided; break;
      case Outcome::kStepLimit: ++s.step_limit; break;
    }
  }
  if (s.runs > 0) {
    s.mean_goal_completion /= static_cast<double>(s.runs);
    s.collision_rate = static_cast<double>(s.collided) / static_cast<double>(s.runs);
  }
  return s;
}

BatchResult batch_evaluate(std::span<const Scene> scenes, const RunConfig& cfg, int trials, int workers,
                           std::vector<VoxelBlockGrid>* final_maps) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  cfg.validate();
  const std::size_t total = scenes.size() * static_cast<std::size_t>(trials);
  BatchResult result;
  result.episodes.resize(total);
  if (final_maps) final_maps->assign(total, VoxelBlockGrid(cfg.tsdf));

  auto run_one = [&](std::size_t i) {
    RunConfig c = cfg;
    c.seed = derive_seed(cfg.seed, i);
    result.episodes[i] = run_episode(scenes[i / trials], c, final_maps ? &(*final_maps)[i] : nullptr);
  };

  const auto n_workers = static_cast<std::size_t>(std::clamp(workers, 1, 64));
  if (n_workers == 1 || total <= 1) {
    for (std::size_t i = 0; i < total; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(total);
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < std::min(n_workers, total); ++w) {
        pool.emplace_back([&] {
          for (std::size_t i = next++; i < total; i = next++) {
            try {
              run_one(i);
            } catch (...) {
              errors[i] = std::current_exception();
            }
          }
        });
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const std::span<const RunLog> logs(result.episodes.data() + s * trials, static_cast<std::size_t>(trials));
    result.per_scene.push_back(summarize(scenes[s].name, logs));
  }
  result.overall = summarize("overall", result.episodes);
  return result;
}

std::string format_batch_table(const BatchResult& r) {
  std::string out = fmt::format("{:<18} {:>5} {:>10} {:>10} {:>6} {:>6} {:>6} {:>6}\n", "scene", "runs",
                                "% to goal", "coll.rate", "goal", "stop", "crash", "limit");
  auto row = [&](const SceneSummary& s) {
    out += fmt::format("{:<18} {:>5} {:>9.1f}% {:>10.2f} {:>6} {:>6} {:>6} {:>6}\n", s.scene, s.runs,
                       100.0 * s.mean_goal_completion, s.collision_rate, s.goal_reached, s.self_stopped,
                       s.collided, s.step_limit);
  };
  for (const SceneSummary& s : r.per_scene) row(s);
  row(r.overall);
  return out;
}

nlohmann::ordered_json batch_summary_json(const BatchResult& r) {
  auto js = [](const SceneSummary& s) {
    nlohmann::ordered_json j;
    j["scene"] = s.scene;
    j["runs"] = s.runs;
    j["mean_goal_completion"] = s.mean_goal_completion;
    j["collision_rate"] = s.collision_rate;
    j["goal_reached"] = s.goal_reached;
    j["self_stopped"] = s.self_stopped;
    j["collided"] = s.collided;
    j["step_limit"] = s.step_limit;
    return j;
  };
  nlohmann::ordered_json j;
  nlohmann::ordered_json scenes = nlohmann::ordered_json::array();
  for (const SceneSummary& s : r.per_scene) scenes.push_back(js(s));
  j["scenes"] = std::move(scenes);
  j["overall"] = js(r.overall);
  // Hardware reference (15 trials, 5 environments); not a target for the simulator.
  j["hardware_reference"] = {{"mean_goal_completion", 0.474}, {"collision_rate", 0.13}};
  return j;
}

}  // namespace mononav
