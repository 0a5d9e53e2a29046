#include "mononav/eval.hpp"

#include "mononav/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace mononav {

DepthMetrics depth_metrics(const DepthImage& gt, const DepthImage& est) {
  if (gt.width() != est.width() || gt.height() != est.height()) {
    throw EvalError("depth images differ in size: " + std::to_string(gt.width()) + "x" +
                    std::to_string(gt.height()) + " vs " + std::to_string(est.width()) + "x" +
                    std::to_string(est.height()));
  }
  double abs_rel = 0.0;
  double sq = 0.0;
  double log_err = 0.0;
  std::size_t d1 = 0, d2 = 0, d3 = 0, m = 0;
  const double t1 = 1.25, t2 = 1.25 * 1.25, t3 = 1.25 * 1.25 * 1.25;

  const auto& g = gt.data();
  const auto& e = est.data();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double d = g[i];
    const double dh = e[i];
    if (d <= 0.0 || dh <= 0.0) continue;
    ++m;
    const double diff = std::abs(d - dh);
    abs_rel += diff / d;
    sq += diff * diff;
    log_err += std::abs(std::log10(d) - std::log10(dh));
    const double ratio = std::max(d / dh, dh / d);
    d1 += ratio < t1;
    d2 += ratio < t2;
    d3 += ratio < t3;
  }
  if (m == 0) throw EvalError("no pixel is valid in both depth images");

  const double mm = static_cast<double>(m);
  return DepthMetrics{abs_rel / mm,
                      std::sqrt(sq / mm),
                      log_err / mm,
                      static_cast<double>(d1) / mm,
                      static_cast<double>(d2) / mm,
                      static_cast<double>(d3) / mm,
                      m};
}

PcdResult point_cloud_distance(std::span<const Vec3> gt, std::span<const Vec3> est) {
  if (gt.empty() || est.empty()) throw EvalError("point cloud distance needs two non-empty clouds");

  // Roughly one estimated point per cell along the longest axis.
  Vec3 lo = est.front(), hi = est.front();
  for (const Vec3& p : est) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double longest = (hi - lo).maxCoeff();
  const double cell = std::max(longest / std::cbrt(static_cast<double>(est.size())), 1e-3);

  const UniformGridIndex index(est, cell);
  double sum = 0.0;
  for (const Vec3& g : gt) sum += index.nearest_distance(g);
  return {sum / static_cast<double>(gt.size()), gt.size()};
}

SequenceResult evaluate_sequence(std::span<const std::pair<DepthImage, DepthImage>> frames) {
  if (frames.empty()) throw EvalError("evaluate_sequence needs at least one frame");
  SequenceResult r;
  DepthMetrics& acc = r.metrics;
  for (const auto& [gt, est] : frames) {
    const DepthMetrics m = depth_metrics(gt, est);
    const PointCloud g = depth_to_pointcloud(gt, Pose::identity());
    const PointCloud e = depth_to_pointcloud(est, Pose::identity());
    acc.rel += m.rel;
    acc.rmse += m.rmse;
    acc.log10 += m.log10;
    acc.delta1 += m.delta1;
    acc.delta2 += m.delta2;
    acc.delta3 += m.delta3;
    acc.valid_pixels += m.valid_pixels;
    r.pcd += point_cloud_distance(g.points, e.points).pcd;
  }
  const double n = static_cast<double>(frames.size());
  acc.rel /= n;
  acc.rmse /= n;
  acc.log10 /= n;
  acc.delta1 /= n;
  acc.delta2 /= n;
  acc.delta3 /= n;
  r.pcd /= n;
  r.frames = frames.size();
  return r;
}

SequenceResult reference_hardware_row() {
  SequenceResult r;
  r.metrics.delta1 = 0.62;
  r.metrics.delta2 = 0.85;
  r.metrics.delta3 = 0.95;
  r.metrics.rel = 0.48;
  r.metrics.rmse = 1.05;
  r.metrics.log10 = 0.11;
  r.pcd = 0.41;
  r.frames = 77;
  return r;
}

std::string format_report_text(const SequenceResult& r, const std::string& label) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%-10s %8s %8s %8s %8s %8s %8s %8s\n"
                "%-10s %8s %8s %8s %8s %8s %8s %8s\n"
                "%-10s %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f\n",
                "", "d1", "d2", "d3", "REL", "RMSE", "log10", "PCD", "", "(up)", "(up)", "(up)",
                "(down)", "(down)", "(down)", "(down)", label.c_str(), r.metrics.delta1,
                r.metrics.delta2, r.metrics.delta3, r.metrics.rel, r.metrics.rmse, r.metrics.log10,
                r.pcd);
  return std::string(buf) + "frames: " + std::to_string(r.frames) +
         "  valid pixels: " + std::to_string(r.metrics.valid_pixels) + "\n";
}

nlohmann::ordered_json format_report_json(const SequenceResult& r) {
  nlohmann::ordered_json j;
  j["delta1"] = r.metrics.delta1;
  j["delta2"] = r.metrics.delta2;
  j["delta3"] = r.metrics.delta3;
  j["rel"] = r.metrics.rel;
  j["rmse"] = r.metrics.rmse;
  j["log10"] = r.metrics.log10;
  j["pcd"] = r.pcd;
  j["frames"] = r.frames;
  j["valid_pixels"] = r.metrics.valid_pixels;
  return j;
}

}  // namespace mononav
