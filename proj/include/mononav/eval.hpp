#pragma once

#include "mononav/camera.hpp"

#include "json.hpp"

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mononav {

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pixel-wise depth errors over the M pixels valid (> 0) in both images.
struct DepthMetrics {
  double rel = 0.0;
  double rmse = 0.0;
  double log10 = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  std::size_t valid_pixels = 0;
};

struct PcdResult {
  double pcd = 0.0;
  std::size_t matched_count = 0;
};

/// Throws EvalError on a size mismatch or when no pixel is valid in both images.
DepthMetrics depth_metrics(const DepthImage& gt, const DepthImage& est);

/// Mean over g in G of the distance to the nearest e in E. Asymmetric.
/// Throws EvalError when either cloud is empty.
PcdResult point_cloud_distance(std::span<const Vec3> gt, std::span<const Vec3> est);

struct SequenceResult {
  DepthMetrics metrics;  // frame means; valid_pixels is the total
  double pcd = 0.0;
  std::size_t frames = 0;
};

/// Unweighted mean of per-frame metrics. Both images of a pair are
/// unprojected in their own camera frame for PCD.
SequenceResult evaluate_sequence(std::span<const std::pair<DepthImage, DepthImage>> frames);

/// Hardware reference row (ZoeDepth on a MAV camera, 77 frames). Shipped for
/// context only; not reproducible here.
SequenceResult reference_hardware_row();

/// Columns in the order d1 d2 d3 REL RMSE log10 PCD.
std::string format_report_text(const SequenceResult& r, const std::string& label = "result");
nlohmann::ordered_json format_report_json(const SequenceResult& r);

}  // namespace mononav
