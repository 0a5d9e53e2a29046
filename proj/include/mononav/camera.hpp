#pragma once

#include "mononav/geometry.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace mononav {

/// Dense metric z-depth image. A value of exactly 0 marks a pixel without a
/// measurement; such pixels are skipped by fusion and by every metric.
class DepthImage {
 public:
  DepthImage() = default;
  explicit DepthImage(const Intrinsics& intr, float fill = 0.0f);
  DepthImage(const Intrinsics& intr, std::vector<float> data);

  const Intrinsics& intrinsics() const { return intr_; }
  int width() const { return intr_.width; }
  int height() const { return intr_.height; }
  std::size_t size() const { return data_.size(); }

  float at(int u, int v) const { return data_[index(u, v)]; }
  float& at(int u, int v) { return data_[index(u, v)]; }

  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }

  std::size_t valid_count() const;

  /// Throws std::invalid_argument on negative or non-finite depths.
  void validate() const;

 private:
  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(intr_.width) +
           static_cast<std::size_t>(u);
  }

  Intrinsics intr_;
  std::vector<float> data_;
};

enum class CloudFrame { kCamera, kWorld };

struct PointCloud {
  std::vector<Vec3> points;
  CloudFrame frame = CloudFrame::kWorld;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct PixelProjection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

/// Pinhole projection of a camera-frame point. Returns nullopt for points
/// at or behind the image plane (z <= 0).
std::optional<PixelProjection> project(const Intrinsics& intr, const Vec3& p_cam);

/// Inverse of project: the camera-frame point at pixel (u, v) with z-depth `depth`.
Vec3 back_project(const Intrinsics& intr, double u, double v, double depth);

/// One world-frame point per valid pixel, via the camera-to-world `pose`.
PointCloud depth_to_pointcloud(const DepthImage& img, const Pose& pose);

/// Forward-warps `src` into a camera with `dst_intr` located such that
/// p_dst = src_to_dst * p_src. Nearest depth wins per destination pixel;
/// pixels nothing lands on are 0.
DepthImage reproject_depth(const DepthImage& src, const Pose& src_to_dst,
                           const Intrinsics& dst_intr);

}  // namespace mononav
