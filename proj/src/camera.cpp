#include "mononav/camera.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mononav {

DepthImage::DepthImage(const Intrinsics& intr, float fill)
    : intr_(intr),
      data_(static_cast<std::size_t>(intr.width) * static_cast<std::size_t>(intr.height), fill) {
  intr_.validate();
  validate();
}

DepthImage::DepthImage(const Intrinsics& intr, std::vector<float> data)
    : intr_(intr), data_(std::move(data)) {
  intr_.validate();
  if (data_.size() != static_cast<std::size_t>(intr_.width) * static_cast<std::size_t>(intr_.height)) {
    throw std::invalid_argument("DepthImage: data size does not match width*height");
  }
  validate();
}

std::size_t DepthImage::valid_count() const {
  return static_cast<std::size_t>(
      std::count_if(data_.begin(), data_.end(), [](float d) { return d > 0.0f; }));
}

void DepthImage::validate() const {
  for (const float d : data_) {
    if (!std::isfinite(d) || d < 0.0f) {
      throw std::invalid_argument("DepthImage: depths must be finite and non-negative");
    }
  }
}

std::optional<PixelProjection> project(const Intrinsics& intr, const Vec3& p_cam) {
  if (!(p_cam.z() > 0.0)) return std::nullopt;
  return PixelProjection{intr.fx * p_cam.x() / p_cam.z() + intr.cx,
                         intr.fy * p_cam.y() / p_cam.z() + intr.cy, p_cam.z()};
}

Vec3 back_project(const Intrinsics& intr, double u, double v, double depth) {
  return {(u - intr.cx) * depth / intr.fx, (v - intr.cy) * depth / intr.fy, depth};
}

PointCloud depth_to_pointcloud(const DepthImage& img, const Pose& pose) {
  PointCloud cloud;
  cloud.frame = CloudFrame::kWorld;
  cloud.points.reserve(img.valid_count());
  const Intrinsics& intr = img.intrinsics();
  for (int v = 0; v < img.height(); ++v) {
    for (int u = 0; u < img.width(); ++u) {
      const float d = img.at(u, v);
      if (d <= 0.0f) continue;
      cloud.points.push_back(pose.transform_point(back_project(intr, u, v, d)));
    }
  }
  return cloud;
}

DepthImage reproject_depth(const DepthImage& src, const Pose& src_to_dst,
                           const Intrinsics& dst_intr) {
  DepthImage dst(dst_intr, 0.0f);
  const Intrinsics& si = src.intrinsics();
  for (int v = 0; v < src.height(); ++v) {
    for (int u = 0; u < src.width(); ++u) {
      const float d = src.at(u, v);
      if (d <= 0.0f) continue;
      const Vec3 p = src_to_dst.transform_point(back_project(si, u, v, d));
      const auto px = project(dst_intr, p);
      if (!px) continue;
      const double ur = std::floor(px->u + 0.5);
      const double vr = std::floor(px->v + 0.5);
      if (ur < 0.0 || vr < 0.0 || ur >= dst_intr.width || vr >= dst_intr.height) continue;
      float& slot = dst.at(static_cast<int>(ur), static_cast<int>(vr));
      const auto z = static_cast<float>(px->depth);
      if (z <= 0.0f) continue;
      if (slot == 0.0f || z < slot) slot = z;
    }
  }
  return dst;
}

}  // namespace mononav
