#pragma once

#include "mononav/camera.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace mononav {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary depth frame, little-endian:
///   "MNDP", u32 width, u32 height, f64 fx, fy, cx, cy, width, height,
///   then width*height f32 depths in meters, row-major.
/// The two trailing f64 size fields are written for readers that only parse
/// the intrinsics block; they are ignored on read.
void write_depth_mndp(const std::filesystem::path& path, const DepthImage& img);
DepthImage read_depth_mndp(const std::filesystem::path& path);

/// 16-bit grayscale PNG in millimeters, 0 = invalid. Depths beyond 65.535 m
/// are written as 0. The PNG carries no intrinsics; the caller supplies them.
void write_depth_png(const std::filesystem::path& path, const DepthImage& img);
DepthImage read_depth_png(const std::filesystem::path& path, const Intrinsics& intr);

}  // namespace mononav
