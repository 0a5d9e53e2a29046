#pragma once

#include "mononav/camera.hpp"
#include "mononav/spatial_index.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <unordered_map>
#include <vector>

namespace mononav {

/// A single TSDF cell. tsdf is normalized to [-1, 1], positive on the free
/// side of the surface. weight == 0 means the voxel was never observed.
struct Voxel {
  double tsdf = 0.0;
  double weight = 0.0;

  friend bool operator==(const Voxel&, const Voxel&) = default;
};

struct TsdfParams {
  double voxel_size = 0.10;
  double truncation = 0.40;
  int block_size = 8;
  double max_weight = 100.0;
  /// Pixels deeper than this are not fused.
  double max_depth = 5.0;

  void validate() const;
  friend bool operator==(const TsdfParams&, const TsdfParams&) = default;
};

/// Selects the occupied set used by the planner.
struct OccupancyFilter {
  double min_weight = 1.0;
  double tsdf_band = 0.5;
  double z_min = 0.1;
  double z_max = 1.5;

  void validate() const;
  bool accepts(const Voxel& v, double z) const {
    return v.weight >= min_weight && std::abs(v.tsdf) <= tsdf_band && z >= z_min && z <= z_max;
  }
};

using BlockCoord = std::array<int, 3>;

/// Sparse voxel map: a hash from block coordinate to a dense block of
/// block_size^3 voxels. Blocks are allocated only when integration reaches them.
///
/// Not internally synchronized. integrate() needs exclusive access; the
/// const queries may run concurrently on a map nobody is writing.
class VoxelBlockGrid {
 public:
  explicit VoxelBlockGrid(TsdfParams params = {});

  const TsdfParams& params() const { return params_; }
  std::size_t block_count() const { return blocks_.size(); }
  std::size_t voxels_per_block() const { return voxels_per_block_; }

  /// Projective integration of one frame taken from camera pose `camera_pose`
  /// (optical frame to world). Returns the number of voxels updated.
  std::size_t integrate(const DepthImage& img, const Pose& camera_pose);

  /// Returns nullptr when the containing block has not been allocated.
  const Voxel* find(const BlockCoord& block, int lx, int ly, int lz) const;
  /// Voxel containing world point p, or nullptr if unallocated.
  const Voxel* voxel_at(const Vec3& p) const;

  Vec3 voxel_center(const BlockCoord& block, int lx, int ly, int lz) const;

  /// Allocated block coordinates in lexicographic order.
  std::vector<BlockCoord> sorted_blocks() const;

  /// Visits every allocated voxel in deterministic order (blocks sorted,
  /// then z, y, x within a block).
  template <typename Fn>
  void for_each_voxel(Fn&& fn) const {
    const int bs = params_.block_size;
    for (const BlockCoord& b : sorted_blocks()) {
      const std::vector<Voxel>& block = blocks_.at(b);
      std::size_t i = 0;
      for (int z = 0; z < bs; ++z)
        for (int y = 0; y < bs; ++y)
          for (int x = 0; x < bs; ++x, ++i) fn(b, x, y, z, block[i]);
    }
  }

  /// Binary map dump with header "MNVG1".
  void save(const std::filesystem::path& path) const;
  static VoxelBlockGrid load(const std::filesystem::path& path);

  friend bool operator==(const VoxelBlockGrid& a, const VoxelBlockGrid& b);

 private:
  BlockCoord block_of(const Vec3& p) const;
  std::vector<Voxel>& ensure_block(const BlockCoord& b);

  TsdfParams params_;
  std::size_t voxels_per_block_;
  std::unordered_map<BlockCoord, std::vector<Voxel>, Int3Hash> blocks_;
};

/// Centers of voxels passing `filter`, in deterministic order.
std::vector<Vec3> extract_occupied(const VoxelBlockGrid& grid, const OccupancyFilter& filter);

/// ASCII vertex-only PLY of the occupied voxel centers. Returns vertex count.
std::size_t export_pointcloud(const VoxelBlockGrid& grid, const OccupancyFilter& filter,
                              const std::filesystem::path& path);
void write_ply(const std::filesystem::path& path, const std::vector<Vec3>& points);
std::vector<Vec3> read_ply(const std::filesystem::path& path);

/// One fused observation retained for re-integration.
struct Frame {
  DepthImage depth;
  Pose camera_pose;
};

/// A VoxelBlockGrid plus a buffer of the most recent frames, so the map can
/// be rebuilt from only the last k observations.
class FusionMap {
 public:
  /// `retain` frames are kept for re-integration; 0 keeps none.
  explicit FusionMap(TsdfParams params = {}, std::size_t retain = 0);

  std::size_t integrate(Frame frame);

  /// Rebuilds the grid from the last min(k, retained) frames. k must be >= 1.
  void reset_window(std::size_t k);

  const VoxelBlockGrid& grid() const { return grid_; }
  std::size_t retained() const { return frames_.size(); }
  std::size_t frames_integrated() const { return total_frames_; }

 private:
  VoxelBlockGrid grid_;
  std::size_t retain_;
  std::deque<Frame> frames_;
  std::size_t total_frames_ = 0;
};

}  // namespace mononav
