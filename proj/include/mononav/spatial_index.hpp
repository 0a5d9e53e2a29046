#pragma once

#include "mononav/geometry.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace mononav {

/// Hash of an integer 3-tuple, used for voxel blocks and grid cells.
struct Int3Hash {
  std::size_t operator()(const std::array<int, 3>& k) const noexcept {
    // Large primes from Teschner et al. spatial hashing.
    const auto h = static_cast<std::uint64_t>(k[0]) * 73856093ULL ^
                   static_cast<std::uint64_t>(k[1]) * 19349663ULL ^
                   static_cast<std::uint64_t>(k[2]) * 83492791ULL;
    return static_cast<std::size_t>(h);
  }
};

/// Uniform-grid bucket index over a fixed point set. Queries return exact
/// Euclidean distances, identical to a brute-force scan over the same points.
class UniformGridIndex {
 public:
  UniformGridIndex(std::span<const Vec3> points, double cell_size);

  bool empty() const { return points_.empty(); }
  std::size_t size() const { return points_.size(); }

  /// Distance to the nearest indexed point; +inf when the index is empty.
  double nearest_distance(const Vec3& q) const;

  /// True iff some indexed point lies at distance < radius from q.
  bool any_closer_than(const Vec3& q, double radius) const;

 private:
  using Key = std::array<int, 3>;
  Key key_of(const Vec3& p) const;
  double scan_cell(const Key& k, const Vec3& q, double best_sq) const;

  std::vector<Vec3> points_;
  double cell_size_;
  std::unordered_map<Key, std::vector<std::uint32_t>, Int3Hash> cells_;
  Key lo_{0, 0, 0};
  Key hi_{0, 0, 0};
};

}  // namespace mononav
