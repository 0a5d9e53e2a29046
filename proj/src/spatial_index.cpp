#include "mononav/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mononav {

UniformGridIndex::UniformGridIndex(std::span<const Vec3> points, double cell_size)
    : points_(points.begin(), points.end()), cell_size_(cell_size) {
  if (!(cell_size_ > 0.0) || !std::isfinite(cell_size_)) {
    throw std::invalid_argument("UniformGridIndex: cell size must be positive");
  }
  for (std::uint32_t i = 0; i < points_.size(); ++i) {
    const Key k = key_of(points_[i]);
    if (i == 0) {
      lo_ = hi_ = k;
    }
    for (int a = 0; a < 3; ++a) {
      lo_[a] = std::min(lo_[a], k[a]);
      hi_[a] = std::max(hi_[a], k[a]);
    }
    cells_[k].push_back(i);
  }
}

UniformGridIndex::Key UniformGridIndex::key_of(const Vec3& p) const {
  return {static_cast<int>(std::floor(p.x() / cell_size_)),
          static_cast<int>(std::floor(p.y() / cell_size_)),
          static_cast<int>(std::floor(p.z() / cell_size_))};
}

double UniformGridIndex::scan_cell(const Key& k, const Vec3& q, double best_sq) const {
  const auto it = cells_.find(k);
  if (it == cells_.end()) return best_sq;
  for (const std::uint32_t i : it->second) {
    best_sq = std::min(best_sq, (points_[i] - q).squaredNorm());
  }
  return best_sq;
}

double UniformGridIndex::nearest_distance(const Vec3& q) const {
  if (points_.empty()) return std::numeric_limits<double>::infinity();
  const Key c = key_of(q);

  // Rings beyond this Chebyshev radius contain no cells of the index.
  int max_ring = 0;
  for (int a = 0; a < 3; ++a) {
    max_ring = std::max({max_ring, std::abs(c[a] - lo_[a]), std::abs(hi_[a] - c[a])});
  }

  double best_sq = std::numeric_limits<double>::infinity();
  for (int r = 0; r <= max_ring; ++r) {
    // Shell of cells at Chebyshev distance exactly r from the query cell.
    for (int dz = -r; dz <= r; ++dz) {
      for (int dy = -r; dy <= r; ++dy) {
        const bool face = std::abs(dz) == r || std::abs(dy) == r;
        const int step = face ? 1 : 2 * r;
        for (int dx = -r; dx <= r; dx += step) {
          best_sq = scan_cell({c[0] + dx, c[1] + dy, c[2] + dz}, q, best_sq);
        }
      }
    }
    // Unvisited points are at least r cells away.
    const double reach = r * cell_size_;
    if (best_sq <= reach * reach) break;
  }
  return std::sqrt(best_sq);
}

bool UniformGridIndex::any_closer_than(const Vec3& q, double radius) const {
  if (points_.empty()) return false;
  const Key c = key_of(q);
  const int span = static_cast<int>(std::ceil(radius / cell_size_));
  const double r_sq = radius * radius;
  for (int dz = -span; dz <= span; ++dz) {
    for (int dy = -span; dy <= span; ++dy) {
      for (int dx = -span; dx <= span; ++dx) {
        const auto it = cells_.find({c[0] + dx, c[1] + dy, c[2] + dz});
        if (it == cells_.end()) continue;
        for (const std::uint32_t i : it->second) {
          if ((points_[i] - q).squaredNorm() < r_sq) return true;
        }
      }
    }
  }
  return false;
}

}  // namespace mononav
