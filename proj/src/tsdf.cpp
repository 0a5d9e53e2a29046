#include "mononav/tsdf.hpp"

#include "mononav/depth_io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace mononav {

namespace {

constexpr char kGridMagic[5] = {'M', 'N', 'V', 'G', '1'};

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IoError("truncated voxel map file");
  return v;
}

}  // namespace

void TsdfParams::validate() const {
  if (!(voxel_size > 0.0)) throw std::invalid_argument("tsdf.voxel_size must be positive");
  if (!(truncation >= 2.0 * voxel_size)) {
    throw std::invalid_argument("tsdf.truncation must be at least 2 * voxel_size");
  }
  if (block_size < 1) throw std::invalid_argument("tsdf.block_size must be >= 1");
  if (!(max_weight > 0.0)) throw std::invalid_argument("tsdf.max_weight must be positive");
  if (!(max_depth > 0.0)) throw std::invalid_argument("tsdf.max_depth must be positive");
}

void OccupancyFilter::validate() const {
  if (!std::isfinite(min_weight) || !std::isfinite(tsdf_band) || !std::isfinite(z_min) ||
      !std::isfinite(z_max)) {
    throw std::invalid_argument("filter thresholds must be finite");
  }
  if (!(z_min < z_max)) throw std::invalid_argument("filter.z_min must be below filter.z_max");
}

VoxelBlockGrid::VoxelBlockGrid(TsdfParams params) : params_(params) {
  params_.validate();
  const auto bs = static_cast<std::size_t>(params_.block_size);
  voxels_per_block_ = bs * bs * bs;
}

BlockCoord VoxelBlockGrid::block_of(const Vec3& p) const {
  const double edge = params_.voxel_size * params_.block_size;
  return {static_cast<int>(std::floor(p.x() / edge)), static_cast<int>(std::floor(p.y() / edge)),
          static_cast<int>(std::floor(p.z() / edge))};
}

std::vector<Voxel>& VoxelBlockGrid::ensure_block(const BlockCoord& b) {
  auto [it, inserted] = blocks_.try_emplace(b);
  if (inserted) it->second.resize(voxels_per_block_);
  return it->second;
}

Vec3 VoxelBlockGrid::voxel_center(const BlockCoord& b, int lx, int ly, int lz) const {
  const int bs = params_.block_size;
  return Vec3((b[0] * bs + lx + 0.5) * params_.voxel_size, (b[1] * bs + ly + 0.5) * params_.voxel_size,
              (b[2] * bs + lz + 0.5) * params_.voxel_size);
}

const Voxel* VoxelBlockGrid::find(const BlockCoord& b, int lx, int ly, int lz) const {
  const auto it = blocks_.find(b);
  if (it == blocks_.end()) return nullptr;
  const int bs = params_.block_size;
  return &it->second[static_cast<std::size_t>(lx + bs * (ly + bs * lz))];
}

const Voxel* VoxelBlockGrid::voxel_at(const Vec3& p) const {
  const int bs = params_.block_size;
  std::array<int, 3> g{};
  for (int a = 0; a < 3; ++a) g[a] = static_cast<int>(std::floor(p[a] / params_.voxel_size));
  auto floor_div = [](int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); };
  const BlockCoord b{floor_div(g[0], bs), floor_div(g[1], bs), floor_div(g[2], bs)};
  return find(b, g[0] - b[0] * bs, g[1] - b[1] * bs, g[2] - b[2] * bs);
}

std::vector<BlockCoord> VoxelBlockGrid::sorted_blocks() const {
  std::vector<BlockCoord> keys;
  keys.reserve(blocks_.size());
  for (const auto& kv : blocks_) keys.push_back(kv.first);
  std::sort(keys.begin(), keys.end());
  return keys;
}

std::size_t VoxelBlockGrid::integrate(const DepthImage& img, const Pose& camera_pose) {
  const Intrinsics& intr = img.intrinsics();
  const double trunc = params_.truncation;
  const auto max_depth = params_.max_depth;

  // Blocks within reach of any observed surface point.
  const double margin = trunc + params_.voxel_size;
  const Vec3 reach(margin, margin, margin);
  std::vector<BlockCoord> touched;
  for (int v = 0; v < img.height(); ++v) {
    for (int u = 0; u < img.width(); ++u) {
      const double d = img.at(u, v);
      if (d <= 0.0 || d > max_depth) continue;
      const Vec3 p = camera_pose.transform_point(back_project(intr, u, v, d));
      const BlockCoord lo = block_of(p - reach);
      const BlockCoord hi = block_of(p + reach);
      for (int bz = lo[2]; bz <= hi[2]; ++bz)
        for (int by = lo[1]; by <= hi[1]; ++by)
          for (int bx = lo[0]; bx <= hi[0]; ++bx) touched.push_back({bx, by, bz});
    }
  }
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

  const Pose world_to_cam = camera_pose.inverse();
  const int bs = params_.block_size;
  std::size_t updated = 0;
  for (const BlockCoord& b : touched) {
    std::vector<Voxel>& block = ensure_block(b);
    std::size_t i = 0;
    for (int lz = 0; lz < bs; ++lz) {
      for (int ly = 0; ly < bs; ++ly) {
        for (int lx = 0; lx < bs; ++lx, ++i) {
          const Vec3 pc = world_to_cam.transform_point(voxel_center(b, lx, ly, lz));
          const auto px = project(intr, pc);
          if (!px) continue;
          const double ur = std::floor(px->u + 0.5);
          const double vr = std::floor(px->v + 0.5);
          if (ur < 0.0 || vr < 0.0 || ur >= intr.width || vr >= intr.height) continue;
          const double d = img.at(static_cast<int>(ur), static_cast<int>(vr));
          if (d <= 0.0 || d > max_depth) continue;
          const double sdf = d - pc.z();
          if (sdf < -trunc) continue;
          const double n = std::clamp(sdf / trunc, -1.0, 1.0);
          Voxel& vox = block[i];
          vox.tsdf = (vox.tsdf * vox.weight + n) / (vox.weight + 1.0);
          vox.weight = std::min(vox.weight + 1.0, params_.max_weight);
          ++updated;
        }
      }
    }
  }
  return updated;
}

bool operator==(const VoxelBlockGrid& a, const VoxelBlockGrid& b) {
  return a.params_ == b.params_ && a.blocks_ == b.blocks_;
}

void VoxelBlockGrid::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os.write(kGridMagic, sizeof(kGridMagic));
  put<double>(os, params_.voxel_size);
  put<double>(os, params_.truncation);
  put<std::int32_t>(os, params_.block_size);
  put<double>(os, params_.max_weight);
  put<double>(os, params_.max_depth);
  put<std::uint64_t>(os, blocks_.size());
  for (const BlockCoord& b : sorted_blocks()) {
    for (const int c : b) put<std::int32_t>(os, c);
    for (const Voxel& v : blocks_.at(b)) {
      put<double>(os, v.tsdf);
      put<double>(os, v.weight);
    }
  }
  if (!os) throw IoError("write failed: " + path.string());
}

VoxelBlockGrid VoxelBlockGrid::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open voxel map: " + path.string());
  char magic[sizeof(kGridMagic)] = {};
  is.read(magic, sizeof(magic));
  if (!is || !std::equal(std::begin(magic), std::end(magic), std::begin(kGridMagic))) {
    throw IoError("not an MNVG1 voxel map: " + path.string());
  }
  TsdfParams p;
  p.voxel_size = get<double>(is);
  p.truncation = get<double>(is);
  p.block_size = get<std::int32_t>(is);
  p.max_weight = get<double>(is);
  p.max_depth = get<double>(is);
  VoxelBlockGrid grid(p);
  const auto n = get<std::uint64_t>(is);
  for (std::uint64_t i = 0; i < n; ++i) {
    BlockCoord b{};
    for (int& c : b) c = get<std::int32_t>(is);
    std::vector<Voxel>& block = grid.ensure_block(b);
    for (Voxel& v : block) {
      v.tsdf = get<double>(is);
      v.weight = get<double>(is);
    }
  }
  return grid;
}

std::vector<Vec3> extract_occupied(const VoxelBlockGrid& grid, const OccupancyFilter& filter) {
  std::vector<Vec3> out;
  grid.for_each_voxel([&](const BlockCoord& b, int x, int y, int z, const Voxel& v) {
    if (v.weight <= 0.0) return;
    const Vec3 c = grid.voxel_center(b, x, y, z);
    if (filter.accepts(v, c.z())) out.push_back(c);
  });
  return out;
}

void write_ply(const std::filesystem::path& path, const std::vector<Vec3>& points) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << "ply\nformat ascii 1.0\nelement vertex " << points.size()
     << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  char buf[96];
  for (const Vec3& p : points) {
    std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", static_cast<float>(p.x()),
                  static_cast<float>(p.y()), static_cast<float>(p.z()));
    os << buf;
  }
  if (!os) throw IoError("write failed: " + path.string());
}

std::size_t export_pointcloud(const VoxelBlockGrid& grid, const OccupancyFilter& filter,
                              const std::filesystem::path& path) {
  const std::vector<Vec3> pts = extract_occupied(grid, filter);
  write_ply(path, pts);
  return pts.size();
}

std::vector<Vec3> read_ply(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open PLY: " + path.string());
  std::string line;
  std::getline(is, line);
  if (line != "ply") throw IoError("not a PLY file: " + path.string());
  std::size_t count = 0;
  bool ascii = false;
  while (std::getline(is, line) && line != "end_header") {
    std::istringstream ls(line);
    std::string a, b;
    ls >> a >> b;
    if (a == "format") ascii = (b == "ascii");
    if (a == "element" && b == "vertex") ls >> count;
  }
  if (!ascii) throw IoError("only ASCII PLY is supported: " + path.string());
  std::vector<Vec3> pts;
  pts.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    double x = 0, y = 0, z = 0;
    if (!(is >> x >> y >> z)) throw IoError("truncated PLY: " + path.string());
    pts.emplace_back(x, y, z);
  }
  return pts;
}

FusionMap::FusionMap(TsdfParams params, std::size_t retain) : grid_(params), retain_(retain) {}

std::size_t FusionMap::integrate(Frame frame) {
  const std::size_t n = grid_.integrate(frame.depth, frame.camera_pose);
  ++total_frames_;
  if (retain_ > 0) {
    frames_.push_back(std::move(frame));
    while (frames_.size() > retain_) frames_.pop_front();
  }
  return n;
}

void FusionMap::reset_window(std::size_t k) {
  if (k == 0) throw std::invalid_argument("reset_window: k must be >= 1");
  if (k > frames_.size() && frames_.size() < total_frames_) {
    throw std::logic_error("reset_window: only " + std::to_string(frames_.size()) +
                           " frames retained, cannot rebuild a window of " + std::to_string(k));
  }
  VoxelBlockGrid fresh(grid_.params());
  const std::size_t start = frames_.size() > k ? frames_.size() - k : 0;
  for (std::size_t i = start; i < frames_.size(); ++i) {
    fresh.integrate(frames_[i].depth, frames_[i].camera_pose);
  }
  grid_ = std::move(fresh);
}

}  // namespace mononav
