#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

namespace mononav {

/// World frame is East-North-Up. Body frame is x forward, y left, z up.
/// Camera optical frame is x right, y down, z forward.
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline bool is_finite(const Vec3& v) { return v.allFinite(); }

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

/// Rigid transform mapping points from a child frame into a parent frame:
/// p_parent = rotation * p_child + translation.
class Pose {
 public:
  Pose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

  /// Throws std::invalid_argument if `rotation` is not a proper rotation.
  Pose(const Mat3& rotation, const Vec3& translation);

  static Pose identity() { return {}; }
  static Pose from_translation(const Vec3& t);
  /// Rotation about +z by `yaw` (radians, counter-clockwise from +x).
  static Pose from_yaw(double yaw, const Vec3& t = Vec3::Zero());
  static Pose from_quaternion(const Eigen::Quaterniond& q, const Vec3& t);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  /// Heading of the rotated +x axis projected onto the xy-plane.
  double yaw() const;

  Vec3 transform_point(const Vec3& p) const { return rotation_ * p + translation_; }
  Vec3 rotate(const Vec3& v) const { return rotation_ * v; }

  Pose inverse() const;

  /// (a * b) applied to p == a applied to (b applied to p).
  friend Pose operator*(const Pose& a, const Pose& b);

  /// Max-abs deviation of R*R^T from identity.
  double orthonormality_error() const;

 private:
  struct Unchecked {};
  Pose(Unchecked, const Mat3& r, const Vec3& t) : rotation_(r), translation_(t) {}

  Mat3 rotation_;
  Vec3 translation_;
};

inline Pose compose(const Pose& a, const Pose& b) { return a * b; }
inline Vec3 transform_point(const Pose& p, const Vec3& x) { return p.transform_point(x); }

/// True when translations agree within `tol` and rotations agree entrywise within `tol`.
bool approx_equal(const Pose& a, const Pose& b, double tol);

/// Pinhole intrinsics. Pixel (u, v) is centered at integer coordinates.
struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws std::invalid_argument when fx/fy are non-positive or the
  /// principal point lies outside the open image rectangle.
  void validate() const;

  friend bool operator==(const Intrinsics&, const Intrinsics&) = default;
};

namespace frames {

/// Rotation taking optical-frame vectors into the body frame.
/// optical z (forward) -> body x; optical x (right) -> body -y; optical y (down) -> body -z.
const Mat3& body_from_optical_rotation();

/// Camera optical pose in the world for a camera mounted at the body origin.
Pose camera_pose_from_body(const Pose& body_in_world);

/// Planar body pose at (x, y, z) facing `yaw`.
inline Pose body_pose(const Vec3& position, double yaw) { return Pose::from_yaw(yaw, position); }

}  // namespace frames

}  // namespace mononav
