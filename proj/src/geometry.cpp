#include "mononav/geometry.hpp"

#include <stdexcept>
#include <string>

namespace mononav {

namespace {
constexpr double kRotationTolerance = 1e-9;
}

double wrap_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(a + std::numbers::pi, two_pi);
  if (w <= 0.0) w += two_pi;
  return w - std::numbers::pi;
}

Pose::Pose(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation_.allFinite() || !translation_.allFinite()) {
    throw std::invalid_argument("Pose: non-finite rotation or translation");
  }
  if (orthonormality_error() > kRotationTolerance) {
    throw std::invalid_argument("Pose: rotation is not orthonormal");
  }
  if (rotation_.determinant() < 0.0) {
    throw std::invalid_argument("Pose: rotation has negative determinant");
  }
}

Pose Pose::from_translation(const Vec3& t) { return Pose(Mat3::Identity(), t); }

Pose Pose::from_yaw(double yaw, const Vec3& t) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  Mat3 r;
  r << c, -s, 0.0,
       s, c, 0.0,
       0.0, 0.0, 1.0;
  return Pose(Unchecked{}, r, t);
}

Pose Pose::from_quaternion(const Eigen::Quaterniond& q, const Vec3& t) {
  return Pose(q.normalized().toRotationMatrix(), t);
}

double Pose::yaw() const { return std::atan2(rotation_(1, 0), rotation_(0, 0)); }

Pose Pose::inverse() const {
  const Mat3 rt = rotation_.transpose();
  return Pose(Unchecked{}, rt, -(rt * translation_));
}

Pose operator*(const Pose& a, const Pose& b) {
  return Pose(Pose::Unchecked{}, a.rotation_ * b.rotation_,
              a.rotation_ * b.translation_ + a.translation_);
}

double Pose::orthonormality_error() const {
  return (rotation_ * rotation_.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
}

bool approx_equal(const Pose& a, const Pose& b, double tol) {
  return (a.rotation() - b.rotation()).cwiseAbs().maxCoeff() <= tol &&
         (a.translation() - b.translation()).cwiseAbs().maxCoeff() <= tol;
}

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw std::invalid_argument("Intrinsics: focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("Intrinsics: image size must be positive");
  }
  if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height)) {
    throw std::invalid_argument("Intrinsics: principal point (" + std::to_string(cx) + ", " +
                                std::to_string(cy) + ") outside image");
  }
}

namespace frames {

const Mat3& body_from_optical_rotation() {
  static const Mat3 r = [] {
    Mat3 m;
    m << 0.0, 0.0, 1.0,
        -1.0, 0.0, 0.0,
         0.0, -1.0, 0.0;
    return m;
  }();
  return r;
}

Pose camera_pose_from_body(const Pose& body_in_world) {
  return body_in_world * Pose(body_from_optical_rotation(), Vec3::Zero());
}

}  // namespace frames

}  // namespace mononav
