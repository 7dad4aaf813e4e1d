#include "nbv/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nbv/error.hpp"

namespace nbv {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw InvalidInput("intrinsics: focal lengths must be positive");
  }
  if (width < 1 || height < 1) {
    throw InvalidInput("intrinsics: image size must be at least 1x1");
  }
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw InvalidInput("intrinsics: principal point outside the image");
  }
}

CameraIntrinsics CameraIntrinsics::from_diagonal_fov(int width, int height,
                                                     double diagonal_fov_deg) {
  if (width < 1 || height < 1 || !(diagonal_fov_deg > 0.0) ||
      !(diagonal_fov_deg < 180.0)) {
    throw InvalidInput("intrinsics: bad image size or field of view");
  }
  const double half_diag = 0.5 * std::hypot(width, height);
  const double f = half_diag / std::tan(deg_to_rad(diagonal_fov_deg) / 2.0);
  CameraIntrinsics k{f, f, width / 2.0, height / 2.0, width, height};
  k.validate();
  return k;
}

Pose::Pose(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  const double ortho = (rotation * rotation.transpose() - Mat3::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  if (!rotation.allFinite() || !translation.allFinite() || ortho > 1e-6 ||
      std::abs(rotation.determinant() - 1.0) > 1e-6) {
    throw InvalidInput("pose: rotation is not orthonormal with det +1");
  }
}

Pose Pose::compose(const Pose& other) const {
  Pose out;
  out.rotation_ = rotation_ * other.rotation_;
  out.translation_ = rotation_ * other.translation_ + translation_;
  return out;
}

Pose Pose::inverse() const {
  Pose out;
  out.rotation_ = rotation_.transpose();
  out.translation_ = -(rotation_.transpose() * translation_);
  return out;
}

void FrustumSpec::validate() const {
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) {
    throw InvalidInput("frustum: fov must lie in (0, 180) degrees");
  }
  if (!(min_depth > 0.0 && min_depth < max_depth) || !std::isfinite(max_depth)) {
    throw InvalidInput("frustum: need 0 < min_depth < max_depth");
  }
}

Vec3 back_project(const Pixel& pixel, double depth,
                  const CameraIntrinsics& intrinsics, const Pose& pose) {
  if (!std::isfinite(depth) || !(depth > 0.0)) {
    throw InvalidInput("back_project: depth must be positive and finite");
  }
  const Vec3 ray((pixel.x - intrinsics.cx) / intrinsics.fx,
                 (pixel.y - intrinsics.cy) / intrinsics.fy, 1.0);
  return pose.apply(depth * ray);
}

Projection project(const Vec3& point, const CameraIntrinsics& intrinsics,
                   const Pose& pose) {
  const Vec3 c = pose.apply_inverse(point);
  Projection out;
  out.depth = c.z();
  if (c.z() <= 0.0) {
    out.behind_camera = true;
    return out;
  }
  out.pixel.x = intrinsics.fx * c.x() / c.z() + intrinsics.cx;
  out.pixel.y = intrinsics.fy * c.y() / c.z() + intrinsics.cy;
  return out;
}

FrustumTest::FrustumTest(const Pose& pose, const FrustumSpec& spec)
    : world_to_camera_(pose.rotation().transpose()),
      origin_(pose.translation()),
      cos_half_angle_(std::cos(deg_to_rad(spec.fov_deg) / 2.0)),
      min_depth_(spec.min_depth),
      max_depth_(spec.max_depth) {}

bool in_frustum(const Vec3& point, const Pose& pose, const FrustumSpec& spec) {
  return FrustumTest(pose, spec).contains(point);
}

Vec3 direction_from_yaw_pitch(double yaw_deg, double pitch_deg) {
  const double yaw = deg_to_rad(yaw_deg);
  const double pitch = deg_to_rad(pitch_deg);
  return Vec3(std::cos(pitch) * std::cos(yaw), std::cos(pitch) * std::sin(yaw),
              std::sin(pitch));
}

void yaw_pitch_from_direction(const Vec3& direction, double& yaw_deg,
                              double& pitch_deg) {
  const Vec3 d = direction.normalized();
  yaw_deg = rad_to_deg(std::atan2(d.y(), d.x()));
  if (yaw_deg < 0.0) yaw_deg += 360.0;
  if (yaw_deg >= 360.0) yaw_deg -= 360.0;
  pitch_deg = rad_to_deg(std::asin(std::clamp(d.z(), -1.0, 1.0)));
}

Pose pose_from_yaw_pitch(const Vec3& position, double yaw_deg,
                         double pitch_deg) {
  const double yaw = deg_to_rad(yaw_deg);
  const Vec3 forward = direction_from_yaw_pitch(yaw_deg, pitch_deg);
  // Right stays horizontal, so roll is always zero.
  const Vec3 right(std::sin(yaw), -std::cos(yaw), 0.0);
  const Vec3 down = forward.cross(right);
  Mat3 r;
  r.col(0) = right;
  r.col(1) = down;
  r.col(2) = forward;
  return Pose(r, position);
}

double angle_between_deg(const Vec3& a, const Vec3& b) {
  const double c = a.normalized().dot(b.normalized());
  return rad_to_deg(std::acos(std::clamp(c, -1.0, 1.0)));
}

}  // namespace nbv
