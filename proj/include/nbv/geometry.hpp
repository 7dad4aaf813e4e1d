#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <numbers>

namespace nbv {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double deg_to_rad(double deg) {
  return deg * std::numbers::pi / 180.0;
}
inline constexpr double rad_to_deg(double rad) {
  return rad * 180.0 / std::numbers::pi;
}

// Pinhole intrinsics. Pixel (u, v) covers [u, u+1) x [v, v+1); its center is
// at (u + 0.5, v + 0.5).
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  // Throws InvalidInput when an invariant is violated.
  void validate() const;

  // Square-pixel camera whose image diagonal spans `diagonal_fov_deg`, so
  // the whole image lies inside a viewing cone of the same angle.
  static CameraIntrinsics from_diagonal_fov(int width, int height,
                                            double diagonal_fov_deg);
};

struct Pixel {
  double x = 0.0;
  double y = 0.0;
};

// Rigid camera-to-world transform. Camera frame: +z forward, +x right,
// +y down.
class Pose {
 public:
  Pose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  // Throws InvalidInput if `rotation` is not a proper rotation within 1e-6.
  Pose(const Mat3& rotation, const Vec3& translation);

  static Pose identity() { return Pose(); }

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  Vec3 forward() const { return rotation_.col(2); }

  // (this * other)(p) == this(other(p)).
  Pose compose(const Pose& other) const;
  Pose inverse() const;
  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  Vec3 apply_inverse(const Vec3& p) const {
    return rotation_.transpose() * (p - translation_);
  }

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

// Viewing cone: full apex angle `fov_deg`, camera-frame depth range
// [min_depth, max_depth] in meters.
struct FrustumSpec {
  double fov_deg = 90.0;
  double max_depth = 5.0;
  double min_depth = 0.05;

  void validate() const;
};

// World point of `pixel` at camera depth `depth`. Throws InvalidInput for
// non-positive or non-finite depth.
Vec3 back_project(const Pixel& pixel, double depth,
                  const CameraIntrinsics& intrinsics, const Pose& pose);

struct Projection {
  Pixel pixel;
  double depth = 0.0;
  bool behind_camera = false;
};

Projection project(const Vec3& point, const CameraIntrinsics& intrinsics,
                   const Pose& pose);

// Cone membership with the camera transform folded in once; the hot loops in
// decay and visibility use this directly.
class FrustumTest {
 public:
  FrustumTest(const Pose& pose, const FrustumSpec& spec);

  bool contains(const Vec3& point) const {
    const Vec3 c = world_to_camera_ * (point - origin_);
    const double z = c.z();
    if (z < min_depth_ || z > max_depth_) return false;
    return z >= c.norm() * cos_half_angle_;
  }

 private:
  Mat3 world_to_camera_;
  Vec3 origin_;
  double cos_half_angle_;
  double min_depth_;
  double max_depth_;
};

bool in_frustum(const Vec3& point, const Pose& pose, const FrustumSpec& spec);

// World z is up. Yaw rotates about +z starting at +x; positive pitch looks up.
Vec3 direction_from_yaw_pitch(double yaw_deg, double pitch_deg);
// Yaw normalized to [0, 360), pitch in [-90, 90].
void yaw_pitch_from_direction(const Vec3& direction, double& yaw_deg,
                              double& pitch_deg);
Pose pose_from_yaw_pitch(const Vec3& position, double yaw_deg,
                         double pitch_deg);

// Smallest angle between two directions, in degrees.
double angle_between_deg(const Vec3& a, const Vec3& b);

}  // namespace nbv
