#include <gtest/gtest.h>

#include <cmath>

#include "nbv/error.hpp"
#include "nbv/geometry.hpp"
#include "nbv/rng.hpp"

using namespace nbv;

TEST(Intrinsics, DiagonalFovGivesFocalLength) {
  // 64x48 image: half diagonal is 40 px, so a 90 degree diagonal FOV means f = 40.
  const auto K = CameraIntrinsics::from_diagonal_fov(64, 48, 90.0);
  EXPECT_NEAR(K.fx, 40.0, 1e-12);
  EXPECT_NEAR(K.fy, 40.0, 1e-12);
  EXPECT_DOUBLE_EQ(K.cx, 32.0);
  EXPECT_DOUBLE_EQ(K.cy, 24.0);
}

TEST(Intrinsics, RejectsBadValues) {
  CameraIntrinsics K;
  K.fx = -1.0;
  EXPECT_THROW(K.validate(), InvalidInput);
  EXPECT_THROW(CameraIntrinsics::from_diagonal_fov(0, 10, 90.0), InvalidInput);
  EXPECT_THROW(CameraIntrinsics::from_diagonal_fov(10, 10, 180.0), InvalidInput);
}

TEST(Pose, RejectsNonRotation) {
  Mat3 m = Mat3::Identity();
  m(0, 0) = 2.0;
  EXPECT_THROW(Pose(m, Vec3::Zero()), InvalidInput);
  Mat3 reflect = Mat3::Identity();
  reflect(2, 2) = -1.0;
  EXPECT_THROW(Pose(reflect, Vec3::Zero()), InvalidInput);
}

TEST(Pose, ComposeAndInverse) {
  const Pose a = pose_from_yaw_pitch(Vec3(1, 2, 3), 30.0, -10.0);
  const Pose b = pose_from_yaw_pitch(Vec3(-1, 0, 2), 200.0, 25.0);
  const Vec3 p(0.3, -0.7, 1.1);
  EXPECT_TRUE(a.compose(b).apply(p).isApprox(a.apply(b.apply(p)), 1e-12));
  EXPECT_TRUE(a.inverse().apply(a.apply(p)).isApprox(p, 1e-12));
  EXPECT_TRUE(a.apply_inverse(a.apply(p)).isApprox(p, 1e-12));
}

TEST(Projection, RoundTripsBackProjection) {
  const auto K = CameraIntrinsics::from_diagonal_fov(64, 48, 90.0);
  const Pose pose = pose_from_yaw_pitch(Vec3(0.5, 0.5, 1.0), 75.0, -20.0);
  const Vec3 w = back_project({10.5, 30.5}, 2.5, K, pose);
  const Projection pr = project(w, K, pose);
  EXPECT_FALSE(pr.behind_camera);
  EXPECT_NEAR(pr.pixel.x, 10.5, 1e-9);
  EXPECT_NEAR(pr.pixel.y, 30.5, 1e-9);
  EXPECT_NEAR(pr.depth, 2.5, 1e-12);
  EXPECT_THROW(back_project({1, 1}, 0.0, K, pose), InvalidInput);
  EXPECT_THROW(back_project({1, 1}, NAN, K, pose), InvalidInput);
}

TEST(Projection, PointBehindCameraIsFlagged) {
  const auto K = CameraIntrinsics::from_diagonal_fov(64, 48, 90.0);
  const Pose pose = pose_from_yaw_pitch(Vec3::Zero(), 0.0, 0.0);
  EXPECT_TRUE(project(Vec3(-1, 0, 0), K, pose).behind_camera);
}

TEST(Orientation, CameraAxesFollowConvention) {
  // Yaw 0 looks along +x; camera +x (right) is then world -y and +y (down) is -z.
  const Pose p = pose_from_yaw_pitch(Vec3::Zero(), 0.0, 0.0);
  EXPECT_TRUE(p.forward().isApprox(Vec3(1, 0, 0), 1e-12));
  EXPECT_TRUE((p.rotation() * Vec3(1, 0, 0)).isApprox(Vec3(0, -1, 0), 1e-12));
  EXPECT_TRUE((p.rotation() * Vec3(0, 1, 0)).isApprox(Vec3(0, 0, -1), 1e-12));
  EXPECT_TRUE(direction_from_yaw_pitch(90.0, 0.0).isApprox(Vec3(0, 1, 0), 1e-12));
  EXPECT_GT(direction_from_yaw_pitch(0.0, 30.0).z(), 0.0);
}

TEST(Orientation, YawPitchRoundTrip) {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const double yaw = rng.uniform(0.0, 360.0);
    const double pitch = rng.uniform(-89.0, 89.0);
    double y2 = 0, p2 = 0;
    yaw_pitch_from_direction(direction_from_yaw_pitch(yaw, pitch), y2, p2);
    EXPECT_NEAR(y2, yaw, 1e-9);
    EXPECT_NEAR(p2, pitch, 1e-9);
  }
}

TEST(Frustum, ConeAndDepthRange) {
  const Pose pose = pose_from_yaw_pitch(Vec3::Zero(), 0.0, 0.0);
  const FrustumSpec spec{90.0, 5.0, 0.05};
  EXPECT_TRUE(in_frustum(Vec3(1, 0, 0), pose, spec));
  EXPECT_TRUE(in_frustum(Vec3(1, 0.99, 0), pose, spec));   // just inside 45 degrees
  EXPECT_FALSE(in_frustum(Vec3(1, 1.01, 0), pose, spec));  // just outside
  EXPECT_FALSE(in_frustum(Vec3(-1, 0, 0), pose, spec));
  EXPECT_FALSE(in_frustum(Vec3(5.01, 0, 0), pose, spec));
  EXPECT_FALSE(in_frustum(Vec3(0.01, 0, 0), pose, spec));
  // The cone is circular: a diagonal direction at 44 degrees is inside.
  const Vec3 d = Vec3(std::cos(deg_to_rad(44.0)), std::sin(deg_to_rad(44.0)) / std::sqrt(2.0),
                      std::sin(deg_to_rad(44.0)) / std::sqrt(2.0));
  EXPECT_TRUE(in_frustum(2.0 * d, pose, spec));
}

TEST(Frustum, ValidateRejectsBadSpecs) {
  EXPECT_THROW((FrustumSpec{0.0, 5.0, 0.05}.validate()), InvalidInput);
  EXPECT_THROW((FrustumSpec{90.0, 0.01, 0.05}.validate()), InvalidInput);
  EXPECT_THROW((FrustumSpec{180.0, 5.0, 0.05}.validate()), InvalidInput);
}

TEST(Angles, AngleBetween) {
  EXPECT_NEAR(angle_between_deg(Vec3(1, 0, 0), Vec3(0, 1, 0)), 90.0, 1e-12);
  EXPECT_NEAR(angle_between_deg(Vec3(1, 0, 0), Vec3(2, 0, 0)), 0.0, 1e-6);
  EXPECT_NEAR(angle_between_deg(Vec3(1, 0, 0), Vec3(-1, 0, 0)), 180.0, 1e-6);
}

TEST(Rng, StreamsAreIndependentAndStable) {
  EXPECT_NE(derive_seed(1, "scene"), derive_seed(1, "mc"));
  EXPECT_EQ(derive_seed(1, "scene"), derive_seed(1, "scene"));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.uniform(), b.uniform());
  Rng c(5);
  for (int i = 0; i < 1000; ++i) {
    const auto k = c.below(7);
    EXPECT_LT(k, 7u);
    const double u = c.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}
