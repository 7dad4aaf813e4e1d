#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "nbv/error.hpp"
#include "nbv/voxel_field.hpp"
#include "nbv/voxel_grid.hpp"

using namespace nbv;

namespace {

VoxelGrid unit_grid(int n) { return VoxelGrid(Vec3::Zero(), 1.0, {n, n, n}); }

std::vector<std::uint32_t> ray_cells(const VoxelGrid& g, const Vec3& o, const Vec3& d,
                                     double t_max) {
  std::vector<std::uint32_t> out;
  traverse_ray(g, o, d.normalized(), t_max, [&](std::uint32_t v, const Index3&, double, int) {
    out.push_back(v);
    return true;
  });
  return out;
}

}  // namespace

TEST(VoxelGrid, IndexingRoundTrips) {
  const VoxelGrid g(Vec3(-1, -2, 0.5), 0.25, {4, 5, 6});
  EXPECT_EQ(g.size(), 120u);
  for (std::uint32_t i = 0; i < g.size(); ++i) EXPECT_EQ(g.linear(g.unlinear(i)), i);
  EXPECT_EQ(g.linear(Index3(1, 0, 0)), 1u);
  EXPECT_EQ(g.linear(Index3(0, 1, 0)), 4u);
  EXPECT_EQ(g.linear(Index3(0, 0, 1)), 20u);
  EXPECT_TRUE(g.center(Index3(0, 0, 0)).isApprox(Vec3(-0.875, -1.875, 0.625)));
  EXPECT_EQ(g.locate(g.center(37u)).value(), 37u);
  EXPECT_FALSE(g.locate(Vec3(-1.01, 0, 1)).has_value());
  EXPECT_FALSE(g.locate(Vec3(NAN, 0, 1)).has_value());
  // Cells are half-open: the max corner is outside.
  EXPECT_FALSE(g.locate(g.max_corner()).has_value());
}

TEST(VoxelGrid, RejectsBadShape) {
  EXPECT_THROW(VoxelGrid(Vec3::Zero(), 0.0, {1, 1, 1}), InvalidInput);
  EXPECT_THROW(VoxelGrid(Vec3::Zero(), 1.0, {0, 1, 1}), InvalidInput);
}

TEST(Traversal, AxisAlignedRayVisitsEveryCellInOrder) {
  const VoxelGrid g = unit_grid(5);
  const auto cells = ray_cells(g, Vec3(0.5, 2.5, 2.5), Vec3(1, 0, 0), 100.0);
  ASSERT_EQ(cells.size(), 5u);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(cells[i], g.linear(Index3(i, 2, 2)));
}

TEST(Traversal, RayFromOutsideIsClipped) {
  const VoxelGrid g = unit_grid(4);
  const auto cells = ray_cells(g, Vec3(-3.0, 1.5, 1.5), Vec3(1, 0, 0), 100.0);
  ASSERT_EQ(cells.size(), 4u);
  EXPECT_EQ(cells.front(), g.linear(Index3(0, 1, 1)));
  EXPECT_TRUE(ray_cells(g, Vec3(-3.0, 1.5, 1.5), Vec3(-1, 0, 0), 100.0).empty());
  // t_max short of the grid means nothing is visited.
  EXPECT_TRUE(ray_cells(g, Vec3(-3.0, 1.5, 1.5), Vec3(1, 0, 0), 2.0).empty());
}

TEST(Traversal, DiagonalRayCellsAreFaceConnected) {
  const VoxelGrid g = unit_grid(8);
  const Vec3 o(0.3, 0.6, 0.1);
  const auto cells = ray_cells(g, o, Vec3(1.0, 0.7, 0.9), 100.0);
  ASSERT_GE(cells.size(), 8u);
  for (std::size_t i = 1; i < cells.size(); ++i) {
    const Index3 d = g.unlinear(cells[i]) - g.unlinear(cells[i - 1]);
    EXPECT_EQ(d.cwiseAbs().sum(), 1);
  }
  // Every sampled point along the ray lies in a visited cell.
  const Vec3 dir = Vec3(1.0, 0.7, 0.9).normalized();
  for (double t = 0.0; t < 20.0; t += 0.01) {
    const auto v = g.locate(o + t * dir);
    if (!v) break;
    EXPECT_NE(std::find(cells.begin(), cells.end(), *v), cells.end());
  }
}

TEST(Traversal, StopsWhenVisitorReturnsFalse) {
  const VoxelGrid g = unit_grid(6);
  int n = 0;
  traverse_ray(g, Vec3(0.5, 0.5, 0.5), Vec3(1, 0, 0), 100.0,
               [&](std::uint32_t, const Index3&, double, int) { return ++n < 3; });
  EXPECT_EQ(n, 3);
}

TEST(Normalize, MinMaxOverValidEntries) {
  const std::vector<double> raw{2.0, 4.0, 3.0, 100.0};
  const std::vector<std::uint8_t> valid{1, 1, 1, 0};
  const auto n = normalize_confidence(raw, valid);
  ASSERT_EQ(n.size(), 4u);
  EXPECT_DOUBLE_EQ(n[0], 0.0);
  EXPECT_DOUBLE_EQ(n[1], 1.0);
  EXPECT_DOUBLE_EQ(n[2], 0.5);
  EXPECT_DOUBLE_EQ(n[3], 0.0);
}

TEST(Normalize, ConstantFrameAndEmpty) {
  const std::vector<double> raw{0.3, 0.3, 0.3};
  for (double x : normalize_confidence(raw)) EXPECT_DOUBLE_EQ(x, 1.0);
  const std::vector<std::uint8_t> none{0, 0, 0};
  EXPECT_TRUE(normalize_confidence(raw, none).empty());
}

TEST(Splat, MinAggregationAcrossFrames) {
  const VoxelGrid g = unit_grid(8);
  GeometricField f(g);
  const auto K = CameraIntrinsics::from_diagonal_fov(4, 4, 60.0);
  const Pose pose = pose_from_yaw_pitch(Vec3(0.5, 4.0, 4.0), 0.0, 0.0);
  ImageD depth(4, 4, 4.2);
  ImageD conf(4, 4, 0.25);
  splat_normalized(depth, conf, pose, K, f);
  std::size_t observed = 0;
  for (std::uint32_t v = 0; v < g.size(); ++v) {
    if (!f.observed(v)) continue;
    ++observed;
    EXPECT_DOUBLE_EQ(f.uncertainty()[v], 0.75);
  }
  EXPECT_GT(observed, 0u);
  // A less confident frame never raises uncertainty; a more confident one lowers it.
  splat_normalized(depth, ImageD(4, 4, 0.1), pose, K, f);
  for (std::uint32_t v = 0; v < g.size(); ++v)
    if (f.observed(v)) EXPECT_DOUBLE_EQ(f.uncertainty()[v], 0.75);
  splat_normalized(depth, ImageD(4, 4, 0.9), pose, K, f);
  for (std::uint32_t v = 0; v < g.size(); ++v)
    if (f.observed(v)) EXPECT_NEAR(f.uncertainty()[v], 0.1, 1e-12);
}

TEST(Splat, InvalidDepthAndOutOfGridAreDropped) {
  const VoxelGrid g = unit_grid(4);
  GeometricField f(g);
  const auto K = CameraIntrinsics::from_diagonal_fov(2, 2, 60.0);
  const Pose pose = pose_from_yaw_pitch(Vec3(0.5, 2.0, 2.0), 0.0, 0.0);
  ImageD depth(2, 2);
  depth.at(0, 0) = 0.0;
  depth.at(1, 0) = std::numeric_limits<double>::quiet_NaN();
  depth.at(0, 1) = -1.0;
  depth.at(1, 1) = 50.0;  // lands outside the grid
  splat_normalized(depth, ImageD(2, 2, 1.0), pose, K, f);
  for (std::uint32_t v = 0; v < g.size(); ++v) EXPECT_FALSE(f.observed(v));
  EXPECT_THROW(splat_normalized(depth, ImageD(3, 2, 1.0), pose, K, f), InvalidInput);
}

TEST(Fuse, WeightedSumPlusFloor) {
  const VoxelGrid g = unit_grid(2);
  GeometricField geo(g);
  geo.observe(0, 0.4);
  std::vector<double> sem(g.size(), 0.0);
  sem[0] = 1.0;
  sem[1] = 0.5;
  const FusionWeights w{0.5, 0.5, 0.01, 0.0};
  const FusedField f = fuse(geo, sem, w);
  EXPECT_DOUBLE_EQ(f.utility(0), 0.5 * 0.4 + 0.5 * 1.0 + 0.01);
  EXPECT_DOUBLE_EQ(f.utility(1), 0.5 * 0.0 + 0.5 * 0.5 + 0.01);
  EXPECT_DOUBLE_EQ(f.utility(2), 0.01);
  FusionWeights sentinel = w;
  sentinel.unobserved_geo = 1.0;
  EXPECT_DOUBLE_EQ(fuse(geo, sem, sentinel).utility(2), 0.5 + 0.01);
  EXPECT_THROW(fuse(geo, std::vector<double>(3, 0.0), w), InvalidInput);
  EXPECT_THROW(fuse(geo, sem, FusionWeights{-0.1, 0.5, 0.01, 0.0}), InvalidInput);
}

TEST(Decay, ScalesOnlyVoxelsInsideTheCone) {
  const VoxelGrid g(Vec3::Zero(), 0.5, {10, 10, 10});
  GeometricField geo(g);
  const std::vector<double> sem(g.size(), 1.0);
  FusedField f = fuse(geo, sem, FusionWeights{0.5, 0.5, 0.0, 0.0});
  const Pose pose = pose_from_yaw_pitch(Vec3(-1.0, 2.5, 2.5), 0.0, 0.0);
  const FrustumSpec spec{40.0, 4.0, 0.05};
  const std::size_t scaled = f.apply_decay(pose, spec, 0.3);
  std::size_t expected = 0;
  for (std::uint32_t v = 0; v < g.size(); ++v) {
    if (in_frustum(g.center(v), pose, spec)) {
      ++expected;
      EXPECT_DOUBLE_EQ(f.utility(v), 0.5 * 0.7);
      EXPECT_EQ(f.decay_count()[v], 1);
    } else {
      EXPECT_DOUBLE_EQ(f.utility(v), 0.5);
      EXPECT_EQ(f.decay_count()[v], 0);
    }
  }
  EXPECT_EQ(scaled, expected);
  EXPECT_GT(expected, 0u);
  EXPECT_THROW(f.apply_decay(pose, spec, 0.0), InvalidInput);
  EXPECT_THROW(f.apply_decay(pose, spec, 1.0), InvalidInput);
}

TEST(Decay, RaiseRejectsNegative) {
  const VoxelGrid g = unit_grid(2);
  FusedField f = fuse(GeometricField(g), std::vector<double>(g.size(), 0.0), FusionWeights{});
  f.raise(3, 0.2);
  EXPECT_DOUBLE_EQ(f.utility(3), 0.21);
  EXPECT_THROW(f.raise(3, -0.1), InvalidInput);
  EXPECT_THROW(f.raise(3, NAN), InvalidInput);
}

TEST(Snapshot, RoundTripsThroughStream) {
  const VoxelGrid g(Vec3(1, 2, 3), 0.5, {3, 2, 4});
  std::vector<double> values(g.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = 0.125 * i;
  std::stringstream ss;
  write_field_snapshot(ss, g, values);
  EXPECT_EQ(ss.str().size(), 4u * (3 + 1 + 3) + 4u * g.size());
  const FieldSnapshot s = read_field_snapshot(ss);
  EXPECT_TRUE(s.origin.isApprox(Vec3(1, 2, 3)));
  EXPECT_DOUBLE_EQ(s.voxel_size, 0.5);
  EXPECT_EQ(s.dims, (std::array<int, 3>{3, 2, 4}));
  ASSERT_EQ(s.values.size(), g.size());
  for (std::size_t i = 0; i < values.size(); ++i) EXPECT_FLOAT_EQ(s.values[i], 0.125f * i);
}
