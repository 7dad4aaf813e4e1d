#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "nbv/error.hpp"
#include "nbv/io.hpp"
#include "nbv/render.hpp"
#include "nbv/scene.hpp"
#include "nbv/semantic.hpp"

using namespace nbv;

namespace {

OccupancyScene wall_scene() {
  // 10^3 unit voxels with a solid slab at x = 6.
  const VoxelGrid g(Vec3::Zero(), 1.0, {10, 10, 10});
  std::vector<std::uint8_t> occ(g.size(), 0);
  for (int y = 0; y < 10; ++y)
    for (int z = 0; z < 10; ++z) occ[g.linear(Index3(6, y, z))] = 1;
  return OccupancyScene(g, std::move(occ));
}

}  // namespace

TEST(Scene, SurfaceVoxelsHaveAFreeNeighbor) {
  const VoxelGrid g(Vec3::Zero(), 1.0, {5, 5, 5});
  std::vector<std::uint8_t> occ(g.size(), 0);
  for (int x = 1; x < 4; ++x)
    for (int y = 1; y < 4; ++y)
      for (int z = 1; z < 4; ++z) occ[g.linear(Index3(x, y, z))] = 1;
  const OccupancyScene s(g, occ);
  // A 3x3x3 cube: all but the center voxel are surface.
  EXPECT_EQ(s.surface_count(), 26u);
  EXPECT_FALSE(s.is_surface(g.linear(Index3(2, 2, 2))));
  EXPECT_EQ(s.free_count(), 125u - 27u);
  EXPECT_EQ(count_components(s), 1u);
}

TEST(Scene, HashTracksOccupancy) {
  const OccupancyScene a = wall_scene();
  std::vector<std::uint8_t> occ(a.occupied().begin(), a.occupied().end());
  occ[0] = 1;
  const OccupancyScene b(a.grid(), occ);
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(a.hash(), occupancy_hash(a.grid(), a.occupied()));
}

TEST(Scene, BuildIsDeterministicPerSeed) {
  SceneSpec spec;
  spec.seed = 11;
  spec.dims = {48, 48, 32};
  const OccupancyScene a = build_scene(spec);
  const OccupancyScene b = build_scene(spec);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.hash(), b.hash());
  spec.seed = 12;
  EXPECT_NE(build_scene(spec).hash(), a.hash());
}

TEST(Scene, ObjectRegimeRespectsComplexity) {
  for (int c = 1; c <= 7; ++c) {
    SceneSpec spec;
    spec.seed = 3;
    spec.complexity = c;
    const OccupancyScene s = build_scene(spec);
    EXPECT_EQ(s.solids().size(), static_cast<std::size_t>(c));
    EXPECT_GT(s.surface_count(), 0u);
    // Solids rest on the ground plane.
    for (const auto& solid : s.solids()) {
      EXPECT_GE(solid.min.z(), -1e-9);
    }
  }
  SceneSpec bad;
  bad.complexity = 0;
  EXPECT_THROW(build_scene(bad), Error);
}

TEST(Scene, RoomRegimeHasWallsAndFurniture) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    SceneSpec spec;
    spec.seed = seed;
    spec.regime = Regime::kScene;
    spec.complexity = 6;
    spec.dims = {64, 64, 32};
    spec.voxel_size = 0.1;
    const OccupancyScene s = build_scene(spec);
    EXPECT_EQ(s.regime(), Regime::kScene);
    EXPECT_GT(s.camera_height(), 0.0);
    // The camera height plane at the workspace center is free.
    const auto v = s.grid().locate(
        Vec3(s.workspace_center().x(), s.workspace_center().y(), s.camera_height()));
    ASSERT_TRUE(v.has_value());
    EXPECT_FALSE(s.is_occupied(*v));
  }
}

TEST(Render, DepthOfAFlatWall) {
  const OccupancyScene s = wall_scene();
  const auto K = CameraIntrinsics::from_diagonal_fov(16, 12, 60.0);
  const Pose pose = pose_from_yaw_pitch(Vec3(1.5, 5.0, 5.0), 0.0, 0.0);
  RenderOptions opt;
  opt.max_depth = 20.0;
  const DepthRender r = render_depth(pose, K, s, opt);
  // The slab face is the plane x = 6, so camera depth is 4.5 for every pixel;
  // hits are nudged 1e-3 voxel along the ray to land inside the hit voxel.
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 16; ++x) {
      EXPECT_GE(r.depth.at(x, y), 4.5);
      EXPECT_LE(r.depth.at(x, y), 4.5 + 1e-3);
      EXPECT_GT(r.confidence.at(x, y), 0.0);
    }
  // The central ray hits head on; corner rays are more oblique.
  EXPECT_GT(r.incidence.at(8, 6), r.incidence.at(0, 0));
}

TEST(Render, MissesAreInfiniteWithZeroConfidence) {
  const OccupancyScene s = wall_scene();
  const auto K = CameraIntrinsics::from_diagonal_fov(8, 6, 60.0);
  const Pose away = pose_from_yaw_pitch(Vec3(1.5, 5.0, 5.0), 180.0, 0.0);
  const DepthRender r = render_depth(away, K, s);
  for (std::size_t i = 0; i < r.depth.size(); ++i) {
    EXPECT_TRUE(std::isinf(r.depth.data[i]));
    EXPECT_EQ(r.confidence.data[i], 0.0);
  }
  RenderOptions near;
  near.max_depth = 3.0;
  const Pose toward = pose_from_yaw_pitch(Vec3(1.5, 5.0, 5.0), 0.0, 0.0);
  EXPECT_TRUE(std::isinf(render_depth(toward, K, s, near).depth.at(4, 3)));
  EXPECT_THROW(render_depth(pose_from_yaw_pitch(Vec3(6.5, 5, 5), 0, 0), K, s), SceneError);
}

TEST(Render, SyntheticReportParses) {
  SceneSpec spec;
  spec.seed = 5;
  spec.complexity = 4;
  const OccupancyScene s = build_scene(spec);
  const auto K = CameraIntrinsics::from_diagonal_fov(64, 48, 90.0);
  const Vec3 eye = s.look_target() + Vec3(s.workspace_radius(), 0, 0.5);
  Vec3 d = s.look_target() - eye;
  double yaw = 0, pitch = 0;
  yaw_pitch_from_direction(d, yaw, pitch);
  const DepthRender r = render_depth(pose_from_yaw_pitch(eye, yaw, pitch), K, s);
  const std::string report = synth_semantic_report(r);
  const ParseResult p = parse_regions(report);
  EXPECT_EQ(p.diagnostics, 0u);
  EXPECT_GE(p.regions.size(), 5u);
  EXPECT_LE(p.regions.size(), 8u);
  EXPECT_EQ(report, synth_semantic_report(r));
}

TEST(Io, AtomicWriteAndFormatting) {
  const auto dir = std::filesystem::temp_directory_path() / "nbv_io_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "a.txt").string();
  write_file_atomic(path, "hello");
  write_file_atomic(path, "world");
  EXPECT_EQ(read_file(path), "world");
  EXPECT_THROW(read_file((dir / "missing").string()), IoError);
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
  std::filesystem::remove_all(dir);
}
