#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nbv/geometry.hpp"
#include "nbv/voxel_grid.hpp"

namespace nbv {

enum class Regime { kObject, kScene };

std::string_view to_string(Regime r);
// Throws InvalidInput for unknown names.
Regime regime_from_string(std::string_view name);

// Read-only occupancy used for ray casting.
struct OccupancyView {
  const VoxelGrid* grid = nullptr;
  std::span<const std::uint8_t> occupied;

  bool is_occupied(std::uint32_t v) const { return occupied[v] != 0; }
};

enum class SolidKind { kBox, kSphere, kLShape, kWall };

// Placed primitive; bounds are the axis-aligned footprint used for overlap
// checks.
struct Solid {
  SolidKind kind = SolidKind::kBox;
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
};

struct SceneSpec {
  std::uint64_t seed = 0;
  Regime regime = Regime::kObject;
  // Number of placed solids (object regime: 1..7).
  int complexity = 3;
  std::array<int, 3> dims{64, 64, 64};
  double voxel_size = 0.05;
};

// Ground-truth voxel geometry. Surface voxels are occupied voxels with at
// least one free in-grid 6-neighbor.
class OccupancyScene {
 public:
  OccupancyScene(const VoxelGrid& grid, std::vector<std::uint8_t> occupied,
                 Regime regime = Regime::kObject);

  const VoxelGrid& grid() const { return grid_; }
  Regime regime() const { return regime_; }
  std::span<const std::uint8_t> occupied() const { return occupied_; }
  std::span<const std::uint8_t> surface() const { return surface_; }
  bool is_occupied(std::uint32_t v) const { return occupied_[v] != 0; }
  bool is_surface(std::uint32_t v) const { return surface_[v] != 0; }
  std::size_t surface_count() const { return surface_count_; }
  std::size_t free_count() const;
  OccupancyView view() const { return {&grid_, occupied_}; }

  // Object regime: hemisphere resting on the plane, cameras look at target.
  // Scene regime: the room interior; cameras sit at camera_height.
  const Vec3& workspace_center() const { return workspace_center_; }
  double workspace_radius() const { return workspace_radius_; }
  const Vec3& look_target() const { return look_target_; }
  double camera_height() const { return camera_height_; }
  const std::vector<Solid>& solids() const { return solids_; }

  void set_workspace(const Vec3& center, double radius, const Vec3& target,
                     double camera_height);
  void set_solids(std::vector<Solid> solids) { solids_ = std::move(solids); }

  // FNV-1a over grid parameters and occupancy.
  std::uint64_t hash() const;

  bool operator==(const OccupancyScene& o) const {
    return grid_ == o.grid_ && occupied_ == o.occupied_;
  }

 private:
  VoxelGrid grid_;
  Regime regime_;
  std::vector<std::uint8_t> occupied_;
  std::vector<std::uint8_t> surface_;
  std::size_t surface_count_ = 0;
  Vec3 workspace_center_ = Vec3::Zero();
  double workspace_radius_ = 0.0;
  Vec3 look_target_ = Vec3::Zero();
  double camera_height_ = 0.0;
  std::vector<Solid> solids_;
};

// FNV-1a over grid parameters and occupancy bytes.
std::uint64_t occupancy_hash(const VoxelGrid& grid,
                             std::span<const std::uint8_t> occupied);

// Largest grid build_scene accepts per axis.
inline constexpr int kMaxSceneDim = 256;

// Object regime: `complexity` non-overlapping boxes, spheres and L-shapes on
// the z = 0 plane inside a hemisphere workspace. Scene regime: a walled room
// with floor, ceiling and `complexity` furniture blocks. Deterministic per
// seed. Throws SceneError when the request is infeasible.
OccupancyScene build_scene(const SceneSpec& spec);

// Number of 6-connected components of occupied voxels.
std::size_t count_components(const OccupancyScene& scene);

}  // namespace nbv
