#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>

#include "nbv/geometry.hpp"

namespace nbv {

using Index3 = Eigen::Vector3i;

// Axis-aligned regular grid. Linear index = x + nx * (y + ny * z), i.e. x
// varies fastest (row-major over z, y, x).
class VoxelGrid {
 public:
  VoxelGrid() = default;
  // Throws InvalidInput unless voxel_size > 0 and all dims >= 1.
  VoxelGrid(const Vec3& origin, double voxel_size, const std::array<int, 3>& dims);

  const Vec3& origin() const { return origin_; }
  double voxel_size() const { return voxel_size_; }
  const std::array<int, 3>& dims() const { return dims_; }
  std::size_t size() const {
    return static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
  }
  Vec3 extent() const {
    return Vec3(dims_[0], dims_[1], dims_[2]) * voxel_size_;
  }
  Vec3 max_corner() const { return origin_ + extent(); }
  double diagonal() const { return extent().norm(); }

  bool contains(const Index3& i) const {
    return i.x() >= 0 && i.y() >= 0 && i.z() >= 0 && i.x() < dims_[0] &&
           i.y() < dims_[1] && i.z() < dims_[2];
  }
  std::uint32_t linear(const Index3& i) const {
    return static_cast<std::uint32_t>(i.x() +
                                      dims_[0] * (i.y() + dims_[1] * i.z()));
  }
  Index3 unlinear(std::uint32_t idx) const {
    const int x = static_cast<int>(idx % dims_[0]);
    const int rest = static_cast<int>(idx / dims_[0]);
    return Index3(x, rest % dims_[1], rest / dims_[1]);
  }
  Vec3 center(const Index3& i) const {
    return origin_ + (i.cast<double>() + Vec3::Constant(0.5)) * voxel_size_;
  }
  Vec3 center(std::uint32_t idx) const { return center(unlinear(idx)); }

  // Voxel containing `p` (cells are half-open), even when outside the grid.
  Index3 cell_of(const Vec3& p) const {
    const Vec3 q = (p - origin_) / voxel_size_;
    return Index3(static_cast<int>(std::floor(q.x())),
                  static_cast<int>(std::floor(q.y())),
                  static_cast<int>(std::floor(q.z())));
  }
  std::optional<std::uint32_t> locate(const Vec3& p) const {
    if (!p.allFinite()) return std::nullopt;
    const Index3 c = cell_of(p);
    if (!contains(c)) return std::nullopt;
    return linear(c);
  }

  bool operator==(const VoxelGrid& o) const {
    return origin_ == o.origin_ && voxel_size_ == o.voxel_size_ &&
           dims_ == o.dims_;
  }

 private:
  Vec3 origin_ = Vec3::Zero();
  double voxel_size_ = 1.0;
  std::array<int, 3> dims_{1, 1, 1};
};

// Amanatides-Woo traversal. Calls visit(voxel, cell, t_enter, entry_axis) for
// every voxel the ray crosses, in order, starting with the voxel containing
// the (clipped) origin; entry_axis is -1 for that first voxel. Traversal stops
// when visit returns false, the ray leaves the grid, or t exceeds t_max.
// `direction` must be unit length.
template <typename Visit>
void traverse_ray(const VoxelGrid& grid, const Vec3& origin,
                  const Vec3& direction, double t_max, Visit&& visit) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const Vec3 lo = grid.origin();
  const Vec3 hi = grid.max_corner();

  // Clip against the grid box.
  double t0 = 0.0;
  double t1 = t_max;
  for (int a = 0; a < 3; ++a) {
    if (direction[a] == 0.0) {
      if (origin[a] < lo[a] || origin[a] >= hi[a]) return;
      continue;
    }
    double ta = (lo[a] - origin[a]) / direction[a];
    double tb = (hi[a] - origin[a]) / direction[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 > t1) return;

  const Vec3 start = origin + t0 * direction;
  Index3 cell = grid.cell_of(start);
  const auto& dims = grid.dims();
  for (int a = 0; a < 3; ++a) cell[a] = std::clamp(cell[a], 0, dims[a] - 1);

  const double vs = grid.voxel_size();
  Index3 step;
  Vec3 t_next;
  Vec3 t_delta;
  for (int a = 0; a < 3; ++a) {
    if (direction[a] > 0.0) {
      step[a] = 1;
      const double boundary = lo[a] + (cell[a] + 1) * vs;
      t_next[a] = (boundary - origin[a]) / direction[a];
      t_delta[a] = vs / direction[a];
    } else if (direction[a] < 0.0) {
      step[a] = -1;
      const double boundary = lo[a] + cell[a] * vs;
      t_next[a] = (boundary - origin[a]) / direction[a];
      t_delta[a] = -vs / direction[a];
    } else {
      step[a] = 0;
      t_next[a] = kInf;
      t_delta[a] = kInf;
    }
  }

  double t_enter = t0;
  int axis = -1;
  while (true) {
    if (!visit(grid.linear(cell), cell, t_enter, axis)) return;
    int a = 0;
    if (t_next[1] < t_next[a]) a = 1;
    if (t_next[2] < t_next[a]) a = 2;
    t_enter = t_next[a];
    if (t_enter > t1) return;
    cell[a] += step[a];
    if (cell[a] < 0 || cell[a] >= dims[a]) return;
    t_next[a] += t_delta[a];
    axis = a;
  }
}

}  // namespace nbv
