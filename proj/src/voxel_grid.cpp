#include "nbv/voxel_grid.hpp"

#include "nbv/error.hpp"

namespace nbv {

VoxelGrid::VoxelGrid(const Vec3& origin, double voxel_size,
                     const std::array<int, 3>& dims)
    : origin_(origin), voxel_size_(voxel_size), dims_(dims) {
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size) || !origin.allFinite()) {
    throw InvalidInput("voxel grid: voxel_size must be positive");
  }
  for (int d : dims) {
    if (d < 1) throw InvalidInput("voxel grid: dims must be positive");
  }
  if (size() > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidInput("voxel grid: too many voxels");
  }
}

}  // namespace nbv
