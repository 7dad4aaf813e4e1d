#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nbv/geometry.hpp"
#include "nbv/image.hpp"
#include "nbv/voxel_grid.hpp"

namespace nbv {

// Concurrency: fields are single-writer. splat_* and apply_decay mutate and
// need exclusive access; scoring may read concurrently between mutations.
// Interleaving a read with a mutation is a contract violation.

// Per-voxel geometric uncertainty in [0, 1]. Voxels that were never splatted
// hold 1.0 with an observation count of 0.
class GeometricField {
 public:
  explicit GeometricField(const VoxelGrid& grid);

  const VoxelGrid& grid() const { return grid_; }
  std::span<const double> uncertainty() const { return uncertainty_; }
  std::span<const std::uint32_t> observation_count() const { return count_; }
  bool observed(std::uint32_t v) const { return count_[v] > 0; }

  // Min-aggregates one observation into voxel v.
  void observe(std::uint32_t v, double uncertainty);

  bool operator==(const GeometricField& o) const {
    return grid_ == o.grid_ && uncertainty_ == o.uncertainty_ &&
           count_ == o.count_;
  }

 private:
  VoxelGrid grid_;
  std::vector<double> uncertainty_;
  std::vector<std::uint32_t> count_;
};

// Min-max normalization over valid entries (all entries when `valid` is
// empty). A constant frame maps to 1.0. Invalid entries come back as 0. If no
// entry is valid the result is empty.
std::vector<double> normalize_confidence(std::span<const double> raw,
                                         std::span<const std::uint8_t> valid = {});

// Splats already-normalized confidence: each pixel with finite positive depth
// lands in the voxel containing its back-projected point, whose uncertainty
// becomes min(previous, 1 - confidence). Out-of-grid points are dropped.
// Throws InvalidInput on shape mismatch.
void splat_normalized(const ImageD& depth, const ImageD& confidence01,
                      const Pose& pose, const CameraIntrinsics& intrinsics,
                      GeometricField& field);

// normalize_confidence over the frame's valid pixels, then splat_normalized.
void splat_confidence(const ImageD& depth, const ImageD& raw_confidence,
                      const Pose& pose, const CameraIntrinsics& intrinsics,
                      GeometricField& field);

struct FusionWeights {
  double w_g = 0.5;
  double w_s = 0.5;
  double gamma = 0.01;
  // Geometric term used for voxels no frame has observed. 0 means unseen space
  // is carried by gamma alone.
  double unobserved_geo = 0.0;
};

// utility(v) = w_g * geo(v) + w_s * sem(v) + gamma, then scaled by every
// frustum decay applied since fusion.
class FusedField {
 public:
  FusedField(const VoxelGrid& grid, std::vector<double> utility,
             const FusionWeights& weights);

  const VoxelGrid& grid() const { return grid_; }
  const FusionWeights& weights() const { return weights_; }
  std::span<const double> utility() const { return utility_; }
  double utility(std::uint32_t v) const { return utility_[v]; }
  std::span<const std::uint16_t> decay_count() const { return decay_count_; }
  double total() const;

  // Returns the number of voxels scaled.
  std::size_t apply_decay(const Pose& pose, const FrustumSpec& spec, double eta);

  // Adds delta >= 0 to one voxel; used when new semantic evidence arrives
  // after fusion. Throws InvalidInput on a negative or non-finite delta.
  void raise(std::uint32_t v, double delta);

 private:
  VoxelGrid grid_;
  std::vector<double> utility_;
  std::vector<std::uint16_t> decay_count_;
  FusionWeights weights_;
};

// Throws InvalidInput on a grid/size mismatch or negative weights.
FusedField fuse(const GeometricField& geo, std::span<const double> semantic,
                const FusionWeights& weights);

// Scales every voxel whose center passes in_frustum by (1 - eta); all other
// voxels are left untouched. Throws InvalidInput unless 0 < eta < 1.
std::size_t apply_decay(FusedField& field, const Pose& pose,
                        const FrustumSpec& spec, double eta);

// Flat little-endian snapshot: origin (3 x f32), voxel_size (f32), dims
// (3 x u32), then one f32 per voxel in linear-index order.
void write_field_snapshot(std::ostream& out, const VoxelGrid& grid,
                          std::span<const double> values);
void write_field_snapshot(const std::string& path, const VoxelGrid& grid,
                          std::span<const double> values);

struct FieldSnapshot {
  Vec3 origin;
  double voxel_size = 0.0;
  std::array<int, 3> dims{0, 0, 0};
  std::vector<float> values;
};
FieldSnapshot read_field_snapshot(std::istream& in);

}  // namespace nbv
