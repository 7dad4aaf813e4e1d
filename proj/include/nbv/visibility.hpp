#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "nbv/geometry.hpp"
#include "nbv/scene.hpp"
#include "nbv/voxel_grid.hpp"

namespace nbv {

struct OrientationBin {
  int yaw_index = 0;
  int pitch_index = 0;
  double yaw_center_deg = 0.0;
  double pitch_center_deg = 0.0;

  bool operator==(const OrientationBin& o) const {
    return yaw_index == o.yaw_index && pitch_index == o.pitch_index;
  }
};

// Coarse yaw/pitch grid. Yaw bin k covers [k*w - w/2, k*w + w/2) modulo 360,
// so bin centers sit at multiples of w. Pitch bins tile [pitch_min, pitch_max];
// pitches outside the range clamp to the end bins.
struct BinLayout {
  int yaw_bins = 8;
  int pitch_bins = 3;
  double pitch_min_deg = -60.0;
  double pitch_max_deg = 60.0;

  void validate() const;
  int count() const { return yaw_bins * pitch_bins; }
  double yaw_width() const { return 360.0 / yaw_bins; }
  double pitch_width() const {
    return (pitch_max_deg - pitch_min_deg) / pitch_bins;
  }
  // Flat index: pitch_index * yaw_bins + yaw_index.
  int flat(const OrientationBin& b) const {
    return b.pitch_index * yaw_bins + b.yaw_index;
  }
  OrientationBin bin(int yaw_index, int pitch_index) const;
  OrientationBin bin_at(int flat_index) const;
  OrientationBin bin_of(double yaw_deg, double pitch_deg) const;
};

struct MaskEntry {
  std::uint32_t voxel = 0;
  // Rays that traversed or first-hit this voxel.
  std::uint32_t hits = 0;
};

// Voxels a camera at `seed` facing the bin center can see. Entries are sorted
// by voxel index; probability = hits / rays.
struct VisibilityMask {
  std::uint32_t seed = 0;
  OrientationBin bin;
  std::uint32_t rays = 0;
  std::vector<MaskEntry> entries;

  double probability(const MaskEntry& e) const {
    return static_cast<double>(e.hits) / rays;
  }
  std::size_t bytes() const {
    return sizeof(VisibilityMask) + entries.capacity() * sizeof(MaskEntry);
  }
  bool operator==(const VisibilityMask& o) const;
};

// Camera pose at the seed's voxel center facing the bin center.
Pose bin_center_pose(const VoxelGrid& grid, std::uint32_t seed,
                     const OrientationBin& bin);

// Casts r_pre rays uniformly distributed over the bin's viewing cone. Each ray
// marches voxels front to back, crediting every free voxel it crosses and the
// first occupied voxel it hits; only voxels whose centers pass the frustum
// test are recorded. Deterministic in rng_seed. Throws DegenerateSeed if the
// seed voxel is occupied, InvalidInput if r_pre is 0 or the seed is outside
// the grid.
VisibilityMask mc_visibility(std::uint32_t seed, const OrientationBin& bin,
                             const OccupancyView& occupancy,
                             const FrustumSpec& frustum, std::uint32_t r_pre,
                             std::uint64_t rng_seed);

// Reference for mc_visibility: for every voxel, the fraction of the cone's
// directions (solid-angle measure) whose ray reaches it before or at the first
// hit. Uses a deterministic equal-area direction lattice with `directions`
// samples and fine fixed-step marching, independent of the DDA traversal.
// Intended for small grids.
std::vector<double> exact_visibility(std::uint32_t seed, const OrientationBin& bin,
                                     const OccupancyView& occupancy,
                                     const FrustumSpec& frustum,
                                     std::uint32_t directions = 1u << 18);

struct VisibilityParams {
  BinLayout bins;
  FrustumSpec frustum;
  std::uint32_t r_pre = 512;
  std::uint64_t rng_seed = 0;

  bool operator==(const VisibilityParams& o) const;
};

struct CacheStats {
  std::size_t entries = 0;
  std::size_t bytes = 0;
  std::uint64_t lookups = 0;
  std::uint64_t hits = 0;
  std::uint64_t rays_cast = 0;

  double hit_rate() const {
    return lookups == 0 ? 0.0 : static_cast<double>(hits) / lookups;
  }
};

// Per-(seed, bin) mask store. Safe for concurrent get_or_build: every caller
// observes one canonical mask per key. Masks are never evicted.
class MaskCache {
 public:
  MaskCache(const VisibilityParams& params, const VoxelGrid& grid,
            std::vector<std::uint8_t> occupancy);
  MaskCache(const VisibilityParams& params, const OccupancyScene& scene);

  const VisibilityParams& params() const { return params_; }
  const VoxelGrid& grid() const { return grid_; }
  OccupancyView occupancy() const { return {&grid_, occupancy_}; }
  std::uint64_t occupancy_hash() const { return occupancy_hash_; }

  std::shared_ptr<const VisibilityMask> get_or_build(std::uint32_t seed,
                                                     const OrientationBin& bin);
  std::shared_ptr<const VisibilityMask> find(std::uint32_t seed,
                                             const OrientationBin& bin) const;

  // Builds every missing (seed, bin) mask. Returns the number built.
  std::size_t prewarm(std::span<const std::uint32_t> seeds, unsigned threads = 1);

  CacheStats stats() const;
  void reset_counters();

  // Versioned binary format with a trailing checksum. Writes atomically.
  void save(const std::string& path) const;
  // Throws CacheFormatError on corruption, a version mismatch, or a file made
  // for other parameters or another occupancy grid.
  static std::unique_ptr<MaskCache> load(const std::string& path,
                                         const VisibilityParams& params,
                                         const VoxelGrid& grid,
                                         std::vector<std::uint8_t> occupancy);
  static std::unique_ptr<MaskCache> load(const std::string& path,
                                         const VisibilityParams& params,
                                         const OccupancyScene& scene);
  // Entry count, memory, and the hit counters of the last session that
  // looked masks up. Throws CacheFormatError on a bad file.
  static CacheStats read_stats(const std::string& path);

 private:
  std::uint64_t key(std::uint32_t seed, const OrientationBin& bin) const {
    return static_cast<std::uint64_t>(seed) * params_.bins.count() +
           params_.bins.flat(bin);
  }

  VisibilityParams params_;
  VoxelGrid grid_;
  std::vector<std::uint8_t> occupancy_;
  std::uint64_t occupancy_hash_ = 0;

  mutable std::mutex mutex_;
  std::unordered_map<std::uint64_t, std::shared_ptr<const VisibilityMask>> masks_;
  std::atomic<std::uint64_t> lookups_{0};
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> rays_cast_{0};
  // Counters restored from disk, reported until this session looks anything up.
  std::uint64_t stored_lookups_ = 0;
  std::uint64_t stored_hits_ = 0;
};

}  // namespace nbv
