#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nbv/geometry.hpp"
#include "nbv/image.hpp"
#include "nbv/voxel_grid.hpp"

namespace nbv {

enum class Horizontal { kLeft, kCenterLeft, kCenterRight, kRight };
enum class Vertical { kTop, kMiddle, kBottom };
enum class Category { kOcclusion, kGeometric, kLighting, kBoundary, kTexture };
enum class Priority { kHigh, kMedium, kLow };
enum class RegionSize { kSmall, kMedium, kLarge };

struct GridCell {
  Horizontal horizontal = Horizontal::kLeft;
  Vertical vertical = Vertical::kTop;
  bool operator==(const GridCell&) const = default;
};

struct SemanticRegion {
  GridCell cell;
  Category category = Category::kTexture;
  Priority priority = Priority::kLow;
  RegionSize size = RegionSize::kMedium;
  std::string reason;
  bool operator==(const SemanticRegion&) const = default;
};

std::string_view to_string(Horizontal h);
std::string_view to_string(Vertical v);
std::string_view to_string(Category c);
std::string_view to_string(Priority p);
std::string_view to_string(RegionSize s);
// Grid notation, e.g. "center-left-middle".
std::string to_string(const GridCell& cell);
std::optional<GridCell> parse_cell(std::string_view text);

struct ParseResult {
  std::vector<SemanticRegion> regions;
  // Malformed blocks plus stray fields outside any block.
  std::size_t diagnostics = 0;
};

// Parses REGION / TYPE / PRIORITY / SIZE / REASON reports. Fields may sit on
// one line (separated by '/', '|' or ';') or on consecutive lines; every
// REGION field opens a new block. Never throws; bad blocks are skipped and
// counted.
ParseResult parse_regions(std::string_view report);

// One line in the report grammar. Reason text must not contain field keys.
std::string format_region(const SemanticRegion& region);
std::string format_report(std::span<const SemanticRegion> regions);

// Coefficients for region weighting and modulation.
struct CoefficientTable {
  // Indexed by Category.
  std::array<double, 5> alpha{1.0, 1.0, 0.7, 0.7, 0.4};
  // Indexed by Priority.
  std::array<double, 3> beta{3.0, 1.5, 0.5};
  // Indexed by RegionSize.
  std::array<double, 3> size{0.8, 1.0, 1.2};
  double lambda = 1.0;

  double alpha_of(Category c) const { return alpha[static_cast<int>(c)]; }
  double beta_of(Priority p) const { return beta[static_cast<int>(p)]; }
  double size_of(RegionSize s) const { return size[static_cast<int>(s)]; }

  // Throws InvalidInput on negative entries or unordered priorities.
  void validate() const;
};

// Mask shape relative to one grid cell.
struct MaskShape {
  double taper_fraction = 0.10;    // Gaussian sigma / cell diagonal
  double dilation_fraction = 0.05; // extra half-extent / cell side
  double cutoff_sigmas = 3.0;      // mask is exactly 0 beyond this
};

// Soft mask: 1 on the size-scaled, dilated cell core; Gaussian falloff in the
// distance to the core; 0 beyond the cutoff. Evaluated at pixel centers.
// Throws InvalidInput if the image is smaller than 4x3.
ImageD region_to_mask(const SemanticRegion& region, int width, int height,
                      const CoefficientTable& table = {},
                      const MaskShape& shape = {});

// Sum over regions of alpha * beta * s * M_k(u), before normalization.
ImageD accumulate_region_weights(std::span<const SemanticRegion> regions,
                                 const CoefficientTable& table, int width,
                                 int height, const MaskShape& shape = {});

// Per-image min-max normalization used for weight maps and modulated
// uncertainty. A constant map becomes 1 where the constant is positive and
// 0 otherwise.
void normalize_min_max(std::span<double> values);

// Normalized weight map W_i(u) in [0, 1]; all zeros when `regions` is empty.
ImageD aggregate_weight_map(std::span<const SemanticRegion> regions,
                            const CoefficientTable& table, int width,
                            int height, const MaskShape& shape = {});

// Norm(sigma * (1 + lambda * W)). Throws InvalidInput on shape mismatch or
// negative sigma.
ImageD modulate(const ImageD& sigma, const ImageD& weights, double lambda);

// Deposits each pixel's value into the voxel containing its back-projected
// point, keeping the per-voxel maximum across calls. Pixels with invalid depth
// or zero value are skipped; out-of-grid points are dropped.
void lift_to_3d(const ImageD& values, const ImageD& depth, const Pose& pose,
                const CameraIntrinsics& intrinsics, const VoxelGrid& grid,
                std::span<double> volume);

}  // namespace nbv
