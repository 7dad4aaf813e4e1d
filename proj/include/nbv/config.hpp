#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "nbv/scene.hpp"
#include "nbv/semantic.hpp"

namespace nbv {

enum class Policy { kDual, kGeoOnly, kSemOnly, kRandom, kUniform };

std::string_view to_string(Policy p);
// Accepts "dual", "geo-only", "sem-only", "random", "uniform". Throws
// InvalidInput otherwise.
Policy policy_from_string(std::string_view name);

// Which occupancy the Monte Carlo rays intersect.
enum class VisibilitySource { kGroundTruth, kAgent };
// How agent-mode visibility treats space no initial ray has reached.
enum class UnknownSpace { kFree, kOpaque };
enum class SemanticQuery { kOnce, kPerView };

// Episode configuration, JSON schema version 1. Fields left out of a JSON
// document take the defaults of its regime.
struct EpisodeConfig {
  Regime regime = Regime::kObject;
  int initial_views = 4;
  int budget = 25;

  double eta = 0.3;
  double fov_deg = 90.0;
  double max_depth = 5.0;
  double min_depth = 0.05;
  double gamma = 0.01;
  double lambda = 1.0;
  double w_g = 0.5;
  double w_s = 0.5;
  std::uint64_t rng_seed = 0;

  int complexity = 3;
  std::array<int, 3> dims{64, 64, 64};
  double voxel_size = 0.05;

  int image_width = 64;
  int image_height = 48;

  int yaw_bins = 8;
  int pitch_bins = 3;
  double pitch_min_deg = -60.0;
  double pitch_max_deg = 60.0;
  std::uint32_t r_pre = 512;
  VisibilitySource visibility = VisibilitySource::kGroundTruth;
  UnknownSpace unknown = UnknownSpace::kFree;

  // Non-positive tau selects half the workspace diagonal.
  double tau = 0.0;
  std::vector<double> ranges{-0.15, 0.0, 0.15};
  int seed_stride = 5;
  int seed_clearance = 2;
  // Non-positive values select the planner defaults.
  double nms_radius = 0.0;
  double nms_angle_deg = 0.0;

  SemanticQuery semantic_query = SemanticQuery::kOnce;
  CoefficientTable coefficients;

  // Non-positive selects 1.5 voxels.
  double coverage_tolerance = 0.0;

  static EpisodeConfig defaults(Regime regime);

  // Throws ConfigError naming the first violated constraint.
  void validate() const;
};

inline constexpr int kConfigSchemaVersion = 1;

// Parses and validates a JSON document. Unknown keys, wrong types and
// constraint violations raise ConfigError.
EpisodeConfig config_from_json(std::string_view text);
// Canonical JSON with every field spelled out.
std::string config_to_json(const EpisodeConfig& config);
// FNV-1a of the canonical JSON.
std::uint64_t config_hash(const EpisodeConfig& config);

}  // namespace nbv
