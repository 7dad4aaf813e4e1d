#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "nbv/config.hpp"
#include "nbv/planner.hpp"
#include "nbv/render.hpp"
#include "nbv/scene.hpp"
#include "nbv/visibility.hpp"
#include "nbv/voxel_field.hpp"

namespace nbv {

// Surface voxels reached by back-projected depth pixels. A surface voxel is
// covered once some point lands within `tolerance` of its center.
class CoverageTracker {
 public:
  CoverageTracker(const OccupancyScene& scene, double tolerance);

  void add(const DepthRender& render, const Pose& pose,
           const CameraIntrinsics& intrinsics);

  double coverage() const;
  // Mean over covered surface voxels of the closest point's distance to the
  // voxel center; 0 when nothing is covered.
  double depth_error() const;
  std::size_t covered() const { return covered_; }
  bool is_covered(std::uint32_t v) const { return std::isfinite(best_[v]); }

 private:
  const OccupancyScene* scene_;
  double tolerance_;
  int reach_;
  std::vector<double> best_;
  std::size_t covered_ = 0;
};

struct EpisodeMetrics {
  // One entry per acquired view, initial views included.
  std::vector<double> coverage;
  std::vector<double> residual_total;
  std::vector<double> depth_error;
};

struct EpisodeResult {
  Policy policy = Policy::kDual;
  EpisodeMetrics metrics;
  std::vector<ViewPose> views;  // initial views first
  std::vector<TraceRecord> trace;
  std::size_t planned_views = 0;
  bool truncated = false;
  std::string diagnostic;
};

// Everything the policies share for one scene: the initial observations, the
// dual fields built from them, candidate seeds and the mask cache.
struct EpisodeSetup {
  EpisodeConfig config;
  std::shared_ptr<const OccupancyScene> scene;
  std::uint64_t root_seed = 0;
  CameraIntrinsics intrinsics;
  std::vector<ViewPose> initial_views;
  std::vector<DepthRender> initial_renders;
  GeometricField geometric;
  // Semantic field per voxel in [0, 1].
  std::vector<double> semantic;
  std::vector<std::string> reports;
  std::vector<std::uint32_t> seeds;
  std::shared_ptr<MaskCache> cache;

  EpisodeSetup(const EpisodeConfig& c, std::shared_ptr<const OccupancyScene> s)
      : config(c), scene(std::move(s)), geometric(scene->grid()) {}
};

// Root of every random stream in an episode.
std::uint64_t episode_root_seed(const EpisodeConfig& config, std::uint64_t scene_seed);

// Scene for (config, scene seed); deterministic.
OccupancyScene build_episode_scene(const EpisodeConfig& config, std::uint64_t scene_seed);

// Renders and fuses the initial views, derives candidate seeds, and builds or
// adopts the mask cache. A supplied cache must match the visibility
// parameters and occupancy this configuration implies.
EpisodeSetup prepare_episode(const EpisodeConfig& config,
                             std::shared_ptr<const OccupancyScene> scene,
                             std::uint64_t scene_seed,
                             std::shared_ptr<MaskCache> cache = nullptr);

VisibilityParams visibility_params(const EpisodeConfig& config, std::uint64_t root_seed);

// Occupancy the Monte Carlo rays intersect for this setup's configuration.
std::vector<std::uint8_t> visibility_occupancy(const EpisodeConfig& config,
                                               const OccupancyScene& scene,
                                               const std::vector<ViewPose>& initial,
                                               const std::vector<DepthRender>& renders,
                                               const CameraIntrinsics& intrinsics);

// Runs one policy. The setup's cache may grow; everything else is read only.
EpisodeResult run_policy(EpisodeSetup& setup, Policy policy);

// prepare_episode + run_policy.
EpisodeResult run_episode(const EpisodeConfig& config, Policy policy,
                          std::uint64_t scene_seed);

// CSV with header "step,coverage,residual_total,depth_error"; steps from 1.
std::string metrics_to_csv(const EpisodeMetrics& metrics);
std::string summary_to_json(const EpisodeResult& result, const EpisodeConfig& config,
                            std::uint64_t scene_seed);

struct CompareSeries {
  Policy policy;
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<double> final_coverage;  // per scene seed
};

struct CompareResult {
  std::vector<std::uint64_t> seeds;
  std::vector<CompareSeries> series;  // in the order policies were given
  std::vector<std::string> failures;
};

// Every policy on every scene seed; scenes run in parallel on `threads`
// workers, results are ordered by input. Episode failures are collected, not
// thrown.
CompareResult compare(const EpisodeConfig& config, const std::vector<std::uint64_t>& seeds,
                      const std::vector<Policy>& policies, unsigned threads = 1);

// Long-format CSV: policy,step,mean,std.
std::string compare_to_csv(const CompareResult& result);
std::string compare_to_json(const CompareResult& result);

}  // namespace nbv
