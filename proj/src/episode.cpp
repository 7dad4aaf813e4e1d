#include "nbv/episode.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "nbv/error.hpp"
#include "nbv/io.hpp"
#include "nbv/rng.hpp"
#include "nbv/semantic.hpp"

namespace nbv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Elevation band for hemisphere cameras, degrees above the plane.
constexpr double kMinElevation = 15.0;
constexpr double kMaxElevation = 55.0;
// Scene-level ring: distance from the walls and downward tilt.
constexpr double kRingInset = 0.9;
constexpr double kRingPitch = -10.0;

ViewPose look_at(const Vec3& position, const Vec3& target) {
  ViewPose p;
  p.position = position;
  yaw_pitch_from_direction(target - position, p.yaw_deg, p.pitch_deg);
  return p;
}

bool camera_free(const OccupancyScene& scene, const Vec3& p) {
  const auto v = scene.grid().locate(p);
  return v && !scene.is_occupied(*v);
}

Vec3 hemisphere_point(const OccupancyScene& scene, double sin_elevation, double azimuth) {
  const double c = std::sqrt(std::max(0.0, 1.0 - sin_elevation * sin_elevation));
  return scene.workspace_center() +
         scene.workspace_radius() *
             Vec3(c * std::cos(azimuth), c * std::sin(azimuth), sin_elevation);
}

// Uniform by area over the elevation band; retries blocked positions.
ViewPose random_hemisphere_view(const OccupancyScene& scene, Rng& rng) {
  const double lo = std::sin(deg_to_rad(kMinElevation));
  const double hi = std::sin(deg_to_rad(kMaxElevation));
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const Vec3 p = hemisphere_point(scene, rng.uniform(lo, hi),
                                    rng.uniform(0.0, 2.0 * std::numbers::pi));
    if (camera_free(scene, p)) return look_at(p, scene.look_target());
  }
  throw SceneError("no free camera position on the hemisphere");
}

// Point at arc-length fraction t of the ring rectangle.
Vec3 ring_point(const OccupancyScene& scene, double t) {
  const Vec3 ext = scene.grid().extent();
  const double x0 = kRingInset, x1 = ext.x() - kRingInset;
  const double y0 = kRingInset, y1 = ext.y() - kRingInset;
  const double w = x1 - x0, h = y1 - y0;
  double s = (t - std::floor(t)) * 2.0 * (w + h);
  const Vec3 o = scene.grid().origin();
  const double z = o.z() + scene.camera_height();
  if (s < w) return o + Vec3(x0 + s, y0, 0) + Vec3(0, 0, z - o.z());
  s -= w;
  if (s < h) return o + Vec3(x1, y0 + s, 0) + Vec3(0, 0, z - o.z());
  s -= h;
  if (s < w) return o + Vec3(x1 - s, y1, 0) + Vec3(0, 0, z - o.z());
  s -= w;
  return o + Vec3(x0, y1 - s, 0) + Vec3(0, 0, z - o.z());
}

ViewPose ring_view(const OccupancyScene& scene, double t) {
  Vec3 p = ring_point(scene, t);
  const Vec3 c = scene.workspace_center();
  // Slide toward the center until the camera is in free space.
  for (int k = 0; k < 100 && !camera_free(scene, p); ++k) {
    p += 0.5 * scene.grid().voxel_size() * (c - p).normalized();
  }
  if (!camera_free(scene, p)) throw SceneError("no free camera position on the ring");
  ViewPose v;
  v.position = p;
  double pitch;
  yaw_pitch_from_direction(c - p, v.yaw_deg, pitch);
  v.pitch_deg = kRingPitch;
  return v;
}

std::vector<ViewPose> initial_views(const EpisodeConfig& config, const OccupancyScene& scene,
                                    std::uint64_t root) {
  Rng rng(derive_seed(root, "initial"));
  std::vector<ViewPose> out;
  if (config.regime == Regime::kObject) {
    for (int i = 0; i < config.initial_views; ++i) {
      out.push_back(random_hemisphere_view(scene, rng));
    }
  } else {
    const double phase = rng.uniform();
    for (int i = 0; i < config.initial_views; ++i) {
      out.push_back(ring_view(scene, phase + static_cast<double>(i) / config.initial_views));
    }
  }
  return out;
}

std::vector<ViewPose> uniform_views(const EpisodeConfig& config, const OccupancyScene& scene,
                                    int n) {
  std::vector<ViewPose> out;
  if (config.regime == Regime::kObject) {
    const double lo = std::sin(deg_to_rad(kMinElevation));
    const double hi = std::sin(deg_to_rad(kMaxElevation));
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
      const double z = lo + (hi - lo) * (i + 0.5) / n;
      Vec3 p = hemisphere_point(scene, z, golden * i);
      if (!camera_free(scene, p)) continue;
      out.push_back(look_at(p, scene.look_target()));
    }
  } else {
    for (int i = 0; i < n; ++i) {
      out.push_back(ring_view(scene, (i + 0.5) / n));
    }
  }
  return out;
}

double default_tolerance(const EpisodeConfig& c) {
  return c.coverage_tolerance > 0.0 ? c.coverage_tolerance : 1.5 * c.voxel_size;
}

FrustumSpec frustum_of(const EpisodeConfig& c) {
  FrustumSpec f;
  f.fov_deg = c.fov_deg;
  f.max_depth = c.max_depth;
  f.min_depth = c.min_depth;
  return f;
}

RenderOptions render_options(const EpisodeConfig& c) {
  RenderOptions o;
  o.max_depth = c.max_depth;
  o.min_depth = c.min_depth;
  return o;
}

// U_sem for one view lifted into `volume` (max rule).
void lift_semantic(const EpisodeConfig& config, const DepthRender& render,
                   const ViewPose& view, const CameraIntrinsics& K, const VoxelGrid& grid,
                   std::span<double> volume, std::string* report_out) {
  const std::string report = synth_semantic_report(render, render_options(config));
  const auto parsed = parse_regions(report);
  const ImageD weights = aggregate_weight_map(parsed.regions, config.coefficients,
                                              render.depth.width, render.depth.height);
  std::vector<std::uint8_t> valid(render.depth.size());
  for (std::size_t i = 0; i < valid.size(); ++i) {
    valid[i] = std::isfinite(render.depth.data[i]) ? 1 : 0;
  }
  const auto conf = normalize_confidence(render.confidence.data, valid);
  ImageD sigma(render.depth.width, render.depth.height, 0.0);
  for (std::size_t i = 0; i < conf.size(); ++i) {
    if (valid[i]) sigma.data[i] = 1.0 - conf[i];
  }
  ImageD usem = modulate(sigma, weights, config.lambda);
  // Misses carry no surface to lift onto.
  for (std::size_t i = 0; i < valid.size(); ++i) {
    if (!valid[i]) usem.data[i] = 0.0;
  }
  lift_to_3d(usem, render.depth, view.pose(), K, grid, volume);
  if (report_out) *report_out = report;
}

double stddev(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : xs) s += (x - mean) * (x - mean);
  return std::sqrt(s / xs.size());
}

}  // namespace

CoverageTracker::CoverageTracker(const OccupancyScene& scene, double tolerance)
    : scene_(&scene),
      tolerance_(tolerance),
      best_(scene.grid().size(), kInf) {
  if (!(tolerance > 0.0)) throw InvalidInput("coverage: tolerance must be positive");
  reach_ = static_cast<int>(std::ceil(tolerance / scene.grid().voxel_size()));
}

void CoverageTracker::add(const DepthRender& render, const Pose& pose,
                          const CameraIntrinsics& intrinsics) {
  const VoxelGrid& grid = scene_->grid();
  for (int y = 0; y < render.depth.height; ++y) {
    for (int x = 0; x < render.depth.width; ++x) {
      const double d = render.depth.at(x, y);
      if (!std::isfinite(d) || d <= 0.0) continue;
      const Vec3 p = back_project({x + 0.5, y + 0.5}, d, intrinsics, pose);
      const Index3 c = grid.cell_of(p);
      for (int dz = -reach_; dz <= reach_; ++dz) {
        for (int dy = -reach_; dy <= reach_; ++dy) {
          for (int dx = -reach_; dx <= reach_; ++dx) {
            const Index3 q(c.x() + dx, c.y() + dy, c.z() + dz);
            if (!grid.contains(q)) continue;
            const std::uint32_t v = grid.linear(q);
            if (!scene_->is_surface(v)) continue;
            const double dist = (grid.center(q) - p).norm();
            if (dist > tolerance_) continue;
            if (!std::isfinite(best_[v])) ++covered_;
            best_[v] = std::min(best_[v], dist);
          }
        }
      }
    }
  }
}

double CoverageTracker::coverage() const {
  const std::size_t n = scene_->surface_count();
  return n == 0 ? 0.0 : static_cast<double>(covered_) / n;
}

double CoverageTracker::depth_error() const {
  if (covered_ == 0) return 0.0;
  double s = 0.0;
  for (double b : best_) {
    if (std::isfinite(b)) s += b;
  }
  return s / covered_;
}

std::uint64_t episode_root_seed(const EpisodeConfig& config, std::uint64_t scene_seed) {
  return derive_seed(config.rng_seed, scene_seed, 0);
}

OccupancyScene build_episode_scene(const EpisodeConfig& config, std::uint64_t scene_seed) {
  SceneSpec spec;
  spec.seed = derive_seed(episode_root_seed(config, scene_seed), "scene");
  spec.regime = config.regime;
  spec.complexity = config.complexity;
  spec.dims = config.dims;
  spec.voxel_size = config.voxel_size;
  return build_scene(spec);
}

VisibilityParams visibility_params(const EpisodeConfig& config, std::uint64_t root_seed) {
  VisibilityParams p;
  p.bins.yaw_bins = config.yaw_bins;
  p.bins.pitch_bins = config.pitch_bins;
  p.bins.pitch_min_deg = config.pitch_min_deg;
  p.bins.pitch_max_deg = config.pitch_max_deg;
  p.frustum = frustum_of(config);
  p.r_pre = config.r_pre;
  p.rng_seed = derive_seed(root_seed, "mc");
  return p;
}

std::vector<std::uint8_t> visibility_occupancy(const EpisodeConfig& config,
                                               const OccupancyScene& scene,
                                               const std::vector<ViewPose>& initial,
                                               const std::vector<DepthRender>& renders,
                                               const CameraIntrinsics& K) {
  if (config.visibility == VisibilitySource::kGroundTruth) {
    return {scene.occupied().begin(), scene.occupied().end()};
  }
  const VoxelGrid& grid = scene.grid();
  std::vector<std::uint8_t> occ(grid.size(), 0);
  std::vector<std::uint8_t> known(grid.size(), 0);
  for (std::size_t i = 0; i < initial.size(); ++i) {
    const Pose pose = initial[i].pose();
    const DepthRender& r = renders[i];
    for (int y = 0; y < r.depth.height; ++y) {
      for (int x = 0; x < r.depth.width; ++x) {
        const double d = r.depth.at(x, y);
        const Vec3 cam((x + 0.5 - K.cx) / K.fx, (y + 0.5 - K.cy) / K.fy, 1.0);
        const Vec3 dir = (pose.rotation() * cam).normalized();
        const double cos_axis = dir.dot(pose.forward());
        double t_max = config.max_depth / cos_axis;
        if (std::isfinite(d)) {
          const Vec3 p = back_project({x + 0.5, y + 0.5}, d, K, pose);
          if (const auto v = grid.locate(p)) {
            occ[*v] = 1;
            known[*v] = 1;
          }
          t_max = d / cos_axis;
        }
        if (config.unknown == UnknownSpace::kOpaque) {
          traverse_ray(grid, pose.translation(), dir, t_max,
                       [&](std::uint32_t v, const Index3&, double, int) {
                         known[v] = 1;
                         return true;
                       });
        }
      }
    }
  }
  if (config.unknown == UnknownSpace::kOpaque) {
    for (std::size_t v = 0; v < occ.size(); ++v) {
      if (!known[v]) occ[v] = 1;
    }
  }
  return occ;
}

EpisodeSetup prepare_episode(const EpisodeConfig& config,
                             std::shared_ptr<const OccupancyScene> scene,
                             std::uint64_t scene_seed, std::shared_ptr<MaskCache> cache) {
  config.validate();
  EpisodeSetup s(config, std::move(scene));
  const OccupancyScene& sc = *s.scene;
  const VoxelGrid& grid = sc.grid();
  s.root_seed = episode_root_seed(config, scene_seed);
  s.intrinsics =
      CameraIntrinsics::from_diagonal_fov(config.image_width, config.image_height, config.fov_deg);
  s.initial_views = initial_views(config, sc, s.root_seed);
  s.semantic.assign(grid.size(), 0.0);
  const RenderOptions ro = render_options(config);
  for (const auto& v : s.initial_views) {
    s.initial_renders.push_back(render_depth(v.pose(), s.intrinsics, sc, ro));
    const DepthRender& r = s.initial_renders.back();
    splat_confidence(r.depth, r.confidence, v.pose(), s.intrinsics, s.geometric);
    std::string report;
    lift_semantic(config, r, v, s.intrinsics, grid, s.semantic, &report);
    s.reports.push_back(std::move(report));
  }

  auto vis_occ =
      visibility_occupancy(config, sc, s.initial_views, s.initial_renders, s.intrinsics);
  // Seeds must be free in the scene and in the occupancy the rays see.
  std::vector<std::uint8_t> blocked(vis_occ);
  for (std::size_t v = 0; v < blocked.size(); ++v) blocked[v] |= sc.occupied()[v];
  const OccupancyView bview{&grid, blocked};
  if (config.regime == Regime::kObject) {
    s.seeds = hemisphere_seeds(bview, sc.workspace_center(), sc.workspace_radius(),
                               config.seed_stride);
  } else {
    s.seeds = layer_seeds(bview, sc.workspace_center().z(), config.seed_stride,
                          config.seed_clearance);
  }

  const VisibilityParams params = visibility_params(config, s.root_seed);
  if (cache) {
    if (!(cache->params() == params) || !(cache->grid() == grid) ||
        cache->occupancy_hash() != occupancy_hash(grid, vis_occ)) {
      throw InvalidInput("mask cache does not match this episode");
    }
    s.cache = std::move(cache);
  } else {
    s.cache = std::make_shared<MaskCache>(params, grid, std::move(vis_occ));
  }
  return s;
}

EpisodeResult run_policy(EpisodeSetup& setup, Policy policy) {
  const EpisodeConfig& config = setup.config;
  const OccupancyScene& scene = *setup.scene;
  const VoxelGrid& grid = scene.grid();
  const FrustumSpec frustum = frustum_of(config);
  const RenderOptions ro = render_options(config);
  const CameraIntrinsics& K = setup.intrinsics;

  FusionWeights weights;
  weights.w_g = config.w_g;
  weights.w_s = config.w_s;
  weights.gamma = config.gamma;
  std::vector<double> semantic = setup.semantic;
  if (policy == Policy::kGeoOnly) std::fill(semantic.begin(), semantic.end(), 0.0);
  if (policy == Policy::kSemOnly) weights.w_g = 0.0;
  FusedField field = fuse(setup.geometric, semantic, weights);
  const bool uses_semantics = policy != Policy::kGeoOnly;

  EpisodeResult result;
  result.policy = policy;
  CoverageTracker tracker(scene, default_tolerance(config));
  auto record = [&] {
    result.metrics.coverage.push_back(tracker.coverage());
    result.metrics.residual_total.push_back(field.total());
    result.metrics.depth_error.push_back(tracker.depth_error());
  };
  for (std::size_t i = 0; i < setup.initial_views.size(); ++i) {
    tracker.add(setup.initial_renders[i], setup.initial_views[i].pose(), K);
    result.views.push_back(setup.initial_views[i]);
    record();
  }

  const int planned = config.budget - config.initial_views;
  std::unique_ptr<Planner> planner;
  if (policy == Policy::kDual || policy == Policy::kGeoOnly || policy == Policy::kSemOnly) {
    PlannerConfig pc;
    pc.eta = config.eta;
    pc.tau = config.tau > 0.0 ? config.tau : grid.diagonal() / 2.0;
    pc.ranges = config.ranges;
    pc.nms_radius = config.nms_radius;
    pc.nms_angle_deg = config.nms_angle_deg;
    planner = std::make_unique<Planner>(pc, *setup.cache, field, setup.seeds,
                                        setup.initial_views.back().position,
                                        static_cast<std::size_t>(planned));
  }
  std::vector<ViewPose> fixed;
  if (policy == Policy::kUniform) fixed = uniform_views(config, scene, planned);
  Rng rng(derive_seed(setup.root_seed, "random"));

  for (int step = 0; step < planned; ++step) {
    ViewPose view;
    if (planner) {
      const auto next = planner->select_next_views(1);
      if (next.empty()) {
        result.truncated = true;
        result.diagnostic = planner->diagnostic();
        break;
      }
      view = next.front();
    } else {
      if (policy == Policy::kUniform) {
        if (static_cast<std::size_t>(step) >= fixed.size()) {
          result.truncated = true;
          result.diagnostic = "uniform layout has fewer free positions than the budget";
          break;
        }
        view = fixed[step];
      } else if (config.regime == Regime::kObject) {
        view = random_hemisphere_view(scene, rng);
      } else {
        if (setup.seeds.empty()) {
          result.truncated = true;
          result.diagnostic = "no candidate seeds in the workspace";
          break;
        }
        view.seed = setup.seeds[rng.below(setup.seeds.size())];
        view.position = grid.center(view.seed);
        view.yaw_deg = rng.uniform(0.0, 360.0);
        view.pitch_deg = rng.uniform(-20.0, 20.0);
      }
      // Baselines score nothing; their trace carries the view and the decay.
      TraceRecord rec;
      rec.step = static_cast<std::size_t>(step);
      rec.seed = grid.locate(view.position).value_or(view.seed);
      rec.bin = -1;
      rec.pose = view;
      rec.total_before = field.total();
      apply_decay(field, view.pose(), frustum, config.eta);
      rec.total_after = field.total();
      result.trace.push_back(rec);
    }

    const DepthRender render = render_depth(view.pose(), K, scene, ro);
    tracker.add(render, view.pose(), K);
    result.views.push_back(view);

    if (config.semantic_query == SemanticQuery::kPerView && uses_semantics &&
        weights.w_s > 0.0) {
      std::vector<double> fresh(grid.size(), 0.0);
      lift_semantic(config, render, view, K, grid, fresh, nullptr);
      const auto decays = field.decay_count();
      bool raised = false;
      for (std::uint32_t v = 0; v < fresh.size(); ++v) {
        if (fresh[v] <= semantic[v]) continue;
        field.raise(v, weights.w_s * (fresh[v] - semantic[v]) *
                           std::pow(1.0 - config.eta, decays[v]));
        semantic[v] = fresh[v];
        raised = true;
      }
      if (raised && planner) planner->invalidate_all();
    }
    record();
  }

  result.planned_views = result.views.size() - setup.initial_views.size();
  if (planner) result.trace = planner->trace();
  return result;
}

EpisodeResult run_episode(const EpisodeConfig& config, Policy policy, std::uint64_t scene_seed) {
  auto scene = std::make_shared<const OccupancyScene>(build_episode_scene(config, scene_seed));
  EpisodeSetup setup = prepare_episode(config, scene, scene_seed);
  return run_policy(setup, policy);
}

std::string metrics_to_csv(const EpisodeMetrics& m) {
  std::string out = "step,coverage,residual_total,depth_error\n";
  for (std::size_t i = 0; i < m.coverage.size(); ++i) {
    out += std::to_string(i + 1);
    out += ',' + format_double(m.coverage[i]);
    out += ',' + format_double(m.residual_total[i]);
    out += ',' + format_double(m.depth_error[i]);
    out += '\n';
  }
  return out;
}

std::string summary_to_json(const EpisodeResult& r, const EpisodeConfig& config,
                            std::uint64_t scene_seed) {
  nlohmann::ordered_json j;
  j["policy"] = to_string(r.policy);
  j["regime"] = to_string(config.regime);
  j["scene_seed"] = scene_seed;
  j["config_hash"] = config_hash(config);
  j["initial_views"] = config.initial_views;
  j["planned_views"] = r.planned_views;
  j["total_views"] = r.views.size();
  j["truncated"] = r.truncated;
  if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
  const auto& m = r.metrics;
  j["final_coverage"] = m.coverage.empty() ? 0.0 : m.coverage.back();
  j["final_residual_total"] = m.residual_total.empty() ? 0.0 : m.residual_total.back();
  j["final_depth_error"] = m.depth_error.empty() ? 0.0 : m.depth_error.back();
  return j.dump(2) + "\n";
}

CompareResult compare(const EpisodeConfig& config, const std::vector<std::uint64_t>& seeds,
                      const std::vector<Policy>& policies, unsigned threads) {
  config.validate();
  if (policies.size() < 2) throw InvalidInput("compare needs at least two policies");
  const std::size_t n = seeds.size();
  std::vector<std::vector<std::optional<EpisodeMetrics>>> runs(
      n, std::vector<std::optional<EpisodeMetrics>>(policies.size()));
  std::vector<std::vector<std::string>> errors(n);

  auto work = [&](std::size_t i) {
    try {
      auto scene =
          std::make_shared<const OccupancyScene>(build_episode_scene(config, seeds[i]));
      EpisodeSetup setup = prepare_episode(config, scene, seeds[i]);
      for (std::size_t p = 0; p < policies.size(); ++p) {
        try {
          runs[i][p] = run_policy(setup, policies[p]).metrics;
        } catch (const Error& e) {
          errors[i].push_back("seed " + std::to_string(seeds[i]) + " policy " +
                              std::string(to_string(policies[p])) + ": " + e.what());
        }
      }
    } catch (const Error& e) {
      errors[i].push_back("seed " + std::to_string(seeds[i]) + ": " + e.what());
    }
  };
  threads = std::max(1u, threads);
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) work(i);
      });
    }
  }

  CompareResult out;
  out.seeds = seeds;
  for (const auto& e : errors) out.failures.insert(out.failures.end(), e.begin(), e.end());
  const std::size_t steps = static_cast<std::size_t>(config.budget);
  for (std::size_t p = 0; p < policies.size(); ++p) {
    CompareSeries s;
    s.policy = policies[p];
    for (std::size_t t = 0; t < steps; ++t) {
      std::vector<double> xs;
      for (std::size_t i = 0; i < n; ++i) {
        if (!runs[i][p] || runs[i][p]->coverage.empty()) continue;
        const auto& c = runs[i][p]->coverage;
        xs.push_back(c[std::min(t, c.size() - 1)]);  // truncated runs hold their last value
      }
      double mean = 0.0;
      for (double x : xs) mean += x;
      mean = xs.empty() ? 0.0 : mean / xs.size();
      s.mean.push_back(mean);
      s.stddev.push_back(stddev(xs, mean));
    }
    for (std::size_t i = 0; i < n; ++i) {
      s.final_coverage.push_back(runs[i][p] && !runs[i][p]->coverage.empty()
                                     ? runs[i][p]->coverage.back()
                                     : std::numeric_limits<double>::quiet_NaN());
    }
    out.series.push_back(std::move(s));
  }
  return out;
}

std::string compare_to_csv(const CompareResult& r) {
  std::string out = "policy,step,mean,std\n";
  for (const auto& s : r.series) {
    for (std::size_t t = 0; t < s.mean.size(); ++t) {
      out += std::string(to_string(s.policy)) + ',' + std::to_string(t + 1) + ',' +
             format_double(s.mean[t]) + ',' + format_double(s.stddev[t]) + '\n';
    }
  }
  return out;
}

std::string compare_to_json(const CompareResult& r) {
  nlohmann::ordered_json j;
  j["seeds"] = r.seeds;
  j["series"] = nlohmann::ordered_json::array();
  for (const auto& s : r.series) {
    nlohmann::ordered_json e;
    e["policy"] = to_string(s.policy);
    e["mean"] = s.mean;
    e["std"] = s.stddev;
    nlohmann::ordered_json finals = nlohmann::ordered_json::array();
    for (double f : s.final_coverage) {
      if (std::isnan(f)) finals.push_back(nullptr);
      else finals.push_back(f);
    }
    e["final_coverage"] = finals;
    j["series"].push_back(e);
  }
  j["failures"] = r.failures;
  return j.dump(2) + "\n";
}

}  // namespace nbv
