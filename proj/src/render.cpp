#include "nbv/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nbv/error.hpp"
#include "nbv/semantic.hpp"

namespace nbv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kGrazingCos = 0.35;

// Hit pixels next to a miss or a relative depth jump above the threshold.
Image<std::uint8_t> edge_mask(const ImageD& depth, double threshold) {
  Image<std::uint8_t> edges(depth.width, depth.height, 0);
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      const double d = depth.at(x, y);
      if (!std::isfinite(d)) continue;
      const int nx[4] = {x - 1, x + 1, x, x};
      const int ny[4] = {y, y, y - 1, y + 1};
      for (int k = 0; k < 4; ++k) {
        if (nx[k] < 0 || ny[k] < 0 || nx[k] >= depth.width || ny[k] >= depth.height) {
          continue;
        }
        const double n = depth.at(nx[k], ny[k]);
        if (!std::isfinite(n) || std::abs(n - d) > threshold * std::min(n, d)) {
          edges.at(x, y) = 1;
          break;
        }
      }
    }
  }
  return edges;
}

RegionSize size_of_fraction(double f) {
  if (f < 0.3) return RegionSize::kSmall;
  if (f < 0.6) return RegionSize::kMedium;
  return RegionSize::kLarge;
}

}  // namespace

DepthRender render_depth(const Pose& pose, const CameraIntrinsics& intrinsics,
                         const OccupancyScene& scene, const RenderOptions& options) {
  intrinsics.validate();
  const VoxelGrid& grid = scene.grid();
  const Vec3 origin = pose.translation();
  if (const auto v = grid.locate(origin); v && scene.is_occupied(*v)) {
    throw SceneError("render_depth: camera inside occupied voxel");
  }
  const int w = intrinsics.width;
  const int h = intrinsics.height;
  DepthRender out{ImageD(w, h, kInf), ImageD(w, h, 0.0), ImageD(w, h, 0.0)};
  const Vec3 forward = pose.forward();
  const double nudge = 1e-3 * grid.voxel_size();

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Vec3 cam((x + 0.5 - intrinsics.cx) / intrinsics.fx,
                     (y + 0.5 - intrinsics.cy) / intrinsics.fy, 1.0);
      const Vec3 dir = (pose.rotation() * cam).normalized();
      const double cos_axis = dir.dot(forward);
      const double t_max = options.max_depth / cos_axis + grid.voxel_size();
      std::optional<std::uint32_t> hit;
      double t_hit = 0.0;
      traverse_ray(grid, origin, dir, t_max,
                   [&](std::uint32_t v, const Index3&, double t_enter, int) {
                     if (!scene.is_occupied(v)) return true;
                     hit = v;
                     t_hit = t_enter;
                     return false;
                   });
      if (!hit) continue;
      const double t = t_hit + nudge;
      const double z = t * cos_axis;
      if (z < options.min_depth || z > options.max_depth) continue;
      // Face normal: dominant axis of the offset from the voxel center.
      const Vec3 offset = origin + t_hit * dir - grid.center(*hit);
      int axis = 0;
      for (int a = 1; a < 3; ++a) {
        if (std::abs(offset[a]) > std::abs(offset[axis])) axis = a;
      }
      out.depth.at(x, y) = z;
      out.incidence.at(x, y) = std::abs(dir[axis]);
    }
  }

  const auto edges = edge_mask(out.depth, options.edge_threshold);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double z = out.depth.at(x, y);
      if (!std::isfinite(z)) continue;
      double c = out.incidence.at(x, y) * std::exp(-z / options.max_depth);
      if (edges.at(x, y)) c *= 1.0 - options.edge_penalty;
      out.confidence.at(x, y) = c;
    }
  }
  return out;
}

std::string synth_semantic_report(const DepthRender& render, const RenderOptions& options) {
  const ImageD& depth = render.depth;
  const int w = depth.width;
  const int h = depth.height;
  const auto edges = edge_mask(depth, options.edge_threshold);

  struct CellStats {
    GridCell cell;
    int pixels = 0;
    int hits = 0;
    int edges = 0;
    int grazing = 0;
    bool border_truncated = false;
  };
  std::vector<CellStats> cells;
  for (int v = 0; v < 3; ++v) {
    for (int hz = 0; hz < 4; ++hz) {
      CellStats s;
      s.cell = {static_cast<Horizontal>(hz), static_cast<Vertical>(v)};
      const int x0 = hz * w / 4, x1 = (hz + 1) * w / 4;
      const int y0 = v * h / 3, y1 = (v + 1) * h / 3;
      bool border_hit = false;
      int misses = 0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          ++s.pixels;
          if (!std::isfinite(depth.at(x, y))) {
            ++misses;
            continue;
          }
          ++s.hits;
          if (edges.at(x, y)) ++s.edges;
          if (render.incidence.at(x, y) < kGrazingCos) ++s.grazing;
          if (x == 0 || y == 0 || x == w - 1 || y == h - 1) border_hit = true;
        }
      }
      s.border_truncated = border_hit && (misses > 0 || s.edges > 0);
      cells.push_back(s);
    }
  }

  std::vector<SemanticRegion> regions;
  std::vector<bool> used(cells.size(), false);
  auto add = [&](std::size_t i, Category c, Priority p, double fraction,
                 std::string reason) {
    if (regions.size() >= 8) return;
    regions.push_back({cells[i].cell, c, p, size_of_fraction(fraction), std::move(reason)});
    used[i] = true;
  };

  std::vector<std::size_t> order(cells.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return cells[a].edges > cells[b].edges;
  });
  for (std::size_t i : order) {
    const auto& s = cells[i];
    if (s.edges >= std::max(3, s.pixels / 40)) {
      add(i, Category::kOcclusion, Priority::kHigh,
          4.0 * s.edges / s.pixels,
          "depth discontinuity across " + std::to_string(s.edges) + " pixels");
    }
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& s = cells[i];
    if (used[i] || s.hits == 0) continue;
    const double f = static_cast<double>(s.grazing) / s.hits;
    if (f >= 0.25) {
      add(i, Category::kGeometric, f >= 0.5 ? Priority::kHigh : Priority::kMedium,
          static_cast<double>(s.grazing) / s.pixels, "surface seen at a grazing angle");
    }
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (used[i] || !cells[i].border_truncated) continue;
    add(i, Category::kBoundary, Priority::kMedium,
        static_cast<double>(cells[i].hits) / cells[i].pixels,
        "geometry cut off by the image border");
  }
  for (std::size_t i = 0; regions.size() < 5 && i < cells.size(); ++i) {
    if (used[i] || cells[i].hits == 0) continue;
    add(i, Category::kTexture, Priority::kLow,
        static_cast<double>(cells[i].hits) / cells[i].pixels, "weak texture");
  }
  for (std::size_t i = 0; regions.size() < 5 && i < cells.size(); ++i) {
    if (used[i]) continue;
    add(i, Category::kTexture, Priority::kLow, 0.0, "empty background");
  }
  return format_report(regions);
}

}  // namespace nbv
