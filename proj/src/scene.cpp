#include "nbv/scene.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "nbv/error.hpp"
#include "nbv/rng.hpp"

namespace nbv {

namespace {

struct Shape {
  Solid solid;
  // Occupancy test in world coordinates.
  std::vector<std::pair<Vec3, Vec3>> boxes;
  Vec3 sphere_center = Vec3::Zero();
  double sphere_radius = 0.0;

  bool contains(const Vec3& p) const {
    if (sphere_radius > 0.0) {
      return (p - sphere_center).squaredNorm() <= sphere_radius * sphere_radius;
    }
    for (const auto& [lo, hi] : boxes) {
      if ((p.array() >= lo.array()).all() && (p.array() < hi.array()).all()) {
        return true;
      }
    }
    return false;
  }
};

bool footprints_overlap(const Solid& a, const Solid& b, double margin) {
  return a.min.x() < b.max.x() + margin && b.min.x() < a.max.x() + margin &&
         a.min.y() < b.max.y() + margin && b.min.y() < a.max.y() + margin;
}

void rasterize(const Shape& shape, const VoxelGrid& grid,
               std::vector<std::uint8_t>& occupied) {
  const Index3 lo = grid.cell_of(shape.solid.min);
  const Index3 hi = grid.cell_of(shape.solid.max);
  const auto& dims = grid.dims();
  for (int z = std::max(lo.z(), 0); z <= std::min(hi.z(), dims[2] - 1); ++z) {
    for (int y = std::max(lo.y(), 0); y <= std::min(hi.y(), dims[1] - 1); ++y) {
      for (int x = std::max(lo.x(), 0); x <= std::min(hi.x(), dims[0] - 1); ++x) {
        const Index3 c(x, y, z);
        if (shape.contains(grid.center(c))) occupied[grid.linear(c)] = 1;
      }
    }
  }
}

Shape make_box(const Vec3& lo, const Vec3& hi, SolidKind kind = SolidKind::kBox) {
  Shape s;
  s.solid = {kind, lo, hi};
  s.boxes.emplace_back(lo, hi);
  return s;
}

// Picks a footprint center inside a disk (object regime) or a rectangle
// (scene regime) such that the new solid clears all previous ones.
template <typename MakeAt, typename SampleCenter, typename Accept>
bool place(std::vector<Shape>& placed, double margin, SampleCenter&& sample_center,
           MakeAt&& make_at, Accept&& accept) {
  constexpr int kAttempts = 4000;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    const Vec3 c = sample_center();
    Shape s = make_at(c);
    if (!accept(s)) continue;
    const bool clear = std::none_of(placed.begin(), placed.end(), [&](const Shape& o) {
      return footprints_overlap(s.solid, o.solid, margin);
    });
    if (clear) {
      placed.push_back(std::move(s));
      return true;
    }
  }
  return false;
}

OccupancyScene build_object_scene(const SceneSpec& spec, Rng& rng) {
  if (spec.complexity < 1 || spec.complexity > 7) {
    throw SceneError("object regime supports 1 to 7 solids");
  }
  const VoxelGrid grid(Vec3::Zero(), spec.voxel_size, spec.dims);
  const Vec3 extent = grid.extent();
  const double radius = 0.42 * std::min(extent.x(), extent.y());
  const Vec3 center(extent.x() / 2.0, extent.y() / 2.0, 0.0);
  if (radius > extent.z()) throw SceneError("grid too flat for the hemisphere");
  const double place_radius = 0.45 * radius;
  const double shrink = 1.0 / std::sqrt(std::max(1.0, spec.complexity / 3.0));
  const double vs = spec.voxel_size;
  const double min_side = 3.0 * vs;

  auto side = [&](double lo, double hi) {
    return std::max(min_side, rng.uniform(lo, hi) * radius * shrink);
  };
  auto sample_center = [&]() {
    const double r = place_radius * std::sqrt(rng.uniform());
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    return Vec3(center.x() + r * std::cos(phi), center.y() + r * std::sin(phi), 0.0);
  };

  auto any = [](const Shape&) { return true; };
  std::vector<Shape> placed;
  for (int i = 0; i < spec.complexity; ++i) {
    const auto kind = static_cast<int>(rng.below(3));
    bool ok = false;
    if (kind == 0) {
      const double a = side(0.09, 0.24), b = side(0.09, 0.24), h = side(0.08, 0.34);
      ok = place(placed, 2.0 * vs, sample_center, [&](const Vec3& c) {
        return make_box(Vec3(c.x() - a / 2, c.y() - b / 2, 0.0),
                        Vec3(c.x() + a / 2, c.y() + b / 2, h));
      }, any);
    } else if (kind == 1) {
      const double r = std::max(1.6 * vs, rng.uniform(0.05, 0.12) * radius * shrink);
      ok = place(placed, 2.0 * vs, sample_center, [&](const Vec3& c) {
        Shape s;
        s.sphere_center = Vec3(c.x(), c.y(), r);
        s.sphere_radius = r;
        s.solid = {SolidKind::kSphere, Vec3(c.x() - r, c.y() - r, 0.0),
                   Vec3(c.x() + r, c.y() + r, 2.0 * r)};
        return s;
      }, any);
    } else {
      const double a = side(0.14, 0.26), b = side(0.08, 0.16);
      const double h_low = side(0.05, 0.10), h_high = side(0.20, 0.36);
      const bool along_x = rng.uniform() < 0.5;
      ok = place(placed, 2.0 * vs, sample_center, [&](const Vec3& c) {
        const double ax = along_x ? a : b, by = along_x ? b : a;
        Shape s;
        const Vec3 lo(c.x() - ax / 2, c.y() - by / 2, 0.0);
        const Vec3 hi(c.x() + ax / 2, c.y() + by / 2, std::max(h_low, h_high));
        s.solid = {SolidKind::kLShape, lo, hi};
        s.boxes.emplace_back(lo, Vec3(hi.x(), hi.y(), h_low));
        const Vec3 arm_hi = along_x ? Vec3(lo.x() + ax / 2, hi.y(), h_high)
                                    : Vec3(hi.x(), lo.y() + by / 2, h_high);
        s.boxes.emplace_back(lo, arm_hi);
        return s;
      }, any);
    }
    if (!ok) throw SceneError("could not place all solids without overlap");
  }

  std::vector<std::uint8_t> occ(grid.size(), 0);
  std::vector<Solid> solids;
  double top = 0.0;
  for (const auto& s : placed) {
    rasterize(s, grid, occ);
    solids.push_back(s.solid);
    top = std::max(top, s.solid.max.z());
  }
  OccupancyScene scene(grid, std::move(occ), Regime::kObject);
  scene.set_workspace(center, radius, center + Vec3(0, 0, 0.4 * top), 0.0);
  scene.set_solids(std::move(solids));
  return scene;
}

OccupancyScene build_room_scene(const SceneSpec& spec, Rng& rng) {
  if (spec.complexity < 0 || spec.complexity > 12) {
    throw SceneError("scene regime supports 0 to 12 furniture blocks");
  }
  const VoxelGrid grid(Vec3::Zero(), spec.voxel_size, spec.dims);
  const Vec3 extent = grid.extent();
  const double vs = spec.voxel_size;
  const double ring = 1.0;  // free band along the walls
  if (std::min(extent.x(), extent.y()) < 2.0 * ring + 1.0 || extent.z() < 2.0) {
    throw SceneError("room too small");
  }
  const double height = extent.z();
  const double camera_height = std::min(1.5, 0.5 * height);

  std::vector<Shape> placed;
  const Vec3 lo(ring + vs, ring + vs, 0.0);
  const Vec3 hi(extent.x() - ring - vs, extent.y() - ring - vs, 0.0);
  auto sample_center = [&]() {
    return Vec3(rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y()), 0.0);
  };
  auto fits = [&](const Shape& s) {
    return s.solid.min.x() >= lo.x() && s.solid.min.y() >= lo.y() &&
           s.solid.max.x() <= hi.x() && s.solid.max.y() <= hi.y();
  };
  // A piece that does not fit is retried smaller, then with a narrower gap to
  // its neighbors, before giving up.
  struct Level {
    double scale;
    double gap;
  };
  constexpr Level kLevels[] = {{1.0, 0.4}, {0.8, 0.4}, {0.65, 0.4}, {0.5, 0.4},
                               {0.5, 0.25}, {0.4, 0.15}, {0.35, 0.1}};
  for (int i = 0; i < spec.complexity; ++i) {
    const auto kind = static_cast<int>(rng.below(3));
    bool ok = false;
    if (kind == 0) {  // table / cabinet
      const double a0 = rng.uniform(0.5, 1.4), b0 = rng.uniform(0.5, 1.2);
      const double h = rng.uniform(0.5, 1.2);
      for (const auto [k, gap] : kLevels) {
        if (ok) break;
        const double a = k * a0, b = k * b0;
        ok = place(placed, gap, sample_center, [&](const Vec3& c) {
          return make_box(Vec3(c.x() - a / 2, c.y() - b / 2, vs),
                          Vec3(c.x() + a / 2, c.y() + b / 2, vs + h));
        }, fits);
      }
    } else if (kind == 1) {  // tall shelf, hides what is behind it
      const double a0 = rng.uniform(0.8, 1.8), b = rng.uniform(0.3, 0.5);
      const double h = rng.uniform(1.7, std::min(2.3, height - 2 * vs));
      const bool along_x = rng.uniform() < 0.5;
      for (const auto [k, gap] : kLevels) {
        if (ok) break;
        const double a = k * a0;
        ok = place(placed, gap, sample_center, [&](const Vec3& c) {
          const double ax = along_x ? a : b, by = along_x ? b : a;
          return make_box(Vec3(c.x() - ax / 2, c.y() - by / 2, vs),
                          Vec3(c.x() + ax / 2, c.y() + by / 2, vs + h), SolidKind::kWall);
        }, fits);
      }
    } else {  // L-shaped sofa
      const double a0 = rng.uniform(1.0, 1.8), b0 = rng.uniform(0.6, 1.0);
      const double h_low = rng.uniform(0.4, 0.6), h_back = rng.uniform(0.9, 1.2);
      const int back_side = static_cast<int>(rng.below(4));
      for (const auto [k, gap] : kLevels) {
        if (ok) break;
        const double a = k * a0, b = std::max(0.45, k * b0);
        ok = place(placed, gap, sample_center, [&](const Vec3& c) {
          const bool along_x = back_side < 2;
          const double ax = along_x ? a : b, by = along_x ? b : a;
          const Vec3 l(c.x() - ax / 2, c.y() - by / 2, vs);
          const Vec3 h(c.x() + ax / 2, c.y() + by / 2, vs + h_back);
          Shape s;
          s.solid = {SolidKind::kLShape, l, h};
          s.boxes.emplace_back(l, Vec3(h.x(), h.y(), vs + h_low));
          const double t = 0.25;
          switch (back_side) {
            case 0: s.boxes.emplace_back(l, Vec3(h.x(), l.y() + t, h.z())); break;
            case 1: s.boxes.emplace_back(Vec3(l.x(), h.y() - t, l.z()), h); break;
            case 2: s.boxes.emplace_back(l, Vec3(l.x() + t, h.y(), h.z())); break;
            default: s.boxes.emplace_back(Vec3(h.x() - t, l.y(), l.z()), h); break;
          }
          return s;
        }, fits);
      }
    }
    if (!ok) throw SceneError("could not place all furniture without overlap");
  }

  std::vector<std::uint8_t> occ(grid.size(), 0);
  const auto& d = grid.dims();
  for (int z = 0; z < d[2]; ++z) {
    for (int y = 0; y < d[1]; ++y) {
      for (int x = 0; x < d[0]; ++x) {
        if (z == 0 || z == d[2] - 1 || x == 0 || y == 0 || x == d[0] - 1 ||
            y == d[1] - 1) {
          occ[grid.linear(Index3(x, y, z))] = 1;
        }
      }
    }
  }
  std::vector<Solid> solids;
  for (const auto& s : placed) {
    rasterize(s, grid, occ);
    solids.push_back(s.solid);
  }
  OccupancyScene scene(grid, std::move(occ), Regime::kScene);
  const Vec3 center(extent.x() / 2.0, extent.y() / 2.0, camera_height);
  scene.set_workspace(center, std::min(extent.x(), extent.y()) / 2.0 - ring,
                      center, camera_height);
  scene.set_solids(std::move(solids));
  return scene;
}

}  // namespace

std::string_view to_string(Regime r) {
  return r == Regime::kObject ? "object" : "scene";
}

Regime regime_from_string(std::string_view name) {
  if (name == "object") return Regime::kObject;
  if (name == "scene") return Regime::kScene;
  throw InvalidInput("unknown regime '" + std::string(name) + "'");
}

OccupancyScene::OccupancyScene(const VoxelGrid& grid,
                               std::vector<std::uint8_t> occupied, Regime regime)
    : grid_(grid), regime_(regime), occupied_(std::move(occupied)) {
  if (occupied_.size() != grid_.size()) {
    throw InvalidInput("scene: occupancy does not match grid");
  }
  surface_.assign(grid_.size(), 0);
  const auto& d = grid_.dims();
  static constexpr int kNeighbors[6][3] = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                                           {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};
  for (std::uint32_t v = 0; v < grid_.size(); ++v) {
    if (!occupied_[v]) continue;
    const Index3 c = grid_.unlinear(v);
    for (const auto& n : kNeighbors) {
      const Index3 q(c.x() + n[0], c.y() + n[1], c.z() + n[2]);
      if (q.x() < 0 || q.y() < 0 || q.z() < 0 || q.x() >= d[0] ||
          q.y() >= d[1] || q.z() >= d[2]) {
        continue;
      }
      if (!occupied_[grid_.linear(q)]) {
        surface_[v] = 1;
        ++surface_count_;
        break;
      }
    }
  }
  if (free_count() == 0) throw SceneError("scene has no free voxel");
}

std::size_t OccupancyScene::free_count() const {
  return static_cast<std::size_t>(
      std::count(occupied_.begin(), occupied_.end(), std::uint8_t{0}));
}

void OccupancyScene::set_workspace(const Vec3& center, double radius,
                                   const Vec3& target, double camera_height) {
  workspace_center_ = center;
  workspace_radius_ = radius;
  look_target_ = target;
  camera_height_ = camera_height;
}

std::uint64_t OccupancyScene::hash() const {
  return occupancy_hash(grid_, occupied_);
}

std::uint64_t occupancy_hash(const VoxelGrid& grid,
                             std::span<const std::uint8_t> occupied) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto feed = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001B3ULL;
    }
  };
  const double vs = grid.voxel_size();
  feed(grid.origin().data(), 3 * sizeof(double));
  feed(&vs, sizeof vs);
  feed(grid.dims().data(), 3 * sizeof(int));
  feed(occupied.data(), occupied.size());
  return h;
}

OccupancyScene build_scene(const SceneSpec& spec) {
  for (int d : spec.dims) {
    if (d < 8 || d > kMaxSceneDim) {
      throw SceneError("scene dims must lie in [8, " +
                       std::to_string(kMaxSceneDim) + "]");
    }
  }
  if (!(spec.voxel_size > 0.0)) throw SceneError("voxel size must be positive");
  Rng rng(derive_seed(spec.seed, "scene"));
  return spec.regime == Regime::kObject ? build_object_scene(spec, rng)
                                        : build_room_scene(spec, rng);
}

std::size_t count_components(const OccupancyScene& scene) {
  const VoxelGrid& grid = scene.grid();
  std::vector<std::uint8_t> seen(grid.size(), 0);
  std::size_t components = 0;
  std::deque<std::uint32_t> queue;
  const auto& d = grid.dims();
  for (std::uint32_t v = 0; v < grid.size(); ++v) {
    if (!scene.is_occupied(v) || seen[v]) continue;
    ++components;
    seen[v] = 1;
    queue.push_back(v);
    while (!queue.empty()) {
      const Index3 c = grid.unlinear(queue.front());
      queue.pop_front();
      for (int a = 0; a < 3; ++a) {
        for (int s : {-1, 1}) {
          Index3 q = c;
          q[a] += s;
          if (q[a] < 0 || q[a] >= d[a]) continue;
          const std::uint32_t w = grid.linear(q);
          if (scene.is_occupied(w) && !seen[w]) {
            seen[w] = 1;
            queue.push_back(w);
          }
        }
      }
    }
  }
  return components;
}

}  // namespace nbv
