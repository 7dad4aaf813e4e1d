#include "nbv/voxel_field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "nbv/error.hpp"

namespace nbv {

namespace {

static_assert(std::endian::native == std::endian::little,
              "snapshot I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw InvalidInput("field snapshot: truncated input");
  }
  return v;
}

bool valid_depth(double d) { return std::isfinite(d) && d > 0.0; }

}  // namespace

GeometricField::GeometricField(const VoxelGrid& grid)
    : grid_(grid), uncertainty_(grid.size(), 1.0), count_(grid.size(), 0) {}

void GeometricField::observe(std::uint32_t v, double uncertainty) {
  uncertainty_[v] = std::min(uncertainty_[v], std::clamp(uncertainty, 0.0, 1.0));
  ++count_[v];
}

std::vector<double> normalize_confidence(std::span<const double> raw,
                                         std::span<const std::uint8_t> valid) {
  if (!valid.empty() && valid.size() != raw.size()) {
    throw InvalidInput("normalize_confidence: mask size mismatch");
  }
  auto is_valid = [&](std::size_t i) {
    return (valid.empty() || valid[i]) && std::isfinite(raw[i]);
  };
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  bool any = false;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!is_valid(i)) continue;
    any = true;
    lo = std::min(lo, raw[i]);
    hi = std::max(hi, raw[i]);
  }
  if (!any) return {};
  std::vector<double> out(raw.size(), 0.0);
  const double range = hi - lo;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!is_valid(i)) continue;
    out[i] = range > 0.0 ? (raw[i] - lo) / range : 1.0;
  }
  return out;
}

void splat_normalized(const ImageD& depth, const ImageD& confidence01,
                      const Pose& pose, const CameraIntrinsics& intrinsics,
                      GeometricField& field) {
  intrinsics.validate();
  if (!depth.same_shape(confidence01) ||
      !depth.same_shape(intrinsics.width, intrinsics.height)) {
    throw InvalidInput("splat: depth/confidence/intrinsics dimension mismatch");
  }
  const VoxelGrid& grid = field.grid();
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      const double d = depth.at(x, y);
      if (!valid_depth(d)) continue;
      const Vec3 p = back_project({x + 0.5, y + 0.5}, d, intrinsics, pose);
      const auto v = grid.locate(p);
      if (!v) continue;
      field.observe(*v, 1.0 - confidence01.at(x, y));
    }
  }
}

void splat_confidence(const ImageD& depth, const ImageD& raw_confidence,
                      const Pose& pose, const CameraIntrinsics& intrinsics,
                      GeometricField& field) {
  if (!depth.same_shape(raw_confidence)) {
    throw InvalidInput("splat: depth/confidence dimension mismatch");
  }
  std::vector<std::uint8_t> valid(depth.size());
  for (std::size_t i = 0; i < depth.size(); ++i) {
    valid[i] = valid_depth(depth.data[i]) ? 1 : 0;
  }
  std::vector<double> norm = normalize_confidence(raw_confidence.data, valid);
  if (norm.empty()) return;
  ImageD conf(depth.width, depth.height);
  conf.data = std::move(norm);
  splat_normalized(depth, conf, pose, intrinsics, field);
}

FusedField::FusedField(const VoxelGrid& grid, std::vector<double> utility,
                       const FusionWeights& weights)
    : grid_(grid),
      utility_(std::move(utility)),
      decay_count_(grid.size(), 0),
      weights_(weights) {
  if (utility_.size() != grid.size()) {
    throw InvalidInput("fused field: utility size does not match grid");
  }
}

double FusedField::total() const {
  double sum = 0.0;
  for (double u : utility_) sum += u;
  return sum;
}

void FusedField::raise(std::uint32_t v, double delta) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw InvalidInput("fused field: raise needs a finite non-negative delta");
  }
  utility_.at(v) += delta;
}

std::size_t FusedField::apply_decay(const Pose& pose, const FrustumSpec& spec,
                                    double eta) {
  if (!(eta > 0.0 && eta < 1.0)) {
    throw InvalidInput("apply_decay: eta must lie in (0, 1)");
  }
  spec.validate();
  const FrustumTest frustum(pose, spec);
  const double keep = 1.0 - eta;
  const auto& dims = grid_.dims();
  std::size_t changed = 0;
  std::uint32_t v = 0;
  for (int z = 0; z < dims[2]; ++z) {
    for (int y = 0; y < dims[1]; ++y) {
      for (int x = 0; x < dims[0]; ++x, ++v) {
        if (!frustum.contains(grid_.center(Index3(x, y, z)))) continue;
        utility_[v] *= keep;
        if (decay_count_[v] < std::numeric_limits<std::uint16_t>::max()) {
          ++decay_count_[v];
        }
        ++changed;
      }
    }
  }
  return changed;
}

FusedField fuse(const GeometricField& geo, std::span<const double> semantic,
                const FusionWeights& weights) {
  if (semantic.size() != geo.grid().size()) {
    throw InvalidInput("fuse: semantic field is not on the geometric grid");
  }
  if (!(weights.w_g >= 0.0) || !(weights.w_s >= 0.0) ||
      !(weights.gamma >= 0.0) || !(weights.unobserved_geo >= 0.0)) {
    throw InvalidInput("fuse: weights must be non-negative");
  }
  const auto unc = geo.uncertainty();
  std::vector<double> utility(unc.size());
  for (std::uint32_t v = 0; v < unc.size(); ++v) {
    const double g = geo.observed(v) ? unc[v] : weights.unobserved_geo;
    utility[v] = weights.w_g * g + weights.w_s * semantic[v] + weights.gamma;
  }
  return FusedField(geo.grid(), std::move(utility), weights);
}

std::size_t apply_decay(FusedField& field, const Pose& pose,
                        const FrustumSpec& spec, double eta) {
  return field.apply_decay(pose, spec, eta);
}

void write_field_snapshot(std::ostream& out, const VoxelGrid& grid,
                          std::span<const double> values) {
  if (values.size() != grid.size()) {
    throw InvalidInput("field snapshot: value count does not match grid");
  }
  for (int a = 0; a < 3; ++a) put<float>(out, static_cast<float>(grid.origin()[a]));
  put<float>(out, static_cast<float>(grid.voxel_size()));
  for (int d : grid.dims()) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  for (double v : values) put<float>(out, static_cast<float>(v));
}

void write_field_snapshot(const std::string& path, const VoxelGrid& grid,
                          std::span<const double> values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  write_field_snapshot(out, grid, values);
}

FieldSnapshot read_field_snapshot(std::istream& in) {
  FieldSnapshot s;
  for (int a = 0; a < 3; ++a) s.origin[a] = get<float>(in);
  s.voxel_size = get<float>(in);
  std::size_t n = 1;
  for (int a = 0; a < 3; ++a) {
    s.dims[a] = static_cast<int>(get<std::uint32_t>(in));
    n *= static_cast<std::size_t>(s.dims[a]);
  }
  s.values.resize(n);
  for (auto& v : s.values) v = get<float>(in);
  return s;
}

}  // namespace nbv
