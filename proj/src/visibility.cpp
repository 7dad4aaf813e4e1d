#include "nbv/visibility.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <thread>

#include "nbv/error.hpp"
#include "nbv/io.hpp"
#include "nbv/rng.hpp"

namespace nbv {

namespace {

constexpr char kCacheMagic[8] = {'N', 'B', 'V', 'M', 'A', 'S', 'K', '\0'};
constexpr std::uint32_t kCacheVersion = 1;

double wrap_degrees(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w < 0.0) w += 360.0;
  return w;
}

// Ray length that covers every voxel center up to max_depth along a ray that
// makes angle acos(cos_theta) with the optical axis.
double ray_length(const FrustumSpec& frustum, double cos_theta,
                  double voxel_size) {
  return frustum.max_depth / std::max(cos_theta, 1e-6) +
         std::sqrt(3.0) * voxel_size;
}

Vec3 cone_direction(const Pose& pose, double cos_theta, double phi) {
  const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
  const Vec3 cam(sin_theta * std::cos(phi), sin_theta * std::sin(phi), cos_theta);
  return (pose.rotation() * cam).normalized();
}

void check_seed(std::uint32_t seed, const OccupancyView& occupancy) {
  if (seed >= occupancy.grid->size()) {
    throw InvalidInput("visibility: seed outside the grid");
  }
  if (occupancy.is_occupied(seed)) {
    throw DegenerateSeed("visibility: seed voxel " + std::to_string(seed) +
                         " is occupied");
  }
}

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(T));
  }
  void bytes(const char* p, std::size_t n) { buf_.append(p, n); }
  std::string& str() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}
  template <typename T>
  T get() {
    if (data_.size() - pos_ < sizeof(T)) {
      throw CacheFormatError("mask cache: truncated file");
    }
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t pos() const { return pos_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

std::uint64_t fnv(std::string_view data) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

struct CacheHeader {
  VisibilityParams params;
  std::uint64_t occupancy_hash = 0;
  std::uint64_t lookups = 0;
  std::uint64_t hits = 0;
  std::uint64_t count = 0;
};

// Validates magic, version and checksum; leaves the reader at the first mask.
CacheHeader read_header(Reader& r, std::string_view data) {
  if (data.size() < sizeof(kCacheMagic) + 8 ||
      std::memcmp(data.data(), kCacheMagic, sizeof(kCacheMagic)) != 0) {
    throw CacheFormatError("mask cache: bad magic");
  }
  std::uint64_t stored;
  std::memcpy(&stored, data.data() + data.size() - 8, 8);
  if (stored != fnv(data.substr(0, data.size() - 8))) {
    throw CacheFormatError("mask cache: checksum mismatch");
  }
  for (std::size_t i = 0; i < sizeof(kCacheMagic); ++i) r.get<char>();
  if (r.get<std::uint32_t>() != kCacheVersion) {
    throw CacheFormatError("mask cache: unsupported format version");
  }
  CacheHeader h;
  h.params.r_pre = r.get<std::uint32_t>();
  h.params.bins.yaw_bins = static_cast<int>(r.get<std::uint32_t>());
  h.params.bins.pitch_bins = static_cast<int>(r.get<std::uint32_t>());
  h.params.bins.pitch_min_deg = r.get<double>();
  h.params.bins.pitch_max_deg = r.get<double>();
  h.params.frustum.fov_deg = r.get<double>();
  h.params.frustum.min_depth = r.get<double>();
  h.params.frustum.max_depth = r.get<double>();
  h.params.rng_seed = r.get<std::uint64_t>();
  h.occupancy_hash = r.get<std::uint64_t>();
  h.lookups = r.get<std::uint64_t>();
  h.hits = r.get<std::uint64_t>();
  h.count = r.get<std::uint64_t>();
  if (h.params.r_pre == 0 || h.params.bins.yaw_bins < 1 ||
      h.params.bins.pitch_bins < 1) {
    throw CacheFormatError("mask cache: invalid header");
  }
  return h;
}

}  // namespace

void BinLayout::validate() const {
  if (yaw_bins < 1 || pitch_bins < 1) {
    throw InvalidInput("bins: need at least one yaw and one pitch bin");
  }
  if (!(pitch_min_deg < pitch_max_deg) || pitch_min_deg < -90.0 ||
      pitch_max_deg > 90.0) {
    throw InvalidInput("bins: pitch range must lie within [-90, 90]");
  }
}

OrientationBin BinLayout::bin(int yaw_index, int pitch_index) const {
  OrientationBin b;
  b.yaw_index = yaw_index;
  b.pitch_index = pitch_index;
  b.yaw_center_deg = yaw_index * yaw_width();
  b.pitch_center_deg = pitch_min_deg + (pitch_index + 0.5) * pitch_width();
  return b;
}

OrientationBin BinLayout::bin_at(int flat_index) const {
  return bin(flat_index % yaw_bins, flat_index / yaw_bins);
}

OrientationBin BinLayout::bin_of(double yaw_deg, double pitch_deg) const {
  const double w = yaw_width();
  int k = static_cast<int>(std::floor((wrap_degrees(yaw_deg) + w / 2.0) / w));
  k %= yaw_bins;
  const double p = std::clamp(pitch_deg, pitch_min_deg, pitch_max_deg);
  int j = static_cast<int>(std::floor((p - pitch_min_deg) / pitch_width()));
  j = std::clamp(j, 0, pitch_bins - 1);
  return bin(k, j);
}

bool VisibilityMask::operator==(const VisibilityMask& o) const {
  if (seed != o.seed || !(bin == o.bin) || rays != o.rays ||
      entries.size() != o.entries.size()) {
    return false;
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].voxel != o.entries[i].voxel ||
        entries[i].hits != o.entries[i].hits) {
      return false;
    }
  }
  return true;
}

Pose bin_center_pose(const VoxelGrid& grid, std::uint32_t seed,
                     const OrientationBin& bin) {
  return pose_from_yaw_pitch(grid.center(seed), bin.yaw_center_deg,
                             bin.pitch_center_deg);
}

VisibilityMask mc_visibility(std::uint32_t seed, const OrientationBin& bin,
                             const OccupancyView& occupancy,
                             const FrustumSpec& frustum, std::uint32_t r_pre,
                             std::uint64_t rng_seed) {
  if (r_pre == 0) throw InvalidInput("mc_visibility: r_pre must be >= 1");
  frustum.validate();
  check_seed(seed, occupancy);
  const VoxelGrid& grid = *occupancy.grid;
  const Pose pose = bin_center_pose(grid, seed, bin);
  const FrustumTest test(pose, frustum);
  const Vec3 origin = grid.center(seed);
  const double cos_half = std::cos(deg_to_rad(frustum.fov_deg) / 2.0);

  thread_local std::vector<std::uint32_t> counts;
  thread_local std::vector<std::uint32_t> touched;
  if (counts.size() != grid.size()) counts.assign(grid.size(), 0);
  touched.clear();

  auto credit = [&](std::uint32_t v) {
    if (!test.contains(grid.center(v))) return;
    if (counts[v]++ == 0) touched.push_back(v);
  };

  Rng rng(rng_seed);
  for (std::uint32_t r = 0; r < r_pre; ++r) {
    const double cos_theta = 1.0 - rng.uniform() * (1.0 - cos_half);
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    const Vec3 dir = cone_direction(pose, cos_theta, phi);
    traverse_ray(grid, origin, dir, ray_length(frustum, cos_theta, grid.voxel_size()),
                 [&](std::uint32_t v, const Index3&, double, int) {
                   if (v == seed) return true;
                   credit(v);
                   return !occupancy.is_occupied(v);
                 });
  }

  VisibilityMask mask;
  mask.seed = seed;
  mask.bin = bin;
  mask.rays = r_pre;
  std::sort(touched.begin(), touched.end());
  mask.entries.reserve(touched.size());
  for (std::uint32_t v : touched) {
    mask.entries.push_back({v, counts[v]});
    counts[v] = 0;
  }
  return mask;
}

std::vector<double> exact_visibility(std::uint32_t seed, const OrientationBin& bin,
                                     const OccupancyView& occupancy,
                                     const FrustumSpec& frustum,
                                     std::uint32_t directions) {
  if (directions == 0) throw InvalidInput("exact_visibility: need directions");
  frustum.validate();
  check_seed(seed, occupancy);
  const VoxelGrid& grid = *occupancy.grid;
  const Pose pose = bin_center_pose(grid, seed, bin);
  const FrustumTest test(pose, frustum);
  const Vec3 origin = grid.center(seed);
  const double cos_half = std::cos(deg_to_rad(frustum.fov_deg) / 2.0);
  const double step = grid.voxel_size() / 32.0;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));

  std::vector<std::uint32_t> counts(grid.size(), 0);
  for (std::uint32_t i = 0; i < directions; ++i) {
    // Equal-area spiral over the spherical cap.
    const double cos_theta =
        1.0 - (1.0 - cos_half) * (i + 0.5) / static_cast<double>(directions);
    const double phi = golden * i;
    const Vec3 dir = cone_direction(pose, cos_theta, phi);
    const double t_max = ray_length(frustum, cos_theta, grid.voxel_size());
    std::int64_t last = seed;
    for (double t = step; t <= t_max; t += step) {
      const auto v = grid.locate(origin + t * dir);
      if (!v) break;
      if (static_cast<std::int64_t>(*v) == last) continue;
      last = *v;
      if (test.contains(grid.center(*v))) ++counts[*v];
      if (occupancy.is_occupied(*v)) break;
    }
  }
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t v = 0; v < out.size(); ++v) {
    out[v] = static_cast<double>(counts[v]) / directions;
  }
  return out;
}

bool VisibilityParams::operator==(const VisibilityParams& o) const {
  return bins.yaw_bins == o.bins.yaw_bins && bins.pitch_bins == o.bins.pitch_bins &&
         bins.pitch_min_deg == o.bins.pitch_min_deg &&
         bins.pitch_max_deg == o.bins.pitch_max_deg &&
         frustum.fov_deg == o.frustum.fov_deg &&
         frustum.min_depth == o.frustum.min_depth &&
         frustum.max_depth == o.frustum.max_depth && r_pre == o.r_pre &&
         rng_seed == o.rng_seed;
}

MaskCache::MaskCache(const VisibilityParams& params, const VoxelGrid& grid,
                     std::vector<std::uint8_t> occupancy)
    : params_(params), grid_(grid), occupancy_(std::move(occupancy)) {
  params_.bins.validate();
  params_.frustum.validate();
  if (params_.r_pre == 0) throw InvalidInput("mask cache: r_pre must be >= 1");
  if (occupancy_.size() != grid_.size()) {
    throw InvalidInput("mask cache: occupancy does not match grid");
  }
  occupancy_hash_ = nbv::occupancy_hash(grid_, occupancy_);
}

MaskCache::MaskCache(const VisibilityParams& params, const OccupancyScene& scene)
    : MaskCache(params, scene.grid(),
                std::vector<std::uint8_t>(scene.occupied().begin(),
                                          scene.occupied().end())) {}

std::shared_ptr<const VisibilityMask> MaskCache::find(
    std::uint32_t seed, const OrientationBin& bin) const {
  std::lock_guard lock(mutex_);
  const auto it = masks_.find(key(seed, bin));
  return it == masks_.end() ? nullptr : it->second;
}

std::shared_ptr<const VisibilityMask> MaskCache::get_or_build(
    std::uint32_t seed, const OrientationBin& bin) {
  ++lookups_;
  const std::uint64_t k = key(seed, bin);
  {
    std::lock_guard lock(mutex_);
    const auto it = masks_.find(k);
    if (it != masks_.end()) {
      ++hits_;
      return it->second;
    }
  }
  auto built = std::make_shared<const VisibilityMask>(
      mc_visibility(seed, bin, occupancy(), params_.frustum, params_.r_pre,
                    derive_seed(params_.rng_seed, seed, params_.bins.flat(bin))));
  rays_cast_ += params_.r_pre;
  std::lock_guard lock(mutex_);
  return masks_.try_emplace(k, std::move(built)).first->second;
}

std::size_t MaskCache::prewarm(std::span<const std::uint32_t> seeds,
                               unsigned threads) {
  std::vector<std::pair<std::uint32_t, int>> todo;
  for (std::uint32_t s : seeds) {
    for (int b = 0; b < params_.bins.count(); ++b) {
      if (!find(s, params_.bins.bin_at(b))) todo.emplace_back(s, b);
    }
  }
  auto build = [&](std::size_t i) {
    const auto [s, b] = todo[i];
    const OrientationBin bin = params_.bins.bin_at(b);
    auto m = std::make_shared<const VisibilityMask>(mc_visibility(
        s, bin, occupancy(), params_.frustum, params_.r_pre,
        derive_seed(params_.rng_seed, s, b)));
    rays_cast_ += params_.r_pre;
    std::lock_guard lock(mutex_);
    masks_.try_emplace(key(s, bin), std::move(m));
  };
  threads = std::max(1u, threads);
  if (threads == 1) {
    for (std::size_t i = 0; i < todo.size(); ++i) build(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < todo.size(); i = next++) build(i);
      });
    }
  }
  return todo.size();
}

CacheStats MaskCache::stats() const {
  CacheStats s;
  std::lock_guard lock(mutex_);
  s.entries = masks_.size();
  for (const auto& [k, m] : masks_) s.bytes += m->bytes();
  s.lookups = lookups_;
  s.hits = hits_;
  if (s.lookups == 0) {
    s.lookups = stored_lookups_;
    s.hits = stored_hits_;
  }
  s.rays_cast = rays_cast_;
  return s;
}

void MaskCache::reset_counters() {
  lookups_ = 0;
  hits_ = 0;
  rays_cast_ = 0;
  stored_lookups_ = 0;
  stored_hits_ = 0;
}

void MaskCache::save(const std::string& path) const {
  const CacheStats st = stats();
  std::vector<std::pair<std::uint64_t, std::shared_ptr<const VisibilityMask>>> sorted;
  {
    std::lock_guard lock(mutex_);
    sorted.assign(masks_.begin(), masks_.end());
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  Writer w;
  w.bytes(kCacheMagic, sizeof(kCacheMagic));
  w.put<std::uint32_t>(kCacheVersion);
  w.put<std::uint32_t>(params_.r_pre);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params_.bins.yaw_bins));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params_.bins.pitch_bins));
  w.put<double>(params_.bins.pitch_min_deg);
  w.put<double>(params_.bins.pitch_max_deg);
  w.put<double>(params_.frustum.fov_deg);
  w.put<double>(params_.frustum.min_depth);
  w.put<double>(params_.frustum.max_depth);
  w.put<std::uint64_t>(params_.rng_seed);
  w.put<std::uint64_t>(occupancy_hash_);
  w.put<std::uint64_t>(st.lookups);
  w.put<std::uint64_t>(st.hits);
  w.put<std::uint64_t>(sorted.size());
  for (const auto& [k, m] : sorted) {
    w.put<std::uint32_t>(m->seed);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m->bin.yaw_index));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m->bin.pitch_index));
    w.put<std::uint32_t>(m->rays);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m->entries.size()));
    for (const auto& e : m->entries) {
      w.put<std::uint32_t>(e.voxel);
      w.put<std::uint32_t>(e.hits);
    }
  }
  w.put<std::uint64_t>(fnv(w.str()));
  write_file_atomic(path, w.str());
}

std::unique_ptr<MaskCache> MaskCache::load(const std::string& path,
                                           const VisibilityParams& params,
                                           const OccupancyScene& scene) {
  return load(path, params, scene.grid(),
              std::vector<std::uint8_t>(scene.occupied().begin(), scene.occupied().end()));
}

std::unique_ptr<MaskCache> MaskCache::load(const std::string& path,
                                           const VisibilityParams& params,
                                           const VoxelGrid& grid,
                                           std::vector<std::uint8_t> occupancy) {
  std::string data;
  try {
    data = read_file(path);
  } catch (const Error& e) {
    throw CacheFormatError(e.what());
  }
  Reader r(data);
  const CacheHeader h = read_header(r, data);
  if (!(h.params == params)) {
    throw CacheFormatError("mask cache: built with different visibility parameters");
  }
  auto cache = std::make_unique<MaskCache>(params, grid, std::move(occupancy));
  if (h.occupancy_hash != cache->occupancy_hash_) {
    throw CacheFormatError("mask cache: built for a different scene");
  }
  const std::size_t n_voxels = grid.size();
  for (std::uint64_t i = 0; i < h.count; ++i) {
    auto m = std::make_shared<VisibilityMask>();
    m->seed = r.get<std::uint32_t>();
    const auto yaw = r.get<std::uint32_t>();
    const auto pitch = r.get<std::uint32_t>();
    m->rays = r.get<std::uint32_t>();
    const auto n = r.get<std::uint32_t>();
    if (m->seed >= n_voxels || yaw >= static_cast<std::uint32_t>(params.bins.yaw_bins) ||
        pitch >= static_cast<std::uint32_t>(params.bins.pitch_bins) ||
        m->rays != params.r_pre || n > n_voxels ||
        static_cast<std::size_t>(n) * 8 > r.remaining()) {
      throw CacheFormatError("mask cache: corrupt mask record");
    }
    m->bin = params.bins.bin(static_cast<int>(yaw), static_cast<int>(pitch));
    m->entries.resize(n);
    for (auto& e : m->entries) {
      e.voxel = r.get<std::uint32_t>();
      e.hits = r.get<std::uint32_t>();
      if (e.voxel >= n_voxels || e.hits == 0 || e.hits > m->rays) {
        throw CacheFormatError("mask cache: corrupt mask entry");
      }
    }
    const std::uint64_t k = cache->key(m->seed, m->bin);
    cache->masks_.emplace(k, std::move(m));
  }
  if (r.remaining() != 8) throw CacheFormatError("mask cache: trailing bytes");
  cache->stored_lookups_ = h.lookups;
  cache->stored_hits_ = h.hits;
  return cache;
}

CacheStats MaskCache::read_stats(const std::string& path) {
  std::string data;
  try {
    data = read_file(path);
  } catch (const Error& e) {
    throw CacheFormatError(e.what());
  }
  Reader r(data);
  const CacheHeader h = read_header(r, data);
  CacheStats s;
  s.entries = h.count;
  s.lookups = h.lookups;
  s.hits = h.hits;
  for (std::uint64_t i = 0; i < h.count; ++i) {
    for (int f = 0; f < 4; ++f) r.get<std::uint32_t>();
    const auto n = r.get<std::uint32_t>();
    if (static_cast<std::size_t>(n) * 8 > r.remaining()) {
      throw CacheFormatError("mask cache: corrupt mask record");
    }
    for (std::uint32_t j = 0; j < 2 * n; ++j) r.get<std::uint32_t>();
    s.bytes += sizeof(VisibilityMask) + n * sizeof(MaskEntry);
  }
  return s;
}

}  // namespace nbv
