#include "nbv/planner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "nbv/error.hpp"

namespace nbv {

namespace {

// Fan offsets in units of half a bin, center first, pitch outer.
constexpr std::array<std::array<int, 2>, 9> kFanOffsets{{
    {0, 0}, {0, -1}, {0, 1},
    {-1, 0}, {-1, -1}, {-1, 1},
    {1, 0}, {1, -1}, {1, 1},
}};

struct FanPose {
  ViewPose pose;
  int offset = 0;
  int range_index = 0;
};

std::vector<FanPose> build_fan(std::uint32_t seed, const OrientationBin& top,
                               const BinLayout& bins, const std::vector<double>& ranges,
                               const OccupancyView& occupancy) {
  const VoxelGrid& grid = *occupancy.grid;
  const Vec3 center = grid.center(seed);
  std::vector<FanPose> out;
  out.reserve(kFanOffsets.size() * ranges.size());
  for (std::size_t r = 0; r < ranges.size(); ++r) {
    for (std::size_t o = 0; o < kFanOffsets.size(); ++o) {
      FanPose f;
      f.offset = static_cast<int>(o);
      f.range_index = static_cast<int>(r);
      f.pose.seed = seed;
      f.pose.range = ranges[r];
      f.pose.pitch_deg = std::clamp(
          top.pitch_center_deg + kFanOffsets[o][0] * bins.pitch_width() / 2.0,
          bins.pitch_min_deg, bins.pitch_max_deg);
      double yaw = top.yaw_center_deg + kFanOffsets[o][1] * bins.yaw_width() / 2.0;
      yaw = std::fmod(yaw, 360.0);
      if (yaw < 0.0) yaw += 360.0;
      f.pose.yaw_deg = yaw;
      if (ranges[r] == 0.0) {
        f.pose.position = center;
      } else {
        const Vec3 p = center - ranges[r] * f.pose.forward();
        const auto v = grid.locate(p);
        if (!v || occupancy.is_occupied(*v)) continue;
        f.pose.position = grid.center(*v);
      }
      out.push_back(f);
    }
  }
  return out;
}

// Strict ordering used for every within-seed tie: higher score, then lower
// scoring bin, then fan offset order, then range order.
bool better(double score, int bin, int offset, int range_index, double best_score,
            int best_bin, int best_offset, int best_range) {
  if (score != best_score) return score > best_score;
  if (bin != best_bin) return bin < best_bin;
  if (offset != best_offset) return offset < best_offset;
  return range_index < best_range;
}

}  // namespace

void PlannerConfig::validate() const {
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidInput("planner: eta must lie in (0, 1)");
  if (!(tau > 0.0)) throw InvalidInput("planner: tau must be positive");
  if (ranges.empty()) throw InvalidInput("planner: at least one range is required");
  for (double r : ranges) {
    if (!std::isfinite(r)) throw InvalidInput("planner: ranges must be finite");
  }
}

double mask_score(const VisibilityMask& mask, const FusedField& field) {
  const auto u = field.utility();
  double s = 0.0;
  for (const auto& e : mask.entries) s += mask.probability(e) * u[e.voxel];
  return s;
}

double score_pose(const ViewPose& pose, MaskCache& cache, const FusedField& field) {
  const auto v = cache.grid().locate(pose.position);
  if (!v) throw InvalidInput("score_pose: position outside the grid");
  const OrientationBin bin = cache.params().bins.bin_of(pose.yaw_deg, pose.pitch_deg);
  return mask_score(*cache.get_or_build(*v, bin), field);
}

double compute_seed_key(std::uint32_t seed, MaskCache& cache, const FusedField& field,
                        const Vec3& current_position, double tau) {
  const BinLayout& bins = cache.params().bins;
  double best = 0.0;
  for (int b = 0; b < bins.count(); ++b) {
    best = std::max(best, mask_score(*cache.get_or_build(seed, bins.bin_at(b)), field));
  }
  if (std::isinf(tau)) return best;
  const double d = (cache.grid().center(seed) - current_position).norm();
  return best * std::exp(-d / tau);
}

std::vector<ViewPose> instantiate_fan(std::uint32_t seed, const OrientationBin& top_bin,
                                      const BinLayout& bins,
                                      const std::vector<double>& ranges,
                                      const OccupancyView& occupancy) {
  std::vector<ViewPose> out;
  for (auto& f : build_fan(seed, top_bin, bins, ranges, occupancy)) {
    out.push_back(f.pose);
  }
  return out;
}

bool nms_suppressed(const ViewPose& pose, const std::vector<ViewPose>& committed,
                    double radius, double angle_deg) {
  const Vec3 fwd = pose.forward();
  for (const auto& c : committed) {
    if ((c.position - pose.position).norm() >= radius) continue;
    // A hair of slack keeps poses exactly angle_deg apart unsuppressed.
    if (angle_between_deg(fwd, c.forward()) < angle_deg - 1e-9) return true;
  }
  return false;
}

std::string trace_to_jsonl(const std::vector<TraceRecord>& trace) {
  std::string out;
  for (const auto& t : trace) {
    nlohmann::ordered_json j;
    j["step"] = t.step;
    j["seed"] = t.seed;
    j["bin"] = t.bin;
    j["pose"] = {{"x", t.pose.position.x()},  {"y", t.pose.position.y()},
                 {"z", t.pose.position.z()},  {"yaw", t.pose.yaw_deg},
                 {"pitch", t.pose.pitch_deg}, {"range", t.pose.range}};
    j["key"] = t.key;
    j["score"] = t.score;
    j["total_before"] = t.total_before;
    j["total_after"] = t.total_after;
    out += j.dump();
    out += '\n';
  }
  return out;
}

Planner::Planner(const PlannerConfig& config, MaskCache& cache, FusedField& field,
                 std::vector<std::uint32_t> seeds, const Vec3& start_position,
                 std::size_t budget)
    : config_(config),
      cache_(cache),
      field_(field),
      seeds_(std::move(seeds)),
      position_(start_position),
      budget_(budget) {
  config_.validate();
  if (!(cache_.grid() == field_.grid())) {
    throw InvalidInput("planner: cache and field grids differ");
  }
  const VoxelGrid& grid = cache_.grid();
  const BinLayout& bins = cache_.params().bins;
  if (config_.nms_radius <= 0.0) config_.nms_radius = 8.0 * grid.voxel_size();
  if (config_.nms_angle_deg <= 0.0) config_.nms_angle_deg = bins.yaw_width() / 2.0;
  if (config_.invalidation_radius <= 0.0) {
    const FrustumSpec& f = cache_.params().frustum;
    const double reach = f.max_depth / std::cos(deg_to_rad(f.fov_deg) / 2.0);
    double max_range = 0.0;
    for (double r : config_.ranges) max_range = std::max(max_range, std::abs(r));
    config_.invalidation_radius =
        2.0 * reach + 2.0 * max_range + config_.nms_radius + 2.0 * std::sqrt(3.0) * grid.voxel_size();
  }

  std::sort(seeds_.begin(), seeds_.end());
  seeds_.erase(std::unique(seeds_.begin(), seeds_.end()), seeds_.end());
  const auto occ = cache_.occupancy();
  for (std::uint32_t s : seeds_) {
    if (s >= grid.size()) throw InvalidInput("planner: seed outside the grid");
    if (occ.is_occupied(s)) throw DegenerateSeed("planner: seed inside occupied voxel");
    seed_centers_.push_back(grid.center(s));
  }
  candidates_.resize(seeds_.size());
  stamp_.assign(seeds_.size(), 0);
  invalidated_.assign(seeds_.size(), 0);
  for (std::size_t i = 0; i < seeds_.size(); ++i) candidates_[i] = evaluate(i);
  rebuild_queue();
}

Planner::Candidate Planner::evaluate(std::size_t index) {
  const std::uint32_t seed = seeds_[index];
  const BinLayout& bins = cache_.params().bins;
  std::vector<double> scores(bins.count());
  for (int b = 0; b < bins.count(); ++b) {
    scores[b] = mask_score(*cache_.get_or_build(seed, bins.bin_at(b)), field_);
  }

  std::vector<ViewPose> nearby;
  for (const auto& c : committed_) {
    if ((c.position - seed_centers_[index]).norm() < config_.nms_radius) nearby.push_back(c);
  }

  Candidate cand;
  int best_bin = 0;
  int best_offset = 0;
  if (nearby.empty()) {
    // Every bin center is a candidate and nothing is suppressed.
    for (int b = 0; b < bins.count(); ++b) {
      if (better(scores[b], b, 0, 0, cand.raw, best_bin, best_offset, 0)) {
        cand.raw = scores[b];
        cand.top_bin = b;
        best_bin = b;
      }
    }
    return cand;
  }
  const std::vector<double> zero_range{0.0};
  const auto occ = cache_.occupancy();
  for (int b = 0; b < bins.count(); ++b) {
    for (const auto& f : build_fan(seed, bins.bin_at(b), bins, zero_range, occ)) {
      if (nms_suppressed(f.pose, nearby, config_.nms_radius, config_.nms_angle_deg)) continue;
      const int pb = bins.flat(bins.bin_of(f.pose.yaw_deg, f.pose.pitch_deg));
      if (cand.raw < 0.0 ||
          better(scores[pb], pb, f.offset, 0, cand.raw, best_bin, best_offset, 0)) {
        cand.raw = scores[pb];
        cand.top_bin = b;
        best_bin = pb;
        best_offset = f.offset;
      }
    }
  }
  return cand;
}

double Planner::prior(std::size_t index) const {
  if (std::isinf(config_.tau)) return 1.0;
  return std::exp(-(seed_centers_[index] - position_).norm() / config_.tau);
}

void Planner::rebuild_queue() {
  heap_.clear();
  for (std::size_t i = 0; i < seeds_.size(); ++i) {
    if (candidates_[i].raw < 0.0) continue;
    heap_.push_back({candidates_[i].raw * prior(i), seeds_[i], i, stamp_[i]});
  }
  std::make_heap(heap_.begin(), heap_.end(), EntryLess{});
}

std::optional<ViewPose> Planner::commit_one() {
  const BinLayout& bins = cache_.params().bins;
  while (!heap_.empty()) {
    std::pop_heap(heap_.begin(), heap_.end(), EntryLess{});
    const Entry top = heap_.back();
    heap_.pop_back();
    const std::size_t i = top.index;
    if (top.stamp < invalidated_[i]) {
      candidates_[i] = evaluate(i);
      stamp_[i] = epoch_;
      ++rekeys_;
      if (candidates_[i].raw >= 0.0) {
        heap_.push_back({candidates_[i].raw * prior(i), seeds_[i], i, stamp_[i]});
        std::push_heap(heap_.begin(), heap_.end(), EntryLess{});
      }
      continue;
    }

    const auto fan = build_fan(seeds_[i], bins.bin_at(candidates_[i].top_bin), bins,
                               config_.ranges, cache_.occupancy());
    const FanPose* best = nullptr;
    double best_score = -1.0;
    int best_bin = 0;
    for (const auto& f : fan) {
      if (nms_suppressed(f.pose, committed_, config_.nms_radius, config_.nms_angle_deg)) {
        continue;
      }
      const double s = score_pose(f.pose, cache_, field_);
      const int pb = bins.flat(bins.bin_of(f.pose.yaw_deg, f.pose.pitch_deg));
      if (!best || better(s, pb, f.offset, f.range_index, best_score, best_bin,
                          best->offset, best->range_index)) {
        best = &f;
        best_score = s;
        best_bin = pb;
      }
    }
    if (!best) {
      // Suppressed since its last evaluation; cannot happen for a fresh key
      // but stay safe and force a re-key.
      candidates_[i].raw = -1.0;
      continue;
    }

    TraceRecord rec;
    rec.step = committed_.size();
    rec.seed = seeds_[i];
    rec.bin = best_bin;
    rec.pose = best->pose;
    rec.key = top.priority;
    rec.score = best_score;
    rec.total_before = field_.total();
    apply_decay(field_, best->pose.pose(), cache_.params().frustum, config_.eta);
    rec.total_after = field_.total();
    trace_.push_back(rec);
    committed_.push_back(best->pose);

    ++epoch_;
    const double r = config_.invalidation_radius;
    for (std::size_t k = 0; k < seeds_.size(); ++k) {
      if ((seed_centers_[k] - best->pose.position).norm() <= r) invalidated_[k] = epoch_;
    }
    invalidated_[i] = epoch_;
    position_ = best->pose.position;
    rebuild_queue();
    return committed_.back();
  }
  diagnostic_ = seeds_.empty() ? "no candidate seeds in the workspace"
                               : "every remaining candidate is suppressed";
  return std::nullopt;
}

void Planner::invalidate_all() {
  ++epoch_;
  std::fill(invalidated_.begin(), invalidated_.end(), epoch_);
  rebuild_queue();
}

std::vector<ViewPose> Planner::select_next_views(std::size_t n) {
  if (n > remaining_budget()) {
    throw InvalidInput("planner: request exceeds the remaining view budget");
  }
  std::vector<ViewPose> out;
  for (std::size_t k = 0; k < n; ++k) {
    auto v = commit_one();
    if (!v) break;
    out.push_back(*v);
  }
  return out;
}

std::vector<std::uint32_t> hemisphere_seeds(const OccupancyView& occupancy,
                                            const Vec3& center, double radius,
                                            int stride) {
  if (stride < 1 || !(radius > 0.0)) throw InvalidInput("hemisphere_seeds: bad lattice");
  const VoxelGrid& grid = *occupancy.grid;
  const auto& d = grid.dims();
  const double half = stride * grid.voxel_size() / 2.0;
  std::vector<std::uint32_t> out;
  for (int z = stride / 2; z < d[2]; z += stride) {
    for (int y = stride / 2; y < d[1]; y += stride) {
      for (int x = stride / 2; x < d[0]; x += stride) {
        const Index3 c(x, y, z);
        const Vec3 p = grid.center(c);
        if (p.z() <= center.z()) continue;
        if (std::abs((p - center).norm() - radius) >= half) continue;
        const std::uint32_t v = grid.linear(c);
        if (!occupancy.is_occupied(v)) out.push_back(v);
      }
    }
  }
  return out;
}

std::vector<std::uint32_t> layer_seeds(const OccupancyView& occupancy, double height,
                                       int stride, int clearance) {
  if (stride < 1 || clearance < 0) throw InvalidInput("layer_seeds: bad lattice");
  const VoxelGrid& grid = *occupancy.grid;
  const auto& d = grid.dims();
  const int z = grid.cell_of(grid.origin() + Vec3(0, 0, height)).z();
  if (z < 0 || z >= d[2]) throw InvalidInput("layer_seeds: height outside the grid");
  std::vector<std::uint32_t> out;
  for (int y = stride / 2; y < d[1]; y += stride) {
    for (int x = stride / 2; x < d[0]; x += stride) {
      bool clear = true;
      for (int dy = -clearance; dy <= clearance && clear; ++dy) {
        for (int dx = -clearance; dx <= clearance && clear; ++dx) {
          const Index3 c(x + dx, y + dy, z);
          clear = grid.contains(c) && !occupancy.is_occupied(grid.linear(c));
        }
      }
      if (clear) out.push_back(grid.linear(Index3(x, y, z)));
    }
  }
  return out;
}

}  // namespace nbv
