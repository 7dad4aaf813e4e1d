#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nbv/geometry.hpp"
#include "nbv/visibility.hpp"
#include "nbv/voxel_field.hpp"

namespace nbv {

struct ViewPose {
  Vec3 position = Vec3::Zero();
  double yaw_deg = 0.0;
  double pitch_deg = 0.0;
  // Stand-off offset along the viewing direction relative to the seed; the
  // camera sits at seed - range * forward.
  double range = 0.0;
  // Voxel the pose was instantiated from.
  std::uint32_t seed = 0;

  Pose pose() const { return pose_from_yaw_pitch(position, yaw_deg, pitch_deg); }
  Vec3 forward() const { return direction_from_yaw_pitch(yaw_deg, pitch_deg); }
};

struct PlannerConfig {
  double eta = 0.3;
  // Distance prior length scale; infinity disables the prior.
  double tau = std::numeric_limits<double>::infinity();
  // Stand-off offsets evaluated per fan orientation. One entry (0) at scene
  // level; three at object level.
  std::vector<double> ranges{0.0};
  // Non-positive values select the defaults: 8 voxels and half a yaw bin.
  double nms_radius = 0.0;
  double nms_angle_deg = 0.0;
  // Seeds closer than this to a committed pose are re-keyed before their next
  // use. Non-positive selects the farthest distance at which two cones can
  // share a voxel.
  double invalidation_radius = 0.0;

  void validate() const;
};

// Sum over mask entries of p_vis(v) * utility(v).
double mask_score(const VisibilityMask& mask, const FusedField& field);

// Scores the pose with the cached mask of the bin its orientation falls into,
// at the voxel containing its position. Builds the mask if absent. Throws
// InvalidInput when the position is outside the grid.
double score_pose(const ViewPose& pose, MaskCache& cache, const FusedField& field);

// max over bins of the seed's mask score, times exp(-|seed - position| / tau).
double compute_seed_key(std::uint32_t seed, MaskCache& cache, const FusedField& field,
                        const Vec3& current_position, double tau);

// Bin center plus the half-bin yaw/pitch offsets (center first), for every
// range. Poses whose position leaves the grid or lands in an occupied voxel
// are dropped; ranged positions snap to voxel centers.
std::vector<ViewPose> instantiate_fan(std::uint32_t seed, const OrientationBin& top_bin,
                                      const BinLayout& bins,
                                      const std::vector<double>& ranges,
                                      const OccupancyView& occupancy);

// True when some committed pose is within `radius` in position and strictly
// within `angle_deg` in viewing direction.
bool nms_suppressed(const ViewPose& pose, const std::vector<ViewPose>& committed,
                    double radius, double angle_deg);

struct TraceRecord {
  std::size_t step = 0;
  std::uint32_t seed = 0;
  int bin = 0;
  ViewPose pose;
  double key = 0.0;
  double score = 0.0;
  double total_before = 0.0;
  double total_after = 0.0;
};

std::string trace_to_jsonl(const std::vector<TraceRecord>& trace);

// Greedy view selection (lazy max-priority queue over seeds). Every commitment
// decays the field inside the committed frustum. The planner does not own the
// cache or the field; both must outlive it.
class Planner {
 public:
  Planner(const PlannerConfig& config, MaskCache& cache, FusedField& field,
          std::vector<std::uint32_t> seeds, const Vec3& start_position,
          std::size_t budget);

  // Commits up to n more views. Throws InvalidInput if n exceeds the
  // remaining budget. Returns fewer only when no unsuppressed candidate is
  // left; diagnostic() then explains why.
  std::vector<ViewPose> select_next_views(std::size_t n);

  // Marks every key stale; call after raising the field.
  void invalidate_all();

  const std::vector<ViewPose>& committed() const { return committed_; }
  const std::vector<TraceRecord>& trace() const { return trace_; }
  std::size_t remaining_budget() const { return budget_ - committed_.size(); }
  const std::string& diagnostic() const { return diagnostic_; }
  std::size_t rekeys() const { return rekeys_; }
  const PlannerConfig& config() const { return config_; }

 private:
  struct Candidate {
    double raw = -1.0;  // negative: every candidate suppressed
    int top_bin = 0;
  };
  struct Entry {
    double priority;
    std::uint32_t seed;
    std::size_t index;
    std::uint64_t stamp;
  };
  struct EntryLess {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.priority != b.priority) return a.priority < b.priority;
      return a.seed > b.seed;
    }
  };

  Candidate evaluate(std::size_t index);
  double prior(std::size_t index) const;
  void rebuild_queue();
  std::optional<ViewPose> commit_one();

  PlannerConfig config_;
  MaskCache& cache_;
  FusedField& field_;
  std::vector<std::uint32_t> seeds_;
  std::vector<Vec3> seed_centers_;
  std::vector<Candidate> candidates_;
  std::vector<std::uint64_t> stamp_;
  std::vector<std::uint64_t> invalidated_;
  std::vector<Entry> heap_;
  std::uint64_t epoch_ = 0;
  Vec3 position_;
  std::size_t budget_;
  std::vector<ViewPose> committed_;
  std::vector<TraceRecord> trace_;
  std::string diagnostic_;
  std::size_t rekeys_ = 0;
};

// Object level: free lattice voxels (every `stride` voxels) whose centers lie
// within half a lattice step of a hemisphere of `radius` above `center`.
std::vector<std::uint32_t> hemisphere_seeds(const OccupancyView& occupancy,
                                            const Vec3& center, double radius,
                                            int stride);

// Scene level: free lattice voxels in the layer at `height`, with every voxel
// within `clearance` voxels horizontally also free.
std::vector<std::uint32_t> layer_seeds(const OccupancyView& occupancy, double height,
                                       int stride, int clearance);

}  // namespace nbv
