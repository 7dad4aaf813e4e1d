// Brute-force reference for one greedy step, shared by the unit tests and the
// acceptance binary.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "nbv/planner.hpp"

namespace nbv::testing {

struct OracleChoice {
  std::uint32_t seed = 0;
  int scoring_bin = 0;
  int offset = 0;
  ViewPose pose;
  double score = 0.0;
};

// Global argmax of score_pose over every seed, every bin's range-0 fan and
// every pose NMS leaves alive. Ties: higher score, lower seed, lower scoring
// bin, earlier fan offset.
inline std::optional<OracleChoice> brute_force_next(const std::vector<std::uint32_t>& seeds,
                                                    MaskCache& cache, const FusedField& field,
                                                    const std::vector<ViewPose>& committed,
                                                    double nms_radius, double nms_angle_deg) {
  const BinLayout& bins = cache.params().bins;
  std::optional<OracleChoice> best;
  for (std::uint32_t s : seeds) {
    for (int b = 0; b < bins.count(); ++b) {
      const auto fan = instantiate_fan(s, bins.bin_at(b), bins, {0.0}, cache.occupancy());
      for (std::size_t o = 0; o < fan.size(); ++o) {
        if (nms_suppressed(fan[o], committed, nms_radius, nms_angle_deg)) continue;
        OracleChoice c;
        c.seed = s;
        c.scoring_bin = bins.flat(bins.bin_of(fan[o].yaw_deg, fan[o].pitch_deg));
        c.offset = static_cast<int>(o);
        c.pose = fan[o];
        c.score = score_pose(fan[o], cache, field);
        bool take = !best;
        if (!take && c.score != best->score) take = c.score > best->score;
        else if (!take && c.seed != best->seed) take = c.seed < best->seed;
        else if (!take && c.scoring_bin != best->scoring_bin)
          take = c.scoring_bin < best->scoring_bin;
        else if (!take) take = c.offset < best->offset;
        if (take) best = c;
      }
    }
  }
  return best;
}

}  // namespace nbv::testing
