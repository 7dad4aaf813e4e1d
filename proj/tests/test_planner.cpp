#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "nbv/error.hpp"
#include "nbv/planner.hpp"
#include "greedy_oracle.hpp"

using namespace nbv;

namespace {

struct Room {
  VoxelGrid grid{Vec3::Zero(), 0.1, {12, 12, 12}};
  std::vector<std::uint8_t> occ;
  std::unique_ptr<MaskCache> cache;
  std::unique_ptr<FusedField> field;

  Room() : occ(grid.size(), 0) {
    for (int x = 5; x < 7; ++x)
      for (int y = 5; y < 7; ++y)
        for (int z = 0; z < 6; ++z) occ[grid.linear(Index3(x, y, z))] = 1;
    VisibilityParams p;
    p.bins = BinLayout{4, 2, -45.0, 45.0};
    p.frustum = FrustumSpec{60.0, 1.0, 0.05};
    p.r_pre = 128;
    p.rng_seed = 4;
    cache = std::make_unique<MaskCache>(p, grid, occ);
    std::vector<double> sem(grid.size(), 0.0);
    for (std::uint32_t v = 0; v < grid.size(); ++v)
      if (occ[v]) sem[v] = 1.0;
    field = std::make_unique<FusedField>(fuse(GeometricField(grid), sem, FusionWeights{}));
  }

  std::vector<std::uint32_t> ring_seeds() const {
    std::vector<std::uint32_t> s;
    for (int x = 1; x < 12; x += 3)
      for (int y = 1; y < 12; y += 3) {
        const std::uint32_t v = grid.linear(Index3(x, y, 6));
        if (!occ[v]) s.push_back(v);
      }
    return s;
  }
};

PlannerConfig exact_config() {
  PlannerConfig c;
  c.ranges = {0.0};
  c.tau = std::numeric_limits<double>::infinity();
  return c;
}

}  // namespace

TEST(Fan, NineOrientationsPerRange) {
  Room r;
  const BinLayout& bins = r.cache->params().bins;
  const std::uint32_t seed = r.grid.linear(Index3(2, 2, 8));
  const auto fan = instantiate_fan(seed, bins.bin(1, 0), bins, {0.0}, r.cache->occupancy());
  ASSERT_EQ(fan.size(), 9u);
  EXPECT_DOUBLE_EQ(fan[0].yaw_deg, 90.0);
  EXPECT_DOUBLE_EQ(fan[0].pitch_deg, -22.5);
  EXPECT_DOUBLE_EQ(fan[1].yaw_deg, 45.0);
  EXPECT_DOUBLE_EQ(fan[2].yaw_deg, 135.0);
  EXPECT_DOUBLE_EQ(fan[3].pitch_deg, -45.0);
  for (const auto& f : fan) EXPECT_TRUE(f.position.isApprox(r.grid.center(seed)));

  VoxelGrid big(Vec3::Zero(), 0.05, {40, 40, 40});
  std::vector<std::uint8_t> free(big.size(), 0);
  const auto ranged = instantiate_fan(big.linear(Index3(20, 20, 20)), bins.bin(0, 1), bins,
                                      {-0.15, 0.0, 0.15}, {&big, free});
  ASSERT_EQ(ranged.size(), 27u);
  // Positive range backs the camera away from the view direction.
  const Vec3 c = big.center(Index3(20, 20, 20));
  EXPECT_LT((ranged[18].position - c).dot(ranged[18].forward()), 0.0);
  EXPECT_GT((ranged[0].position - c).dot(ranged[0].forward()), 0.0);
}

TEST(Fan, RangedPosesLeavingTheGridAreDropped) {
  Room r;
  const BinLayout& bins = r.cache->params().bins;
  const std::uint32_t corner = r.grid.linear(Index3(0, 0, 6));
  // Yaw 0 looks along +x, so a positive range pushes the camera out at x < 0.
  const auto fan = instantiate_fan(corner, bins.bin(0, 1), bins, {0.0, 0.5},
                                   r.cache->occupancy());
  EXPECT_GE(fan.size(), 9u);
  EXPECT_LT(fan.size(), 18u);
}

TEST(Nms, DistanceAndAngleMustBothBeClose) {
  ViewPose a;
  a.position = Vec3(0, 0, 0);
  a.yaw_deg = 0.0;
  ViewPose b = a;
  b.position = Vec3(0.1, 0, 0);
  b.yaw_deg = 10.0;
  const std::vector<ViewPose> committed{a};
  EXPECT_TRUE(nms_suppressed(b, committed, 0.4, 22.5));
  b.position = Vec3(0.5, 0, 0);
  EXPECT_FALSE(nms_suppressed(b, committed, 0.4, 22.5));
  b.position = Vec3(0.1, 0, 0);
  b.yaw_deg = 22.5;  // exactly at the angle threshold is allowed
  EXPECT_FALSE(nms_suppressed(b, committed, 0.4, 22.5));
  EXPECT_FALSE(nms_suppressed(b, {}, 0.4, 22.5));
}

TEST(Scoring, MaskScoreIsProbabilityWeightedSum) {
  Room r;
  const auto seed = r.ring_seeds().front();
  const auto m = r.cache->get_or_build(seed, r.cache->params().bins.bin_at(0));
  double expected = 0.0;
  for (const auto& e : m->entries)
    expected += static_cast<double>(e.hits) / m->rays * r.field->utility(e.voxel);
  EXPECT_DOUBLE_EQ(mask_score(*m, *r.field), expected);
  ViewPose p;
  p.position = r.grid.center(seed);
  p.yaw_deg = 0.0;
  p.pitch_deg = -22.5;
  EXPECT_DOUBLE_EQ(score_pose(p, *r.cache, *r.field), expected);
  p.position = Vec3(-1, 0, 0);
  EXPECT_THROW(score_pose(p, *r.cache, *r.field), InvalidInput);
}

TEST(Scoring, SeedKeyAppliesDistancePrior) {
  Room r;
  const auto seed = r.ring_seeds().front();
  const double flat = compute_seed_key(seed, *r.cache, *r.field, Vec3::Zero(),
                                       std::numeric_limits<double>::infinity());
  const double d = r.grid.center(seed).norm();
  EXPECT_NEAR(compute_seed_key(seed, *r.cache, *r.field, Vec3::Zero(), 0.5),
              flat * std::exp(-d / 0.5), 1e-15);
}

TEST(Planner, CommitsDecayTheField) {
  Room r;
  Planner planner(exact_config(), *r.cache, *r.field, r.ring_seeds(), Vec3::Zero(), 5);
  const double before = r.field->total();
  const auto views = planner.select_next_views(3);
  ASSERT_EQ(views.size(), 3u);
  EXPECT_LT(r.field->total(), before);
  ASSERT_EQ(planner.trace().size(), 3u);
  for (const auto& t : planner.trace()) {
    EXPECT_LT(t.total_after, t.total_before);
    // Each commitment removes at most the eta share of the field.
    EXPECT_GE(t.total_after, 0.7 * t.total_before - 1e-9);
  }
  for (std::uint32_t v = 0; v < r.grid.size(); ++v) {
    const double base = r.occ[v] ? 0.5 + 0.01 : 0.01;
    EXPECT_NEAR(r.field->utility(v), base * std::pow(0.7, r.field->decay_count()[v]), 1e-12);
  }
  EXPECT_EQ(planner.remaining_budget(), 2u);
}

TEST(Planner, BudgetIsEnforced) {
  Room r;
  Planner planner(exact_config(), *r.cache, *r.field, r.ring_seeds(), Vec3::Zero(), 2);
  EXPECT_TRUE(planner.select_next_views(0).empty());
  EXPECT_THROW(planner.select_next_views(3), InvalidInput);
  EXPECT_EQ(planner.select_next_views(2).size(), 2u);
  EXPECT_THROW(planner.select_next_views(1), InvalidInput);
}

TEST(Planner, NoSeedsExplainsItself) {
  Room r;
  Planner planner(exact_config(), *r.cache, *r.field, {}, Vec3::Zero(), 3);
  EXPECT_TRUE(planner.select_next_views(3).empty());
  EXPECT_FALSE(planner.diagnostic().empty());
}

TEST(Planner, RejectsSeedsInsideGeometry) {
  Room r;
  EXPECT_THROW(Planner(exact_config(), *r.cache, *r.field, {r.grid.linear(Index3(5, 5, 0))},
                       Vec3::Zero(), 3),
               DegenerateSeed);
  PlannerConfig bad = exact_config();
  bad.eta = 1.0;
  EXPECT_THROW(Planner(bad, *r.cache, *r.field, r.ring_seeds(), Vec3::Zero(), 3), InvalidInput);
}

TEST(Planner, CommittedViewsRespectNms) {
  Room r;
  PlannerConfig c = exact_config();
  Planner planner(c, *r.cache, *r.field, r.ring_seeds(), Vec3::Zero(), 10);
  const auto views = planner.select_next_views(10);
  const double radius = 8.0 * r.grid.voxel_size();
  const double angle = r.cache->params().bins.yaw_width() / 2.0;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const std::vector<ViewPose> earlier(views.begin(), views.begin() + i);
    EXPECT_FALSE(nms_suppressed(views[i], earlier, radius, angle)) << "view " << i;
  }
}

TEST(Planner, DeterministicTrace) {
  Room a, b;
  Planner pa(exact_config(), *a.cache, *a.field, a.ring_seeds(), Vec3::Zero(), 6);
  Planner pb(exact_config(), *b.cache, *b.field, b.ring_seeds(), Vec3::Zero(), 6);
  pa.select_next_views(6);
  pb.select_next_views(6);
  EXPECT_EQ(trace_to_jsonl(pa.trace()), trace_to_jsonl(pb.trace()));
}

TEST(Seeds, LatticeGenerators) {
  VoxelGrid g(Vec3::Zero(), 0.1, {20, 20, 20});
  std::vector<std::uint8_t> occ(g.size(), 0);
  const OccupancyView view{&g, occ};
  const auto hemi = hemisphere_seeds(view, Vec3(1.0, 1.0, 0.0), 0.8, 2);
  ASSERT_FALSE(hemi.empty());
  for (auto s : hemi) {
    const Vec3 c = g.center(s);
    EXPECT_NEAR((c - Vec3(1.0, 1.0, 0.0)).norm(), 0.8, 0.1 + 1e-9);
    EXPECT_GE(c.z(), 0.0);
  }
  const auto layer = layer_seeds(view, 1.05, 4, 1);
  ASSERT_FALSE(layer.empty());
  for (auto s : layer) EXPECT_EQ(g.unlinear(s).z(), 10);
  EXPECT_THROW(hemisphere_seeds(view, Vec3::Zero(), 0.8, 0), InvalidInput);
}

TEST(Planner, EveryCommitIsTheBruteForceArgmax) {
  Room r;
  const auto seeds = r.ring_seeds();
  Planner planner(exact_config(), *r.cache, *r.field, seeds, Vec3::Zero(), 8);
  const double radius = 8.0 * r.grid.voxel_size();
  const double angle = r.cache->params().bins.yaw_width() / 2.0;
  for (int step = 0; step < 8; ++step) {
    const auto want =
        nbv::testing::brute_force_next(seeds, *r.cache, *r.field, planner.committed(), radius, angle);
    const auto got = planner.select_next_views(1);
    if (!want) {
      EXPECT_TRUE(got.empty());
      break;
    }
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(got[0].seed, want->seed);
    EXPECT_EQ(got[0].yaw_deg, want->pose.yaw_deg);
    EXPECT_EQ(got[0].pitch_deg, want->pose.pitch_deg);
    EXPECT_EQ(planner.trace().back().score, want->score);
  }
}
