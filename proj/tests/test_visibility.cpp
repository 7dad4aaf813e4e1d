#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "nbv/error.hpp"
#include "nbv/io.hpp"
#include "nbv/visibility.hpp"

using namespace nbv;

namespace {

// 16^3 grid of 0.1 m voxels with a 1-voxel-thick wall at x = 10 spanning
// y, z in [4, 12).
struct WallWorld {
  VoxelGrid grid{Vec3::Zero(), 0.1, {16, 16, 16}};
  std::vector<std::uint8_t> occ;
  WallWorld() : occ(grid.size(), 0) {
    for (int y = 4; y < 12; ++y)
      for (int z = 4; z < 12; ++z) occ[grid.linear(Index3(10, y, z))] = 1;
  }
  OccupancyView view() const { return {&grid, occ}; }
  std::uint32_t seed() const { return grid.linear(Index3(3, 8, 8)); }
};

VisibilityParams small_params() {
  VisibilityParams p;
  p.bins = BinLayout{4, 1, -30.0, 30.0};
  p.frustum = FrustumSpec{60.0, 2.0, 0.05};
  p.r_pre = 256;
  p.rng_seed = 9;
  return p;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST(Bins, CentersAndAssignment) {
  const BinLayout b{8, 3, -60.0, 60.0};
  EXPECT_EQ(b.count(), 24);
  EXPECT_DOUBLE_EQ(b.bin(2, 1).yaw_center_deg, 90.0);
  EXPECT_DOUBLE_EQ(b.bin(2, 1).pitch_center_deg, 0.0);
  EXPECT_DOUBLE_EQ(b.bin(0, 0).pitch_center_deg, -40.0);
  for (int i = 0; i < b.count(); ++i) {
    const OrientationBin o = b.bin_at(i);
    EXPECT_EQ(b.flat(o), i);
    EXPECT_EQ(b.bin_of(o.yaw_center_deg, o.pitch_center_deg), o);
  }
  // Yaw bin 0 straddles 0 degrees; its lower edge belongs to it.
  EXPECT_EQ(b.bin_of(-22.5, 0).yaw_index, 0);
  EXPECT_EQ(b.bin_of(337.5, 0).yaw_index, 0);
  EXPECT_EQ(b.bin_of(22.5, 0).yaw_index, 1);
  EXPECT_EQ(b.bin_of(359.9, 0).yaw_index, 0);
  // Out-of-range pitch clamps to the end bins.
  EXPECT_EQ(b.bin_of(0, 89.0).pitch_index, 2);
  EXPECT_EQ(b.bin_of(0, -89.0).pitch_index, 0);
  EXPECT_THROW((BinLayout{0, 3, -60, 60}.validate()), InvalidInput);
  EXPECT_THROW((BinLayout{8, 3, -95, 60}.validate()), InvalidInput);
}

TEST(McVisibility, WallShadowIsNeverCredited) {
  const WallWorld w;
  const BinLayout bins{4, 1, -30.0, 30.0};
  const FrustumSpec fr{60.0, 2.0, 0.05};
  const VisibilityMask m = mc_visibility(w.seed(), bins.bin(0, 0), w.view(), fr, 4096, 1);
  ASSERT_FALSE(m.entries.empty());
  bool wall_seen = false;
  for (const auto& e : m.entries) {
    const Index3 c = w.grid.unlinear(e.voxel);
    EXPECT_GT(e.hits, 0u);
    EXPECT_LE(e.hits, m.rays);
    if (c.x() == 10) wall_seen = true;
    // Directly behind the wall center, inside the umbra.
    if (c.x() > 10 && c.y() >= 6 && c.y() < 10 && c.z() >= 6 && c.z() < 10) {
      ADD_FAILURE() << "voxel behind the wall credited: " << c.transpose();
    }
    EXPECT_TRUE(in_frustum(w.grid.center(e.voxel), bin_center_pose(w.grid, w.seed(), bins.bin(0, 0)), fr));
  }
  EXPECT_TRUE(wall_seen);
  // Entries are sorted and unique.
  for (std::size_t i = 1; i < m.entries.size(); ++i)
    EXPECT_LT(m.entries[i - 1].voxel, m.entries[i].voxel);
}

TEST(McVisibility, DeterministicPerRngSeed) {
  const WallWorld w;
  const BinLayout bins{4, 1, -30.0, 30.0};
  const FrustumSpec fr{60.0, 2.0, 0.05};
  const auto a = mc_visibility(w.seed(), bins.bin(0, 0), w.view(), fr, 512, 5);
  const auto b = mc_visibility(w.seed(), bins.bin(0, 0), w.view(), fr, 512, 5);
  const auto c = mc_visibility(w.seed(), bins.bin(0, 0), w.view(), fr, 512, 6);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == c);
}

TEST(McVisibility, RejectsBadSeeds) {
  const WallWorld w;
  const BinLayout bins{4, 1, -30.0, 30.0};
  const FrustumSpec fr{60.0, 2.0, 0.05};
  EXPECT_THROW(mc_visibility(w.grid.linear(Index3(10, 8, 8)), bins.bin(0, 0), w.view(), fr, 64, 1),
               DegenerateSeed);
  EXPECT_THROW(mc_visibility(static_cast<std::uint32_t>(w.grid.size()), bins.bin(0, 0), w.view(),
                             fr, 64, 1),
               InvalidInput);
  EXPECT_THROW(mc_visibility(w.seed(), bins.bin(0, 0), w.view(), fr, 0, 1), InvalidInput);
}

TEST(McVisibility, AgreesWithExactReference) {
  const WallWorld w;
  const BinLayout bins{4, 1, -30.0, 30.0};
  const FrustumSpec fr{60.0, 2.0, 0.05};
  const auto mc = mc_visibility(w.seed(), bins.bin(0, 0), w.view(), fr, 4096, 3);
  const auto exact = exact_visibility(w.seed(), bins.bin(0, 0), w.view(), fr, 1u << 16);
  std::vector<double> p(w.grid.size(), 0.0);
  for (const auto& e : mc.entries) p[e.voxel] = mc.probability(e);
  double err = 0.0;
  std::size_t n = 0;
  for (std::size_t v = 0; v < p.size(); ++v) {
    if (p[v] == 0.0 && exact[v] == 0.0) continue;
    err += std::abs(p[v] - exact[v]);
    ++n;
  }
  ASSERT_GT(n, 0u);
  EXPECT_LT(err / n, 0.05);
  // Voxels right in front of the camera are crossed by most rays.
  EXPECT_GT(exact[w.grid.linear(Index3(4, 8, 8))], 0.2);
}

TEST(MaskCache, BuildsOnceAndCountsHits) {
  const WallWorld w;
  MaskCache cache(small_params(), w.grid, w.occ);
  const BinLayout& bins = cache.params().bins;
  EXPECT_EQ(cache.find(w.seed(), bins.bin(1, 0)), nullptr);
  const auto a = cache.get_or_build(w.seed(), bins.bin(1, 0));
  const auto b = cache.get_or_build(w.seed(), bins.bin(1, 0));
  EXPECT_EQ(a.get(), b.get());
  const CacheStats s = cache.stats();
  EXPECT_EQ(s.entries, 1u);
  EXPECT_EQ(s.lookups, 2u);
  EXPECT_EQ(s.hits, 1u);
  EXPECT_DOUBLE_EQ(s.hit_rate(), 0.5);
  EXPECT_GE(s.bytes, a->bytes());
  cache.reset_counters();
  EXPECT_EQ(cache.stats().lookups, 0u);
}

TEST(MaskCache, PrewarmMatchesLazyBuilds) {
  const WallWorld w;
  const std::vector<std::uint32_t> seeds{w.seed(), w.grid.linear(Index3(2, 3, 9))};
  MaskCache warm(small_params(), w.grid, w.occ);
  EXPECT_EQ(warm.prewarm(seeds, 2), 8u);
  EXPECT_EQ(warm.prewarm(seeds, 2), 0u);
  MaskCache lazy(small_params(), w.grid, w.occ);
  for (auto s : seeds)
    for (int b = 0; b < 4; ++b) {
      const auto bin = lazy.params().bins.bin_at(b);
      EXPECT_TRUE(*lazy.get_or_build(s, bin) == *warm.find(s, bin));
    }
}

TEST(MaskCache, SaveLoadRoundTrip) {
  const WallWorld w;
  const std::string path = temp_path("nbv_cache_roundtrip.bin");
  MaskCache cache(small_params(), w.grid, w.occ);
  const std::vector<std::uint32_t> seeds{w.seed()};
  cache.prewarm(seeds);
  for (int b = 0; b < 4; ++b) cache.get_or_build(w.seed(), cache.params().bins.bin_at(b));
  cache.save(path);
  const auto loaded = MaskCache::load(path, small_params(), w.grid, w.occ);
  EXPECT_EQ(loaded->stats().entries, 4u);
  for (int b = 0; b < 4; ++b) {
    const auto bin = cache.params().bins.bin_at(b);
    EXPECT_TRUE(*loaded->find(w.seed(), bin) == *cache.find(w.seed(), bin));
  }
  const CacheStats st = MaskCache::read_stats(path);
  EXPECT_EQ(st.entries, 4u);
  EXPECT_EQ(st.lookups, 4u);
  EXPECT_EQ(st.hits, 4u);
  std::filesystem::remove(path);
}

TEST(MaskCache, CorruptionAndMismatchAreRejected) {
  const WallWorld w;
  const std::string path = temp_path("nbv_cache_corrupt.bin");
  MaskCache cache(small_params(), w.grid, w.occ);
  cache.get_or_build(w.seed(), cache.params().bins.bin_at(0));
  cache.save(path);
  const std::string good = read_file(path);

  std::string flipped = good;
  flipped[flipped.size() / 2] ^= 0x40;
  write_file_atomic(path, flipped);
  EXPECT_THROW(MaskCache::load(path, small_params(), w.grid, w.occ), CacheFormatError);
  EXPECT_THROW(MaskCache::read_stats(path), CacheFormatError);

  write_file_atomic(path, good.substr(0, good.size() - 5));
  EXPECT_THROW(MaskCache::load(path, small_params(), w.grid, w.occ), CacheFormatError);

  write_file_atomic(path, "not a cache");
  EXPECT_THROW(MaskCache::load(path, small_params(), w.grid, w.occ), CacheFormatError);

  write_file_atomic(path, good);
  VisibilityParams other = small_params();
  other.r_pre = 128;
  EXPECT_THROW(MaskCache::load(path, other, w.grid, w.occ), CacheFormatError);
  auto occ2 = w.occ;
  occ2[0] = 1;
  EXPECT_THROW(MaskCache::load(path, small_params(), w.grid, occ2), CacheFormatError);
  EXPECT_NO_THROW(MaskCache::load(path, small_params(), w.grid, w.occ));
  std::filesystem::remove(path);
}
