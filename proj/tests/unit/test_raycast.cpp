#include <gtest/gtest.h>

#include "nbv/raycast.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace nbv;

namespace {

constexpr double kRes = 0.015;

// Parameter interval of the segment inside the cell, or empty.
std::pair<double, double> slab(const Vec3& o, const Vec3& d, double len, const VoxelKey& k) {
  double t0 = 0.0, t1 = len;
  const int idx[3] = {k.x, k.y, k.z};
  for (int a = 0; a < 3; ++a) {
    const double lo = idx[a] * kRes, hi = (idx[a] + 1) * kRes;
    if (d[a] == 0.0) {
      if (o[a] < lo || o[a] >= hi) return {1.0, 0.0};
      continue;
    }
    double ta = (lo - o[a]) / d[a], tb = (hi - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  return {t0, t1};
}

// Every cell of the bounding box whose slab interval has positive length.
std::set<VoxelKey> slab_oracle(const Vec3& o, const Vec3& d, double len) {
  const Vec3 e = o + len * d;
  const VoxelKey a = key_of<double>(o.cwiseMin(e), kRes), b = key_of<double>(o.cwiseMax(e), kRes);
  std::set<VoxelKey> out;
  for (int x = a.x; x <= b.x; ++x)
    for (int y = a.y; y <= b.y; ++y)
      for (int z = a.z; z <= b.z; ++z) {
        auto [t0, t1] = slab(o, d, len, {x, y, z});
        if (t1 > t0) out.insert({x, y, z});
      }
  out.insert(key_of(o, kRes));
  return out;
}

std::set<VoxelKey> march_oracle(const Vec3& o, const Vec3& d, double len, double step) {
  std::set<VoxelKey> out;
  for (double t = 0.0; t < len; t += step) out.insert(key_of<double>(o + t * d, kRes));
  return out;
}

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Vec3 v(n(rng), n(rng), n(rng));
  return v.normalized();
}

}  // namespace

TEST(Traversal, MatchesSlabOracleOnRandomRays) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> pos(-0.2, 0.2), len(0.001, 0.4);
  int corner_clips = 0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 o(pos(rng), pos(rng), pos(rng));
    const Vec3 d = random_unit(rng);
    const double l = len(rng);
    std::vector<VoxelKey> walked;
    walk_cells(o, d, l, kRes, [&](const VoxelKey& k, double, double) {
      walked.push_back(k);
      return true;
    });
    const std::set<VoxelKey> got(walked.begin(), walked.end());
    ASSERT_EQ(got.size(), walked.size()) << "cell visited twice, ray " << i;
    ASSERT_EQ(got, slab_oracle(o, d, l)) << "ray " << i;

    // Fine marching can only miss cells clipped over less than one step.
    const double step = 0.1 * kRes;
    const auto marched = march_oracle(o, d, l, step);
    for (const auto& k : marched) EXPECT_TRUE(got.count(k)) << "ray " << i;
    for (const auto& k : got) {
      if (marched.count(k)) continue;
      auto [t0, t1] = slab(o, d, l, k);
      EXPECT_LT(t1 - t0, step) << "ray " << i;
      ++corner_clips;
    }
  }
  RecordProperty("corner_clips", corner_clips);
}

TEST(Traversal, CellsInOrder) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const Vec3 o = Vec3::Random() * 0.1;
    const Vec3 d = random_unit(rng);
    double prev_exit = 0.0;
    walk_cells(o, d, 0.3, kRes, [&](const VoxelKey& k, double t0, double t1) {
      EXPECT_NEAR(t0, prev_exit, 1e-12);
      EXPECT_LE(t0, t1);
      // midpoint lies in the reported cell
      EXPECT_EQ(key_of<double>(o + 0.5 * (t0 + t1) * d, kRes), k);
      prev_exit = t1;
      return true;
    });
    EXPECT_NEAR(prev_exit, 0.3, 1e-12);
  }
}

TEST(TraverseRay, AxisAlignedLength) {
  SemanticOctree map;
  TraceOptions opts;
  opts.max_range = 0.15;
  opts.visibility_cutoff = 0.0;
  for (double x0 : {0.0075, 0.0, 0.003, 0.0149}) {
    const auto tr = traverse_ray(map, Vec3(x0, 0.001, 0.001), Vec3::UnitX(), opts);
    EXPECT_TRUE(tr.entries.size() == 10 || tr.entries.size() == 11) << x0;
    for (const auto& e : tr.entries) EXPECT_EQ(e.p_o, 0.5);
  }
}

TEST(TraverseRay, UnknownVisibilityHalves) {
  SemanticOctree map;
  TraceOptions opts;
  opts.visibility_cutoff = 0.0;
  opts.max_range = 0.1;
  const auto tr = traverse_ray(map, Vec3(0.0075, 0.0075, 0.0075), Vec3::UnitZ(), opts);
  ASSERT_GE(tr.entries.size(), 6u);
  for (std::size_t i = 0; i < tr.entries.size(); ++i) EXPECT_EQ(tr.entries[i].p_v, std::ldexp(1.0, -int(i)));
}

TEST(TraverseRay, CutoffStopsEarly) {
  SemanticOctree map;
  TraceOptions opts;  // cutoff 0.01
  const auto tr = traverse_ray(map, Vec3(0.0075, 0.0075, 0.0075), Vec3::UnitZ(), opts);
  EXPECT_EQ(tr.end, TraceEnd::kVisibilityCutoff);
  EXPECT_GE(tr.entries.back().p_v, 0.01);
}

TEST(TraverseRay, InsideOneVoxel) {
  SemanticOctree map;
  TraceOptions opts;
  opts.max_range = 0.002;
  const auto tr = traverse_ray(map, Vec3(0.0075, 0.0075, 0.0075), Vec3(1, 1, 0).normalized(), opts);
  ASSERT_EQ(tr.entries.size(), 1u);
  EXPECT_EQ(tr.entries[0].p_v, 1.0);
  EXPECT_EQ(tr.end, TraceEnd::kMaxRange);
}

TEST(TraverseRay, Bounds) {
  SemanticOctree map;
  TraceOptions opts;
  opts.visibility_cutoff = 0.0;
  opts.bounds = Aabb{Vec3(-1, -1, -1), Vec3(1, 1, 0.05)};
  const auto tr = traverse_ray(map, Vec3(0.0075, 0.0075, 0.0075), Vec3::UnitZ(), opts);
  EXPECT_EQ(tr.end, TraceEnd::kBounds);
  for (const auto& e : tr.entries) EXPECT_LE(map.center(e.key).z(), 0.05 + kRes);
}

TEST(TraverseRay, RejectsBadInput) {
  SemanticOctree map;
  TraceOptions opts;
  EXPECT_THROW(traverse_ray(map, Vec3::Zero(), Vec3::Zero(), opts), std::invalid_argument);
  opts.max_range = 0.0;
  EXPECT_THROW(traverse_ray(map, Vec3::Zero(), Vec3::UnitX(), opts), std::invalid_argument);
}

TEST(TraverseRay, VisibilityIsExplicitProduct) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-2.5, 2.5);
  SemanticOctree map;
  for (int x = -10; x <= 10; ++x)
    for (int y = -10; y <= 10; ++y)
      for (int z = -10; z <= 10; ++z)
        if (rng() % 3) map.set_voxel({x, y, z}, u(rng), ClassVector::Zero(3));
  TraceOptions opts;
  opts.visibility_cutoff = 0.0;
  opts.max_range = 0.3;
  for (int i = 0; i < 300; ++i) {
    const auto tr = traverse_ray(map, Vec3::Random() * 0.05, random_unit(rng), opts);
    ASSERT_FALSE(tr.entries.empty());
    EXPECT_EQ(tr.entries[0].p_v, 1.0);
    for (std::size_t n = 0; n < tr.entries.size(); ++n) {
      double prod = 1.0;
      for (std::size_t j = 0; j < n; ++j) prod *= 1.0 - map.occupancy(tr.entries[j].key);
      EXPECT_NEAR(tr.entries[n].p_v, prod, 1e-12);
      EXPECT_EQ(tr.entries[n].p_o, map.occupancy(tr.entries[n].key));
      if (n) EXPECT_LE(tr.entries[n].p_v, tr.entries[n - 1].p_v);
    }
  }
}

TEST(Downsample, Step) {
  EXPECT_EQ(downsample_step(0.015, 400, 0.4), 15);
  EXPECT_EQ(downsample_step(0.015, 400, 0.6), 10);
  EXPECT_EQ(downsample_step(0.015, 400, 100.0), 1);
  EXPECT_THROW(downsample_step(0.0, 400, 0.4), std::invalid_argument);
  EXPECT_THROW(downsample_step(0.015, 400, -1.0), std::invalid_argument);
}

TEST(RoiBox, Size) {
  CameraModel cam;
  const Eigen::Vector2d c(cam.cx, cam.cy);
  EXPECT_EQ(roi_pixel_box(0.1, 400, 0.4, c, cam).side, 100.0);
  EXPECT_EQ(roi_pixel_box(0.1, 400, 0.6, c, cam).side, 67.0);
  const PixelBox corner = roi_pixel_box(0.1, 400, 0.4, Eigen::Vector2d(0, 0), cam);
  EXPECT_LT(corner.area(), 100.0 * 100.0);
  EXPECT_GT(corner.area(), 0.0);
}

class BundleTest : public ::testing::Test {
 protected:
  CameraModel cam;
  RaySamplingParams params;
  Vec3 centroid{0.1, 0.2, 0.5};

  CameraPose at(double z) { return CameraPose::look_at(centroid + Vec3(z, 0, 0), centroid); }
};

TEST_F(BundleTest, AdaptiveCount) {
  const auto b = generate_rays(cam, at(0.4), centroid, params, SamplingMode::kAdaptive);
  EXPECT_EQ(b.directions.size(), 49u);
  EXPECT_EQ(b.step, 15);
  for (const auto& d : b.directions) EXPECT_NEAR(d.norm(), 1.0, 1e-9);
}

TEST_F(BundleTest, DenseAndSparseCounts) {
  EXPECT_EQ(generate_rays(cam, at(0.4), centroid, params, SamplingMode::kDense).directions.size(), 784u);
  EXPECT_EQ(generate_rays(cam, at(0.4), centroid, params, SamplingMode::kSparse).directions.size(), 36u);
  EXPECT_LT(49.0 / 784.0, 0.07);
}

TEST_F(BundleTest, AngularSpacingMatchesVoxel) {
  for (double z : {0.4, 0.6}) {
    const auto b = generate_rays(cam, at(z), centroid, params);
    // nearest-neighbor angle for each ray
    for (std::size_t i = 0; i < b.directions.size(); ++i) {
      double best = 1e9;
      for (std::size_t j = 0; j < b.directions.size(); ++j) {
        if (i != j) best = std::min(best, std::acos(std::clamp(b.directions[i].dot(b.directions[j]), -1.0, 1.0)));
      }
      EXPECT_LE(best, 1.1 * kRes / z) << z;
    }
  }
}

TEST_F(BundleTest, CentroidBehindThrows) {
  const CameraPose p = CameraPose::look_at(centroid + Vec3(0.4, 0, 0), centroid + Vec3(1, 0, 0));
  EXPECT_THROW(generate_rays(cam, p, centroid, params), std::invalid_argument);
}

TEST(SamplingMode, Names) {
  for (auto m : {SamplingMode::kAdaptive, SamplingMode::kDense, SamplingMode::kSparse})
    EXPECT_EQ(parse_sampling_mode(to_string(m)), m);
  EXPECT_THROW(parse_sampling_mode("fast"), std::invalid_argument);
}
