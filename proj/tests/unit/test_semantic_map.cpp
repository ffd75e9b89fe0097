#include <gtest/gtest.h>

#include "nbv/semantic_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

using namespace nbv;

namespace {

// 1x1 camera looking along +z from the center of voxel (0,0,0).
CameraModel one_pixel() {
  CameraModel cam;
  cam.width = 1;
  cam.height = 1;
  cam.fx = cam.fy = 1.0;
  cam.cx = cam.cy = 0.0;
  return cam;
}

CameraPose origin_pose(double res = 0.015) {
  CameraPose pose;
  pose.position = Vec3::Constant(0.5 * res);
  return pose;
}

LabeledDepthImage single(double depth, int label) {
  LabeledDepthImage img(1, 1);
  img.depth(0, 0) = depth;
  img.label(0, 0) = label;
  return img;
}

ClassVector counts3(double a, double b, double c) {
  ClassVector v(3);
  v << a, b, c;
  return v;
}

}  // namespace

TEST(SemanticMap, SingleFruitPixel) {
  SemanticOctree map;
  auto stats = integrate_observation(map, origin_pose(), single(0.30, kFruit), one_pixel());
  // endpoint at z = 0.3075, voxel 20
  const VoxelKey end{0, 0, 20};
  const SemanticVoxel* v = map.find(end);
  ASSERT_NE(v, nullptr);
  EXPECT_NEAR(v->occ_logodds, std::log(0.85 / 0.15), 1e-9);
  EXPECT_NEAR(v->occ_logodds, 1.7346, 1e-4);
  EXPECT_EQ(v->class_counts[0], 1.0);
  EXPECT_EQ(v->class_counts[1], 0.0);
  EXPECT_EQ(v->class_counts[2], 0.0);
  EXPECT_EQ(stats.hits, 1u);
  EXPECT_EQ(stats.misses, 20u);
  for (int z = 0; z < 20; ++z) {
    const SemanticVoxel* f = map.find({0, 0, z});
    ASSERT_NE(f, nullptr) << z;
    EXPECT_NEAR(f->occ_logodds, std::log(0.4 / 0.6), 1e-12);
    EXPECT_EQ(f->total_count(), 0.0);
  }
}

TEST(SemanticMap, SamePixelTwice) {
  SemanticOctree map;
  for (int i = 0; i < 2; ++i) integrate_observation(map, origin_pose(), single(0.30, kFruit), one_pixel());
  const VoxelKey end{0, 0, 20};
  EXPECT_NEAR(map.find(end)->occ_logodds, 2.0 * std::log(0.85 / 0.15), 1e-9);
  EXPECT_NEAR(map.find(end)->occ_logodds, 3.4692, 1e-4);
  EXPECT_NEAR(map.class_distribution(end)[kFruit], 0.6, 1e-9);
}

TEST(SemanticMap, EmptyImageIsNoOp) {
  SemanticOctree map;
  CameraModel cam;
  cam.width = cam.height = 8;
  cam.cx = cam.cy = 4;
  LabeledDepthImage img(8, 8);
  auto stats = integrate_observation(map, origin_pose(), img, cam);
  EXPECT_EQ(stats, UpdateStats{});
  EXPECT_EQ(map.size(), 0u);
}

TEST(SemanticMap, NoReturnClearsWhenEnabled) {
  MapParams p;
  p.clear_no_return = true;
  SemanticOctree map(p);
  integrate_observation(map, origin_pose(), single(std::numeric_limits<double>::quiet_NaN(), kBackground),
                        one_pixel());
  EXPECT_GT(map.size(), 60u);
  map.for_each([](const VoxelKey&, const SemanticVoxel& v) { EXPECT_LT(v.occupancy(), 0.5); });
}

TEST(SemanticMap, BeyondMaxRangeOnlyFreesSpace) {
  SemanticOctree map;
  auto stats = integrate_observation(map, origin_pose(), single(1.5, kFruit), one_pixel());
  EXPECT_EQ(stats.hits, 0u);
  EXPECT_GT(stats.misses, 0u);
  map.for_each([&](const VoxelKey& k, const SemanticVoxel& v) {
    EXPECT_LT(v.occupancy(), 0.5);
    EXPECT_LE(map.center(k).z(), 1.0 + map.resolution());
  });
}

TEST(SemanticMap, RejectsBadInput) {
  SemanticOctree map;
  CameraPose skew = origin_pose();
  skew.rotation(0, 1) = 0.3;
  EXPECT_THROW(integrate_observation(map, skew, single(0.3, kFruit), one_pixel()), std::invalid_argument);
  EXPECT_THROW(integrate_observation(map, origin_pose(), LabeledDepthImage(2, 1), one_pixel()),
               std::invalid_argument);
}

TEST(SemanticMap, ClassDistribution) {
  SemanticOctree map;
  const ClassVector u = map.class_distribution(VoxelKey{5, 5, 5});
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(u[k], 1.0 / 3.0, 1e-12);

  map.set_voxel({0, 0, 0}, 1.0, counts3(4, 0, 0));
  const ClassVector d = map.class_distribution(VoxelKey{0, 0, 0});
  EXPECT_NEAR(d[0], 5.0 / 7.0, 1e-9);
  EXPECT_NEAR(d[1], 1.0 / 7.0, 1e-9);
  EXPECT_NEAR(d[2], 1.0 / 7.0, 1e-9);
  EXPECT_NEAR(d.sum(), 1.0, 1e-9);

  map.set_voxel({1, 0, 0}, 1.0, counts3(2, 2, 2));
  const ClassVector e = map.class_distribution(VoxelKey{1, 0, 0});
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(e[k], 1.0 / 3.0, 1e-12);
}

TEST(SemanticMap, EntropyValues) {
  SemanticOctree map;
  EXPECT_NEAR(map.voxel_entropy(VoxelKey{3, 1, 4}), std::log(3.0), 1e-12);
  EXPECT_NEAR(map.voxel_entropy(VoxelKey{3, 1, 4}), 1.0986, 1e-4);

  ClassVector onehot = counts3(1, 0, 0);
  EXPECT_EQ(categorical_entropy(onehot), 0.0);

  ClassVector p = counts3(5.0 / 7.0, 1.0 / 7.0, 1.0 / 7.0);
  EXPECT_NEAR(categorical_entropy(p), 0.7963, 1e-4);
  map.set_voxel({0, 0, 0}, 1.0, counts3(4, 0, 0));
  EXPECT_NEAR(map.voxel_entropy(VoxelKey{0, 0, 0}), 0.7963, 1e-4);
}

TEST(SemanticMap, ClassifiedVoxels) {
  SemanticOctree map;
  EXPECT_TRUE(classified_voxels(map, kFruit).empty());
  map.set_voxel({2, 3, 4}, 2.0, counts3(3, 1, 1));
  map.set_voxel({7, 7, 7}, -2.0, counts3(3, 1, 1));
  auto c = classified_voxels(map, kFruit, 0.5);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_TRUE(c[0].isApprox(map.center({2, 3, 4})));
  EXPECT_TRUE(classified_voxels(map, kLeaf, 0.5).empty());
  // ties go to the lowest index
  map.set_voxel({9, 9, 9}, 2.0, counts3(0, 2, 2));
  EXPECT_EQ(classified_voxels(map, kLeaf, 0.5).size(), 1u);
  EXPECT_THROW(classified_voxels(map, 3), std::invalid_argument);
}

TEST(SemanticMap, UnknownSemantics) {
  SemanticOctree map;
  map.apply_hit({0, 0, 0}, kLeaf);
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> d(-1000, 1000);
  for (int i = 0; i < 200; ++i) {
    VoxelKey k{d(rng), d(rng), d(rng)};
    if (k == VoxelKey{0, 0, 0}) continue;
    EXPECT_EQ(map.occupancy(k), 0.5);
    EXPECT_EQ(map.voxel_entropy(k), std::log(3.0));
  }
}

TEST(SemanticMap, HitOracle) {
  // brute force sequential clamp against the closed form
  const SensorModel s;
  for (int n = 0; n <= 6; ++n) {
    SemanticOctree map;
    for (int i = 0; i < n; ++i) map.apply_hit({1, 2, 3}, kFruit);
    double seq = 0.0;
    for (int i = 0; i < n; ++i) seq = std::clamp(seq + s.log_hit(), s.log_min(), s.log_max());
    const double closed = std::clamp(n * s.log_hit(), s.log_min(), s.log_max());
    const double got = n ? map.find({1, 2, 3})->occ_logodds : 0.0;
    EXPECT_NEAR(got, seq, 1e-9) << n;
    EXPECT_NEAR(got, closed, 1e-9) << n;
  }
}

TEST(SemanticMap, UpdateOrderIndependent) {
  // Sets that stay inside the clamp range: at most 2 hits and 4 misses.
  std::mt19937 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> ops;  // -1 miss, else label
    const int hits = trial % 3, misses = (trial / 3) % 5;
    for (int i = 0; i < hits; ++i) ops.push_back(static_cast<int>(rng() % 3));
    for (int i = 0; i < misses; ++i) ops.push_back(-1);
    if (ops.empty()) continue;
    SemanticOctree a, b;
    for (int op : ops) op < 0 ? a.apply_miss({0, 0, 0}) : a.apply_hit({0, 0, 0}, op);
    std::shuffle(ops.begin(), ops.end(), rng);
    for (int op : ops) op < 0 ? b.apply_miss({0, 0, 0}) : b.apply_hit({0, 0, 0}, op);
    // summation order can move the last bit
    EXPECT_NEAR(a.find({0, 0, 0})->occ_logodds, b.find({0, 0, 0})->occ_logodds, 1e-12);
    EXPECT_EQ(a.find({0, 0, 0})->class_counts, b.find({0, 0, 0})->class_counts);
  }
}

TEST(SemanticMap, MonotoneCertainty) {
  SemanticOctree map;
  double prev = map.voxel_entropy(VoxelKey{0, 0, 0});
  for (int n = 1; n <= 50; ++n) {
    map.apply_hit({0, 0, 0}, kLeaf);
    const double h = map.voxel_entropy(VoxelKey{0, 0, 0});
    EXPECT_LT(h, prev);
    EXPECT_NEAR(map.class_distribution(VoxelKey{0, 0, 0})[kLeaf], (1.0 + n) / (3.0 + n), 1e-12);
    prev = h;
  }
  EXPECT_LT(prev, 0.2);
}

TEST(SemanticMap, SaveLoadRoundTrip) {
  SemanticOctree map;
  map.set_voxel({-3, 4, 10}, 1.25, counts3(2, 0, 1));
  map.set_voxel({0, 0, 0}, -0.4, counts3(0, 0, 0));
  std::stringstream ss;
  save_map(ss, map);
  const std::string text = ss.str();
  EXPECT_EQ(text.rfind("semmap v1 resolution=", 0), 0u);
  SemanticOctree back = load_map(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.find({-3, 4, 10})->occ_logodds, 1.25);
  EXPECT_EQ(back.find({-3, 4, 10})->class_counts, counts3(2, 0, 1));
  std::stringstream again;
  save_map(again, back);
  EXPECT_EQ(again.str(), text);
}

TEST(SemanticMap, PlyHeader) {
  std::vector<Vec3> pts = {Vec3(0, 0, 0), Vec3(1, 2, 3)};
  std::vector<int> cls = {0, 2};
  std::stringstream ss;
  write_ply(ss, pts, cls);
  const std::string s = ss.str();
  EXPECT_NE(s.find("element vertex 2"), std::string::npos);
  EXPECT_NE(s.find("property int class"), std::string::npos);
}
