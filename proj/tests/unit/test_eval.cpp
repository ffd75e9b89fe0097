#include <gtest/gtest.h>

#include "nbv/eval.hpp"
#include "nbv/sensor.hpp"

#include <cmath>
#include <random>

using namespace nbv;

namespace {

constexpr double kRes = 0.015;

std::size_t brute_covered(const std::vector<Vec3>& rec, const std::vector<Vec3>& truth, double res) {
  std::size_t n = 0;
  for (const auto& t : truth) {
    for (const auto& r : rec) {
      if ((t - r).norm() <= res) {
        ++n;
        break;
      }
    }
  }
  return n;
}

std::vector<Vec3> sphere_points(const Vec3& c, double r, int n) {
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i) {
    const double z = -1 + 2 * (i + 0.5) / n, phi = i * 2.399963229728653;
    const double s = std::sqrt(1 - z * z);
    pts.push_back(c + r * Vec3(s * std::cos(phi), s * std::sin(phi), z));
  }
  return pts;
}

}  // namespace

TEST(FruitEntropy, VirginBox) {
  SemanticOctree map;
  const std::vector<Aabb> boxes = {{Vec3::Constant(0.001), Vec3::Constant(0.059)}};
  EXPECT_EQ(keys_in_boxes(boxes, kRes).size(), 64u);
  EXPECT_NEAR(total_fruit_entropy(map, boxes), 64 * std::log(3.0), 1e-9);
  EXPECT_NEAR(total_fruit_entropy(map, boxes), 70.3, 0.05);
}

TEST(FruitEntropy, OverlapCountedOnce) {
  SemanticOctree map;
  const std::vector<Aabb> boxes = {{Vec3::Constant(0.001), Vec3::Constant(0.059)},
                                   {Vec3::Constant(0.001), Vec3::Constant(0.059)}};
  EXPECT_EQ(keys_in_boxes(boxes, kRes).size(), 64u);
}

TEST(FruitEntropy, Deterministic) {
  SemanticOctree map;
  const std::vector<Aabb> boxes = {{Vec3::Constant(0.001), Vec3::Constant(0.059)}};
  ClassVector c(3);
  c << 1e15, 0, 0;
  for (const auto& k : keys_in_boxes(boxes, kRes)) map.set_voxel(k, 2.0, c);
  EXPECT_NEAR(total_fruit_entropy(map, boxes), 0.0, 1e-9);
}

TEST(FruitEntropy, NoiselessViewReducesEntropy) {
  Scene s;
  s.primitives.push_back(Primitive::sphere(Vec3(0, 0, 0.5), 0.04, kFruit));
  const auto boxes = fruit_boxes(s, kRes);
  SemanticOctree map;
  const double before = total_fruit_entropy(map, boxes);
  CameraModel cam;
  const auto pose = CameraPose::look_at(Vec3(0.3, 0, 0.5), Vec3(0, 0, 0.5));
  integrate_observation(map, pose, render(s, cam, pose), cam);
  EXPECT_LT(total_fruit_entropy(map, boxes), before);
}

TEST(FruitEntropy, Bound) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 30; ++trial) {
    SemanticOctree map;
    std::vector<Aabb> boxes;
    for (int b = 0; b < 3; ++b) {
      const Vec3 lo(u(rng) * 0.2, u(rng) * 0.2, u(rng) * 0.2);
      boxes.push_back({lo, lo + Vec3::Constant(0.02 + 0.05 * u(rng))});
    }
    for (int i = 0; i < 500; ++i) {
      ClassVector c(3);
      c << std::floor(u(rng) * 4), std::floor(u(rng) * 4), std::floor(u(rng) * 4);
      map.set_voxel({int(rng() % 20), int(rng() % 20), int(rng() % 20)}, u(rng) * 4 - 2, c);
    }
    const double h = total_fruit_entropy(map, boxes);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, keys_in_boxes(boxes, kRes).size() * std::log(3.0) + 1e-9);
  }
}

TEST(Coverage, Examples) {
  const auto truth = sphere_points(Vec3(0.1, 0.2, 0.3), 0.04, 500);
  EXPECT_EQ(surface_coverage(truth, truth, kRes), 1.0);
  EXPECT_EQ(surface_coverage({}, truth, kRes), 0.0);
  EXPECT_THROW(surface_coverage(truth, {}, kRes), std::invalid_argument);
}

TEST(Coverage, VoxelShellCoversSphere) {
  const Vec3 c(0.1, 0.2, 0.3);
  const double r = 0.04;
  const auto truth = sphere_points(c, r, 5000);
  std::vector<Vec3> rec;
  for (int x = 0; x < 40; ++x)
    for (int y = 0; y < 40; ++y)
      for (int z = 0; z < 40; ++z) {
        const Vec3 p = center_of(VoxelKey{x, y, z}, kRes);
        if (std::abs((p - c).norm() - r) <= kRes) rec.push_back(p);
      }
  EXPECT_EQ(surface_coverage(rec, truth, kRes), 1.0);
  EXPECT_EQ(brute_covered(rec, truth, kRes), truth.size());
}

TEST(Coverage, MatchesBruteForce) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0, 0.3);
  for (int n : {10, 300, 3000, 10000}) {
    std::vector<Vec3> rec, truth;
    for (int i = 0; i < n; ++i) rec.push_back(Vec3(u(rng), u(rng), u(rng)));
    for (int i = 0; i < n; ++i) truth.push_back(Vec3(u(rng), u(rng), u(rng)));
    const double got = surface_coverage(rec, truth, kRes);
    EXPECT_EQ(got, static_cast<double>(brute_covered(rec, truth, kRes)) / n) << n;
  }
}

TEST(Coverage, MonotoneUnderNoiselessMapping) {
  SceneSpec spec;
  spec.seed = 3;
  const Scene s = generate_scene(spec);
  const auto truth = ground_truth_surface(s, 20000, 1).with_label(kFruit);
  MapParams mp;
  mp.clear_no_return = true;
  SemanticOctree map(mp);
  CameraModel cam;
  const Vec3 c = s.plants[0].bounds.center();
  double prev = 0.0;
  for (int i = 0; i < 12; ++i) {
    const double a = i * 2.1, h = 0.3 * std::sin(i * 1.3);
    const auto pose = CameraPose::look_at(c + Vec3(0.45 * std::cos(a), 0.45 * std::sin(a), h), c);
    integrate_observation(map, pose, render(s, cam, pose), cam);
    const double cov = surface_coverage(classified_voxels(map, kFruit), truth, kRes);
    EXPECT_GE(cov, prev) << "view " << i;
    prev = cov;
  }
  EXPECT_GT(prev, 0.5);
}
