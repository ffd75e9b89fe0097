#include <gtest/gtest.h>

#include "nbv/planner.hpp"
#include "nbv/scene.hpp"
#include "nbv/sensor.hpp"

#include <cmath>
#include <sstream>

using namespace nbv;

namespace {

// Distance from a point to a disc.
double disc_distance(const Primitive& d, const Vec3& p) {
  const Vec3 rel = p - d.center;
  const double h = rel.dot(d.normal);
  const double rho = (rel - h * d.normal).norm();
  if (rho <= d.radius) return std::abs(h);
  return std::hypot(h, rho - d.radius);
}

std::string dump(const Scene& s) {
  std::ostringstream out;
  save_scene(out, s);
  return out.str();
}

Scene single_sphere(const Vec3& c, double r) {
  Scene s;
  s.primitives.push_back(Primitive::sphere(c, r, kFruit));
  return s;
}

}  // namespace

TEST(GenerateScene, Deterministic) {
  SceneSpec spec;
  spec.fruits_min = spec.fruits_max = 3;
  spec.seed = 7;
  EXPECT_EQ(dump(generate_scene(spec)), dump(generate_scene(spec)));
  spec.seed = 8;
  EXPECT_NE(dump(generate_scene(spec)), dump(generate_scene(SceneSpec{})));
}

TEST(GenerateScene, Rows) {
  SceneSpec spec;
  spec.plants = 8;
  spec.rows = 2;
  const Scene s = generate_scene(spec);
  ASSERT_EQ(s.plants.size(), 8u);
  std::set<long> row_y;
  for (const auto& p : s.plants) row_y.insert(std::lround(p.base.y() * 1000));
  EXPECT_EQ(row_y.size(), 2u);
}

TEST(GenerateScene, NoFruit) {
  SceneSpec spec;
  spec.fruits_min = spec.fruits_max = 0;
  const Scene s = generate_scene(spec);
  EXPECT_TRUE(s.fruits().empty());
  std::vector<Vec3> none;
  EXPECT_TRUE(cluster_targets(none, 0.05, 3).empty());
}

TEST(GenerateScene, OccludingLeafNearEveryFruit) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SceneSpec spec;
    spec.seed = seed;
    const Scene s = generate_scene(spec);
    for (const Primitive* f : s.fruits()) {
      const double r = f->radii.maxCoeff();
      double best = 1e9;
      for (const auto& p : s.primitives)
        if (p.type == PrimitiveType::kDisc && p.label == kLeaf) best = std::min(best, disc_distance(p, f->center) - r);
      EXPECT_LE(best, 1.5 * r) << "seed " << seed;
    }
    for (const Primitive* f : s.fruits()) {
      EXPECT_GE(f->center.z(), 0.0);
      EXPECT_LE(f->center.z(), spec.plant_height);
    }
  }
}

TEST(GenerateScene, RejectsBadSpec) {
  SceneSpec spec;
  spec.plants = -1;
  EXPECT_THROW(generate_scene(spec), std::invalid_argument);
  spec = {};
  spec.fruit_radius_min = -0.01;
  EXPECT_THROW(generate_scene(spec), std::invalid_argument);
  spec = {};
  spec.plant_height = 0.0;
  EXPECT_THROW(generate_scene(spec), std::invalid_argument);
}

TEST(GenerateScene, FileRoundTrip) {
  const Scene s = generate_scene(SceneSpec{});
  std::istringstream in(dump(s));
  EXPECT_EQ(dump(load_scene(in)), dump(s));
}

TEST(Render, SphereOnAxis) {
  const Scene s = single_sphere(Vec3(0, 0, 0.5), 0.04);
  CameraModel cam;
  const auto pose = CameraPose::look_at(Vec3(0.4, 0, 0.5), Vec3(0, 0, 0.5));
  const auto img = render(s, cam, pose);
  EXPECT_NEAR(img.depth(200, 200), 0.36, 1e-12);
  EXPECT_EQ(img.label(200, 200), kFruit);
}

TEST(Render, FacingAway) {
  Scene s = generate_scene(SceneSpec{});
  CameraModel cam;
  const auto pose = CameraPose::look_at(Vec3(0, 0, 5), Vec3(0, 0, 10), Vec3::UnitX());
  const auto img = render(s, cam, pose);
  for (int v = 0; v < img.height(); ++v)
    for (int u = 0; u < img.width(); ++u) {
      EXPECT_FALSE(LabeledDepthImage::valid(img.depth(v, u)));
      EXPECT_EQ(img.label(v, u), kBackground);
    }
}

TEST(Render, LeafInFront) {
  Scene s = single_sphere(Vec3(0, 0, 0.5), 0.04);
  s.primitives.push_back(Primitive::disc(Vec3(0.2, 0, 0.5), Vec3::UnitX(), 0.06, kLeaf));
  CameraModel cam;
  const auto pose = CameraPose::look_at(Vec3(0.4, 0, 0.5), Vec3(0, 0, 0.5));
  const auto img = render(s, cam, pose);
  // the fruit's projection spans about 40 px around the center
  for (int v = 180; v <= 220; ++v)
    for (int u = 180; u <= 220; ++u) {
      EXPECT_EQ(img.label(v, u), kLeaf);
      EXPECT_NEAR(img.depth(v, u), 0.2, 1e-12);
    }
}

TEST(Render, BackProjectsOntoSurfaces) {
  const Scene s = generate_scene(SceneSpec{});
  CameraModel cam;
  int checked = 0;
  for (double a : {0.0, 2.0, 4.0}) {
    const Vec3 c = s.plants[0].bounds.center();
    const auto pose = CameraPose::look_at(c + Vec3(0.45 * std::cos(a), 0.45 * std::sin(a), 0.1), c);
    const auto img = render(s, cam, pose);
    for (int v = 0; v < img.height(); v += 3)
      for (int u = 0; u < img.width(); u += 3) {
        const double d = img.depth(v, u);
        if (!LabeledDepthImage::valid(d)) {
          EXPECT_EQ(img.label(v, u), kBackground);
          continue;
        }
        const Vec3 p = pose.to_world(cam.pixel_direction(u, v) * d);
        double best = 1e9;
        int label = -1;
        for (const auto& prim : s.primitives) {
          const double r = std::abs(prim.surface_residual(p));
          if (r < best) best = r, label = prim.label;
        }
        EXPECT_LT(best, 1e-6);
        EXPECT_EQ(label, img.label(v, u));
        ++checked;
      }
  }
  EXPECT_GT(checked, 1000);
}

TEST(CorruptLabels, Identity) {
  const Scene s = generate_scene(SceneSpec{});
  CameraModel cam;
  const Vec3 c = s.plants[0].bounds.center();
  const auto img = render(s, cam, CameraPose::look_at(c + Vec3(0.45, 0, 0), c));
  const auto out = corrupt_labels(img, 1.0, 3);
  EXPECT_EQ(out.label, img.label);
  EXPECT_TRUE(out.depth.cwiseEqual(img.depth).count() + out.depth.array().isNaN().count() ==
              img.depth.size());
}

namespace {
// Checkerboard: every pixel is its own 4-connected component.
LabeledDepthImage checkerboard(int w, int h, int a, int b) {
  LabeledDepthImage img(w, h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      img.depth(v, u) = 0.5;
      img.label(v, u) = (u + v) % 2 ? a : b;
    }
  return img;
}
}  // namespace

TEST(CorruptLabels, ForcedFlip) {
  const auto img = checkerboard(20, 10, kFruit, kLeaf);
  const auto out = corrupt_labels(img, 0.0, 1, 2);
  for (int v = 0; v < 10; ++v)
    for (int u = 0; u < 20; ++u) EXPECT_EQ(out.label(v, u), 1 - img.label(v, u));
}

TEST(CorruptLabels, KeptFraction) {
  const auto img = checkerboard(40, 25, kFruit, kLeaf);
  ASSERT_EQ(count_label_components(img), 1000);
  const auto out = corrupt_labels(img, 0.7, 42);
  const double kept = static_cast<double>((out.label.array() == img.label.array()).count()) / 1000.0;
  EXPECT_GE(kept, 0.67);
  EXPECT_LE(kept, 0.73);
  EXPECT_EQ(corrupt_labels(img, 0.7, 42).label, out.label);
  for (int v = 0; v < 25; ++v)
    for (int u = 0; u < 40; ++u) EXPECT_EQ(out.depth(v, u), 0.5);
}

TEST(CorruptLabels, MarginalOverSeeds) {
  const auto img = checkerboard(10, 10, kFruit, kBackground);
  long kept = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto out = corrupt_labels(img, 0.7, seed);
    kept += (out.label.array() == img.label.array()).count();
    total += 100;
  }
  // 20000 draws: 3 sigma is about 0.01
  EXPECT_NEAR(static_cast<double>(kept) / total, 0.7, 0.01);
}

TEST(GroundTruth, SphereCount) {
  const double r = 0.04, d = 20000;
  const auto pts = ground_truth_surface(single_sphere(Vec3(1, 2, 3), r), d, 5);
  const double want = 4 * M_PI * r * r * d;
  EXPECT_NEAR(static_cast<double>(pts.size()), want, 0.05 * want);
  for (const auto& p : pts.points) EXPECT_LT(std::abs((p - Vec3(1, 2, 3)).norm() - r), 1e-9);
  EXPECT_TRUE(ground_truth_surface(Scene{}, d).points.empty());
}

TEST(GroundTruth, FruitPointsOnFruit) {
  const Scene s = generate_scene(SceneSpec{});
  const auto pts = ground_truth_surface(s, 20000, 1);
  ASSERT_GT(pts.size(), 0u);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_LT(std::abs(s.primitives[pts.primitive[i]].surface_residual(pts.points[i])), 1e-9);
    EXPECT_EQ(pts.labels[i], s.primitives[pts.primitive[i]].label);
  }
  const auto again = ground_truth_surface(s, 20000, 1);
  EXPECT_EQ(again.points, pts.points);
}
