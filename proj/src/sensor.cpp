#include "nbv/sensor.hpp"

#include "nbv/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nbv {

namespace {

struct PixelRect {
  int u0, v0, u1, v1;  // inclusive
};

/// Conservative image footprint of a camera-frame sphere.
PixelRect footprint(const Vec3& c, double r, const CameraModel& cam) {
  const PixelRect full{0, 0, cam.width - 1, cam.height - 1};
  const double z_near = c.z() - r;
  if (z_near <= 1e-6) return full;
  const double z_far = c.z() + r;
  auto range = [&](double x, double f, double center, int size, int& lo, int& hi) {
    const double a = std::min((x - r) / z_near, (x - r) / z_far);
    const double b = std::max((x + r) / z_near, (x + r) / z_far);
    lo = std::max(0, static_cast<int>(std::floor(f * a + center)) - 1);
    hi = std::min(size - 1, static_cast<int>(std::ceil(f * b + center)) + 1);
  };
  PixelRect rect{};
  range(c.x(), cam.fx, cam.cx, cam.width, rect.u0, rect.u1);
  range(c.y(), cam.fy, cam.cy, cam.height, rect.v0, rect.v1);
  return rect;
}

Vec3 any_perpendicular(const Vec3& n) {
  const Vec3 ref = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return n.cross(ref).normalized();
}

Vec3 uniform_on_sphere(Rng& rng) {
  const double z = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {s * std::cos(phi), s * std::sin(phi), z};
}

}  // namespace

LabeledDepthImage render(const Scene& scene, const CameraModel& cam, const CameraPose& pose) {
  cam.validate();
  if (!pose.is_orthonormal()) throw std::invalid_argument("camera rotation is not orthonormal");
  LabeledDepthImage img(cam.width, cam.height);
  const Mat3& R = pose.rotation;
  const Vec3 col_u = R.col(0) / cam.fx;
  const Vec3 col_v = R.col(1) / cam.fy;
  const Vec3 col_z = R.col(2) - col_u * cam.cx - col_v * cam.cy;

  for (const auto& prim : scene.primitives) {
    const auto [center, radius] = prim.bounding_sphere();
    const Vec3 c = pose.to_camera(center);
    if (c.z() + radius <= 0.0 || c.z() - radius > cam.max_depth) continue;
    const PixelRect rect = footprint(c, radius, cam);
    for (int v = rect.v0; v <= rect.v1; ++v) {
      const Vec3 row = col_v * v + col_z;
      for (int u = rect.u0; u <= rect.u1; ++u) {
        // Direction with unit component along the optical axis, so the ray
        // parameter is the z-depth.
        const Vec3 dir = col_u * u + row;
        const auto s = prim.intersect(pose.position, dir);
        if (!s || *s > cam.max_depth) continue;
        double& d = img.depth(v, u);
        if (!std::isnan(d) && d <= *s) continue;
        d = *s;
        img.label(v, u) = prim.label;
      }
    }
  }
  return img;
}

namespace {

/// Component id per pixel (-1 for invalid), numbered in scan order.
int label_components(const LabeledDepthImage& obs, std::vector<int>& comp) {
  const int w = obs.width();
  const int h = obs.height();
  comp.assign(static_cast<std::size_t>(w) * h, -1);
  std::vector<int> stack;
  int next = 0;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const int idx = v * w + u;
      if (comp[static_cast<std::size_t>(idx)] >= 0 || !LabeledDepthImage::valid(obs.depth(v, u))) continue;
      const int label = obs.label(v, u);
      comp[static_cast<std::size_t>(idx)] = next;
      stack.push_back(idx);
      while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        const int cu = cur % w;
        const int cv = cur / w;
        const int nbr[4][2] = {{cu - 1, cv}, {cu + 1, cv}, {cu, cv - 1}, {cu, cv + 1}};
        for (const auto& [nu, nv] : nbr) {
          if (nu < 0 || nv < 0 || nu >= w || nv >= h) continue;
          const int ni = nv * w + nu;
          if (comp[static_cast<std::size_t>(ni)] >= 0) continue;
          if (!LabeledDepthImage::valid(obs.depth(nv, nu)) || obs.label(nv, nu) != label) continue;
          comp[static_cast<std::size_t>(ni)] = next;
          stack.push_back(ni);
        }
      }
      ++next;
    }
  }
  return next;
}

}  // namespace

int count_label_components(const LabeledDepthImage& obs) {
  std::vector<int> comp;
  return label_components(obs, comp);
}

LabeledDepthImage corrupt_labels(const LabeledDepthImage& obs, double p_correct, std::uint64_t seed,
                                 int num_classes) {
  if (!(p_correct >= 0.0 && p_correct <= 1.0)) throw std::invalid_argument("P_gt must lie in [0, 1]");
  if (num_classes < 2) throw std::invalid_argument("label noise needs at least two classes");
  LabeledDepthImage out = obs;
  if (p_correct >= 1.0) return out;

  std::vector<int> comp;
  const int n = label_components(obs, comp);
  std::vector<int> first_pixel(static_cast<std::size_t>(n), -1);
  for (std::size_t i = 0; i < comp.size(); ++i) {
    if (comp[i] >= 0 && first_pixel[static_cast<std::size_t>(comp[i])] < 0) first_pixel[static_cast<std::size_t>(comp[i])] = static_cast<int>(i);
  }

  Rng rng(seed);
  std::vector<int> new_label(static_cast<std::size_t>(n));
  const int w = obs.width();
  for (int c = 0; c < n; ++c) {
    const int px = first_pixel[static_cast<std::size_t>(c)];
    const int old = obs.label(px / w, px % w);
    int label = old;
    if (!(rng.uniform() < p_correct)) {
      const int r = static_cast<int>(rng.below(static_cast<std::uint64_t>(num_classes - 1)));
      label = r < old ? r : r + 1;
    }
    new_label[static_cast<std::size_t>(c)] = label;
  }
  for (std::size_t i = 0; i < comp.size(); ++i) {
    if (comp[i] < 0) continue;
    out.label(static_cast<Eigen::Index>(i) / w, static_cast<Eigen::Index>(i) % w) = new_label[static_cast<std::size_t>(comp[i])];
  }
  return out;
}

std::vector<Vec3> SurfaceSamples::with_label(int label) const {
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (labels[i] == label) out.push_back(points[i]);
  }
  return out;
}

SurfaceSamples ground_truth_surface(const Scene& scene, double density, std::uint64_t seed) {
  using std::numbers::pi;
  if (!(density > 0.0)) throw std::invalid_argument("surface sampling density must be positive");
  SurfaceSamples out;
  for (std::size_t pi_idx = 0; pi_idx < scene.primitives.size(); ++pi_idx) {
    const Primitive& p = scene.primitives[pi_idx];
    Rng rng(derive_seed(seed, {scene.spec.seed, pi_idx}));
    const auto n = static_cast<std::size_t>(std::llround(p.surface_area() * density));
    auto emit = [&](const Vec3& q) {
      out.points.push_back(q);
      out.labels.push_back(p.label);
      out.primitive.push_back(static_cast<int>(pi_idx));
    };
    switch (p.type) {
      case PrimitiveType::kEllipsoid: {
        const double a = p.radii.x(), b = p.radii.y(), c = p.radii.z();
        const double g_max = std::max({b * c, a * c, a * b});
        for (std::size_t k = 0; k < n;) {
          const Vec3 s = uniform_on_sphere(rng);
          const double g = Vec3(b * c * s.x(), a * c * s.y(), a * b * s.z()).norm();
          if (rng.uniform() * g_max > g) continue;  // area-element rejection
          emit(p.center + p.radii.cwiseProduct(s));
          ++k;
        }
        break;
      }
      case PrimitiveType::kDisc: {
        const Vec3 e1 = any_perpendicular(p.normal);
        const Vec3 e2 = p.normal.cross(e1);
        for (std::size_t k = 0; k < n; ++k) {
          const double r = p.radius * std::sqrt(rng.uniform());
          const double t = rng.uniform(0.0, 2.0 * pi);
          emit(p.center + r * (std::cos(t) * e1 + std::sin(t) * e2));
        }
        break;
      }
      case PrimitiveType::kCylinder: {
        const double lateral = 2.0 * pi * p.radius * p.height;
        const double total = p.surface_area();
        for (std::size_t k = 0; k < n; ++k) {
          const double t = rng.uniform(0.0, 2.0 * pi);
          if (rng.uniform() * total < lateral) {
            emit(p.center + Vec3(p.radius * std::cos(t), p.radius * std::sin(t), rng.uniform(0.0, p.height)));
          } else {
            const double r = p.radius * std::sqrt(rng.uniform());
            const double z = rng.uniform() < 0.5 ? 0.0 : p.height;
            emit(p.center + Vec3(r * std::cos(t), r * std::sin(t), z));
          }
        }
        break;
      }
    }
  }
  return out;
}

}  // namespace nbv
