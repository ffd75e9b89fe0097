#include "nbv/scene.hpp"

#include "nbv/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

namespace nbv {

Primitive Primitive::sphere(const Vec3& c, double r, int label) { return ellipsoid(c, Vec3::Constant(r), label); }

Primitive Primitive::ellipsoid(const Vec3& c, const Vec3& radii, int label) {
  if ((radii.array() <= 0.0).any()) throw std::invalid_argument("ellipsoid radii must be positive");
  Primitive p;
  p.type = PrimitiveType::kEllipsoid;
  p.label = label;
  p.center = c;
  p.radii = radii;
  return p;
}

Primitive Primitive::disc(const Vec3& c, const Vec3& normal, double r, int label) {
  if (!(r > 0.0) || !(normal.norm() > 0.0)) throw std::invalid_argument("disc needs a radius and a normal");
  Primitive p;
  p.type = PrimitiveType::kDisc;
  p.label = label;
  p.center = c;
  p.normal = normal.normalized();
  p.radius = r;
  return p;
}

Primitive Primitive::cylinder(const Vec3& base, double r, double h, int label) {
  if (!(r > 0.0) || !(h > 0.0)) throw std::invalid_argument("cylinder radius and height must be positive");
  Primitive p;
  p.type = PrimitiveType::kCylinder;
  p.label = label;
  p.center = base;
  p.radius = r;
  p.height = h;
  return p;
}

std::optional<double> Primitive::intersect(const Vec3& origin, const Vec3& dir, double min_s) const {
  switch (type) {
    case PrimitiveType::kEllipsoid: {
      const Vec3 o = (origin - center).cwiseQuotient(radii);
      const Vec3 d = dir.cwiseQuotient(radii);
      const double a = d.squaredNorm();
      const double b = o.dot(d);
      const double c = o.squaredNorm() - 1.0;
      const double disc = b * b - a * c;
      if (disc < 0.0) return std::nullopt;
      const double sq = std::sqrt(disc);
      // Numerically stable roots.
      const double q = b > 0.0 ? -(b + sq) : -(b - sq);
      double s0 = q / a;
      double s1 = q != 0.0 ? c / q : s0;
      if (s0 > s1) std::swap(s0, s1);
      if (s0 > min_s) return s0;
      if (s1 > min_s) return s1;
      return std::nullopt;
    }
    case PrimitiveType::kDisc: {
      const double denom = normal.dot(dir);
      if (std::abs(denom) < 1e-15) return std::nullopt;
      const double s = normal.dot(center - origin) / denom;
      if (!(s > min_s)) return std::nullopt;
      if ((origin + s * dir - center).squaredNorm() > radius * radius) return std::nullopt;
      return s;
    }
    case PrimitiveType::kCylinder: {
      std::optional<double> best;
      auto consider = [&](double s) {
        if (s > min_s && (!best || s < *best)) best = s;
      };
      const double ox = origin.x() - center.x();
      const double oy = origin.y() - center.y();
      const double a = dir.x() * dir.x() + dir.y() * dir.y();
      if (a > 0.0) {
        const double b = ox * dir.x() + oy * dir.y();
        const double c = ox * ox + oy * oy - radius * radius;
        const double disc = b * b - a * c;
        if (disc >= 0.0) {
          const double sq = std::sqrt(disc);
          for (double s : {(-b - sq) / a, (-b + sq) / a}) {
            const double z = origin.z() + s * dir.z();
            if (z >= center.z() && z <= center.z() + height) consider(s);
          }
        }
      }
      if (dir.z() != 0.0) {
        for (double zc : {center.z(), center.z() + height}) {
          const double s = (zc - origin.z()) / dir.z();
          const double x = ox + s * dir.x();
          const double y = oy + s * dir.y();
          if (x * x + y * y <= radius * radius) consider(s);
        }
      }
      return best;
    }
  }
  return std::nullopt;
}

Aabb Primitive::bounds() const {
  switch (type) {
    case PrimitiveType::kEllipsoid:
      return {center - radii, center + radii};
    case PrimitiveType::kDisc: {
      const Vec3 ext = ((Vec3::Ones() - normal.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt() * radius);
      return {center - ext, center + ext};
    }
    case PrimitiveType::kCylinder:
      return {center - Vec3(radius, radius, 0.0), center + Vec3(radius, radius, height)};
  }
  return {};
}

std::pair<Vec3, double> Primitive::bounding_sphere() const {
  switch (type) {
    case PrimitiveType::kEllipsoid:
      return {center, radii.maxCoeff()};
    case PrimitiveType::kDisc:
      return {center, radius};
    case PrimitiveType::kCylinder:
      return {center + Vec3(0, 0, height / 2), std::hypot(radius, height / 2)};
  }
  return {center, 0.0};
}

double Primitive::surface_residual(const Vec3& p) const {
  switch (type) {
    case PrimitiveType::kEllipsoid:
      return std::abs((p - center).cwiseQuotient(radii).norm() - 1.0) * radii.maxCoeff();
    case PrimitiveType::kDisc: {
      const Vec3 rel = p - center;
      const double off = normal.dot(rel);
      const double in_plane = (rel - off * normal).norm();
      return std::hypot(off, std::max(0.0, in_plane - radius));
    }
    case PrimitiveType::kCylinder: {
      const Vec3 rel = p - center;
      const double rho = std::hypot(rel.x(), rel.y());
      const double z = rel.z();
      const double lateral = std::hypot(rho - radius, std::max({0.0, -z, z - height}));
      const double over = std::max(0.0, rho - radius);
      const double cap = std::min(std::abs(z), std::abs(z - height));
      return std::min(lateral, std::hypot(cap, over));
    }
  }
  return 0.0;
}

double Primitive::surface_area() const {
  using std::numbers::pi;
  switch (type) {
    case PrimitiveType::kEllipsoid: {
      const double a = radii.x(), b = radii.y(), c = radii.z();
      if (a == b && b == c) return 4.0 * pi * a * a;
      // Knud Thomsen's approximation, relative error below 1.1%.
      constexpr double p = 1.6075;
      const double m = (std::pow(a * b, p) + std::pow(a * c, p) + std::pow(b * c, p)) / 3.0;
      return 4.0 * pi * std::pow(m, 1.0 / p);
    }
    case PrimitiveType::kDisc:
      return pi * radius * radius;
    case PrimitiveType::kCylinder:
      return 2.0 * pi * radius * height + 2.0 * pi * radius * radius;
  }
  return 0.0;
}

void SceneSpec::validate() const {
  if (plants < 0 || rows <= 0) throw std::invalid_argument("scene needs a non-negative plant count and rows > 0");
  if (!(row_spacing > 0.0) || !(plant_spacing > 0.0) || !(plant_height > 0.0)) {
    throw std::invalid_argument("scene spacings and plant height must be positive");
  }
  if (fruits_min < 0 || fruits_max < fruits_min) throw std::invalid_argument("bad fruit count range");
  if (!(fruit_radius_min > 0.0) || fruit_radius_max < fruit_radius_min) {
    throw std::invalid_argument("bad fruit radius range");
  }
  if (leaves < 0 || !(leaf_radius_min > 0.0) || leaf_radius_max < leaf_radius_min) {
    throw std::invalid_argument("bad leaf parameters");
  }
  if (occlusion < 0.0) throw std::invalid_argument("occlusion must be non-negative");
  if (!(stem_radius > 0.0)) throw std::invalid_argument("stem radius must be positive");
}

std::vector<const Primitive*> Scene::fruits() const {
  std::vector<const Primitive*> out;
  for (const auto& p : primitives) {
    if (p.label == kFruit) out.push_back(&p);
  }
  return out;
}

namespace {

Vec3 unit_from_angles(double azimuth, double elevation_from_up) {
  return {std::sin(elevation_from_up) * std::cos(azimuth), std::sin(elevation_from_up) * std::sin(azimuth),
          std::cos(elevation_from_up)};
}

/// Conservative test that a disc stays clear of a fruit's bounding sphere.
bool disc_clear_of(const Primitive& disc, const Primitive& fruit, double margin) {
  const auto [c, r] = fruit.bounding_sphere();
  const double rr = r + margin;
  const Vec3 rel = c - disc.center;
  const double off = disc.normal.dot(rel);
  if (std::abs(off) >= rr) return true;
  const double slice = std::sqrt(rr * rr - off * off);
  const double in_plane = (rel - off * disc.normal).norm();
  return in_plane >= disc.radius + slice;
}

}  // namespace

Scene generate_scene(const SceneSpec& spec) {
  using std::numbers::pi;
  spec.validate();
  Scene scene;
  scene.spec = spec;
  Rng rng(derive_seed(spec.seed, {0x5ce0e}));

  const int per_row = spec.plants == 0 ? 0 : (spec.plants + spec.rows - 1) / spec.rows;
  Aabb layout;
  for (int i = 0; i < spec.plants; ++i) {
    const int row = i / per_row;
    const int col = i % per_row;
    const double x = (col - (per_row - 1) / 2.0) * spec.plant_spacing;
    const double y = (row - (spec.rows - 1) / 2.0) * spec.row_spacing;
    Plant plant;
    plant.base = Vec3(x, y, 0.0);
    plant.height = spec.plant_height * rng.uniform(0.9, 1.1);
    const double h = plant.height;

    std::vector<Primitive> parts;
    parts.push_back(Primitive::cylinder(plant.base, spec.stem_radius, h, kBackground));

    std::vector<Primitive> fruits;
    const int n_fruits = rng.integer(spec.fruits_min, spec.fruits_max);
    for (int f = 0; f < n_fruits; ++f) {
      for (int attempt = 0; attempt < 200; ++attempt) {
        const double r = rng.uniform(spec.fruit_radius_min, spec.fruit_radius_max);
        const Vec3 radii(r, r, 1.25 * r);
        const double az = rng.uniform(0.0, 2.0 * pi);
        const double reach = spec.stem_radius + 1.1 * r + rng.uniform(0.0, 0.04);
        const Vec3 c = plant.base + Vec3(reach * std::cos(az), reach * std::sin(az), rng.uniform(0.35, 0.85) * h);
        const bool overlaps = std::any_of(fruits.begin(), fruits.end(), [&](const Primitive& o) {
          return (o.center - c).norm() < o.radii.maxCoeff() + radii.maxCoeff() + 0.005;
        });
        if (overlaps) continue;
        fruits.push_back(Primitive::ellipsoid(c, radii, kFruit));
        break;
      }
    }

    auto clear_of_fruits = [&](const Primitive& leaf) {
      return std::all_of(fruits.begin(), fruits.end(),
                         [&](const Primitive& fr) { return disc_clear_of(leaf, fr, 0.003); });
    };

    std::vector<Primitive> leaves;
    if (spec.occlusion > 0.0) {
      for (const auto& fr : fruits) {
        const double r = fr.radii.x();
        for (int attempt = 0; attempt < 200; ++attempt) {
          Vec3 radial = fr.center - plant.base;
          radial.z() = 0.0;
          const double base_az = std::atan2(radial.y(), radial.x());
          const double az = base_az + rng.uniform(-0.7, 0.7);
          const Vec3 dir = unit_from_angles(az, pi / 2 + rng.uniform(-0.5, 0.5));
          const double standoff = fr.radii.maxCoeff() * rng.uniform(1.35, 1.6);
          const Vec3 lateral = dir.cross(Vec3::UnitZ()).normalized() * rng.uniform(-0.6, 0.6) * r +
                               Vec3::UnitZ() * rng.uniform(-0.5, 0.5) * r;
          const double leaf_r = r * (0.6 + 0.9 * std::min(spec.occlusion, 1.0)) * rng.uniform(0.85, 1.15);
          const Vec3 tilt = unit_from_angles(rng.uniform(0, 2 * pi), pi / 2) * rng.uniform(0.0, 0.35);
          Primitive leaf = Primitive::disc(fr.center + dir * standoff + lateral, dir + tilt, leaf_r, kLeaf);
          if (!clear_of_fruits(leaf)) continue;
          leaves.push_back(leaf);
          break;
        }
      }
    }
    for (int l = 0; l < spec.leaves; ++l) {
      for (int attempt = 0; attempt < 200; ++attempt) {
        const double az = rng.uniform(0.0, 2.0 * pi);
        const double reach = rng.uniform(0.03, 0.16);
        const Vec3 c = plant.base + Vec3(reach * std::cos(az), reach * std::sin(az), rng.uniform(0.2, 1.0) * h);
        const Vec3 n = unit_from_angles(rng.uniform(0.0, 2.0 * pi), rng.uniform(0.0, 1.2));
        Primitive leaf =
            Primitive::disc(c, n, rng.uniform(spec.leaf_radius_min, spec.leaf_radius_max), kLeaf);
        if (!clear_of_fruits(leaf)) continue;
        leaves.push_back(leaf);
        break;
      }
    }

    parts.insert(parts.end(), fruits.begin(), fruits.end());
    parts.insert(parts.end(), leaves.begin(), leaves.end());
    for (auto& p : parts) {
      p.plant = i;
      plant.bounds.extend(p.bounds());
    }
    layout.extend(plant.bounds);
    scene.primitives.insert(scene.primitives.end(), parts.begin(), parts.end());
    scene.plants.push_back(plant);
  }

  if (spec.ground) {
    Vec3 c = Vec3::Zero();
    double radius = 1.0;
    if (!layout.empty()) {
      c = Vec3(layout.center().x(), layout.center().y(), 0.0);
      radius = 0.5 * std::hypot(layout.size().x(), layout.size().y()) + 0.6;
    }
    scene.primitives.push_back(Primitive::disc(c, Vec3::UnitZ(), radius, kBackground));
  }
  return scene;
}

std::string_view class_name(int label) {
  switch (label) {
    case kFruit:
      return "fruit";
    case kLeaf:
      return "leaf";
    case kBackground:
      return "background";
    default:
      return "unknown";
  }
}

int parse_class(std::string_view name) {
  if (name == "fruit") return kFruit;
  if (name == "leaf") return kLeaf;
  if (name == "background") return kBackground;
  throw std::invalid_argument("unknown class: " + std::string(name));
}

namespace {

using nlohmann::json;

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::runtime_error("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json spec_to_json(const SceneSpec& s) {
  return {{"plants", s.plants},
          {"rows", s.rows},
          {"row_spacing", s.row_spacing},
          {"plant_spacing", s.plant_spacing},
          {"plant_height", s.plant_height},
          {"fruits_min", s.fruits_min},
          {"fruits_max", s.fruits_max},
          {"fruit_radius_min", s.fruit_radius_min},
          {"fruit_radius_max", s.fruit_radius_max},
          {"leaves", s.leaves},
          {"leaf_radius_min", s.leaf_radius_min},
          {"leaf_radius_max", s.leaf_radius_max},
          {"occlusion", s.occlusion},
          {"stem_radius", s.stem_radius},
          {"ground", s.ground},
          {"seed", s.seed}};
}

SceneSpec spec_from_json(const json& j) {
  SceneSpec s;
  s.plants = j.value("plants", s.plants);
  s.rows = j.value("rows", s.rows);
  s.row_spacing = j.value("row_spacing", s.row_spacing);
  s.plant_spacing = j.value("plant_spacing", s.plant_spacing);
  s.plant_height = j.value("plant_height", s.plant_height);
  s.fruits_min = j.value("fruits_min", s.fruits_min);
  s.fruits_max = j.value("fruits_max", s.fruits_max);
  s.fruit_radius_min = j.value("fruit_radius_min", s.fruit_radius_min);
  s.fruit_radius_max = j.value("fruit_radius_max", s.fruit_radius_max);
  s.leaves = j.value("leaves", s.leaves);
  s.leaf_radius_min = j.value("leaf_radius_min", s.leaf_radius_min);
  s.leaf_radius_max = j.value("leaf_radius_max", s.leaf_radius_max);
  s.occlusion = j.value("occlusion", s.occlusion);
  s.stem_radius = j.value("stem_radius", s.stem_radius);
  s.ground = j.value("ground", s.ground);
  s.seed = j.value("seed", s.seed);
  return s;
}

}  // namespace

void save_scene(std::ostream& out, const Scene& scene) {
  json prims = json::array();
  for (const auto& p : scene.primitives) {
    json jp{{"class", class_name(p.label)}, {"center", to_json(p.center)}, {"plant", p.plant}};
    switch (p.type) {
      case PrimitiveType::kEllipsoid:
        jp["type"] = "ellipsoid";
        jp["radii"] = to_json(p.radii);
        break;
      case PrimitiveType::kDisc:
        jp["type"] = "disc";
        jp["normal"] = to_json(p.normal);
        jp["radius"] = p.radius;
        break;
      case PrimitiveType::kCylinder:
        jp["type"] = "cylinder";
        jp["radius"] = p.radius;
        jp["height"] = p.height;
        break;
    }
    prims.push_back(std::move(jp));
  }
  json plants = json::array();
  for (const auto& pl : scene.plants) {
    plants.push_back({{"base", to_json(pl.base)},
                      {"height", pl.height},
                      {"bounds_min", to_json(pl.bounds.min)},
                      {"bounds_max", to_json(pl.bounds.max)}});
  }
  json doc{{"format", "nbv-scene"}, {"version", 1}, {"spec", spec_to_json(scene.spec)}, {"plants", plants},
           {"primitives", prims}};
  out << doc.dump(2) << '\n';
}

Scene load_scene(std::istream& in) {
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("scene file is not valid JSON: ") + e.what());
  }
  Scene scene;
  if (doc.contains("spec")) scene.spec = spec_from_json(doc["spec"]);
  for (const auto& jp : doc.at("primitives")) {
    const std::string type = jp.at("type");
    const int label = parse_class(jp.at("class").get<std::string>());
    const Vec3 c = vec_from(jp.at("center"));
    Primitive p;
    if (type == "ellipsoid") {
      p = Primitive::ellipsoid(c, vec_from(jp.at("radii")), label);
    } else if (type == "sphere") {
      p = Primitive::sphere(c, jp.at("radius").get<double>(), label);
    } else if (type == "disc") {
      const Vec3 n = vec_from(jp.at("normal"));
      p = Primitive::disc(c, n, jp.at("radius").get<double>(), label);
      // keep saved unit normals bit-exact
      if (std::abs(n.norm() - 1.0) < 1e-12) p.normal = n;
    } else if (type == "cylinder") {
      p = Primitive::cylinder(c, jp.at("radius").get<double>(), jp.at("height").get<double>(), label);
    } else {
      throw std::runtime_error("unknown primitive type: " + type);
    }
    p.plant = jp.value("plant", -1);
    scene.primitives.push_back(p);
  }
  if (doc.contains("plants")) {
    for (const auto& jpl : doc["plants"]) {
      Plant pl;
      pl.base = vec_from(jpl.at("base"));
      pl.height = jpl.at("height").get<double>();
      if (jpl.contains("bounds_min")) {
        pl.bounds.min = vec_from(jpl["bounds_min"]);
        pl.bounds.max = vec_from(jpl["bounds_max"]);
      }
      scene.plants.push_back(pl);
    }
  }
  return scene;
}

}  // namespace nbv
