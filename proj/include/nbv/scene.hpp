#pragma once

#include "nbv/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nbv {

enum class PrimitiveType { kEllipsoid, kDisc, kCylinder };

/// Labeled analytic solid.
///  - ellipsoid: `center`, axis-aligned semi-axes `radii` (fruits)
///  - disc: `center`, unit `normal`, `radius` (leaves, ground)
///  - cylinder: vertical, base at `center`, `radius`, `height`, capped (stems)
struct Primitive {
  PrimitiveType type = PrimitiveType::kEllipsoid;
  int label = kBackground;
  Vec3 center = Vec3::Zero();
  Vec3 radii = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double radius = 0.0;
  double height = 0.0;
  int plant = -1;  ///< owning plant, -1 for shared geometry

  static Primitive sphere(const Vec3& c, double r, int label);
  static Primitive ellipsoid(const Vec3& c, const Vec3& radii, int label);
  static Primitive disc(const Vec3& c, const Vec3& normal, double r, int label);
  static Primitive cylinder(const Vec3& base, double r, double h, int label);

  /// Smallest s > min_s with origin + s * dir on the surface, or nullopt.
  /// `dir` need not be unit length; s is measured in units of `dir`.
  std::optional<double> intersect(const Vec3& origin, const Vec3& dir, double min_s = 1e-9) const;

  Aabb bounds() const;
  /// Center and radius of a sphere enclosing the primitive.
  std::pair<Vec3, double> bounding_sphere() const;
  /// Distance-like residual: zero when `p` is on the surface.
  double surface_residual(const Vec3& p) const;
  double surface_area() const;
};

struct SceneSpec {
  int plants = 1;
  int rows = 1;
  double row_spacing = 1.0;
  double plant_spacing = 0.6;
  double plant_height = 0.8;
  int fruits_min = 3;
  int fruits_max = 6;
  double fruit_radius_min = 0.03;
  double fruit_radius_max = 0.045;
  int leaves = 16;
  double leaf_radius_min = 0.03;
  double leaf_radius_max = 0.06;
  /// 0 disables dedicated occluding leaves; larger values grow them.
  double occlusion = 0.5;
  double stem_radius = 0.008;
  bool ground = true;
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument on non-positive dimensions or ranges.
  void validate() const;

  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

struct Plant {
  Vec3 base = Vec3::Zero();
  double height = 0.0;
  Aabb bounds;  ///< union of the plant's primitives
};

struct Scene {
  SceneSpec spec;
  std::vector<Primitive> primitives;
  std::vector<Plant> plants;

  std::vector<const Primitive*> fruits() const;
};

/// Procedural rows of plants: a stem, fruits hanging near it, random
/// leaves, and (when occlusion > 0) one leaf in front of every fruit.
/// Pure function of the spec, including its seed.
Scene generate_scene(const SceneSpec& spec);

std::string_view class_name(int label);
int parse_class(std::string_view name);

/// JSON scene file: {"spec": {...}, "plants": [...], "primitives": [...]}.
void save_scene(std::ostream& out, const Scene& scene);
Scene load_scene(std::istream& in);

}  // namespace nbv
