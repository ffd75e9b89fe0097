#include "nbv/planner.hpp"

#include "nbv/random.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

namespace nbv {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

}  // namespace

std::vector<int> dbscan_labels(std::span<const Vec3> points, double eps, int min_pts) {
  if (!(eps > 0.0)) throw std::invalid_argument("DBSCAN eps must be positive");
  if (min_pts < 1) throw std::invalid_argument("DBSCAN min_pts must be at least 1");
  constexpr int kUnset = -2;
  constexpr int kNoise = -1;
  std::vector<int> label(points.size(), kUnset);
  if (points.empty()) return label;

  const PointIndex index(points, eps);
  const auto min_count = static_cast<std::size_t>(min_pts);
  int next = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (label[i] != kUnset) continue;
    auto seeds = index.within(points[i], eps);
    if (seeds.size() < min_count) {
      label[i] = kNoise;
      continue;
    }
    const int c = next++;
    label[i] = c;
    std::deque<std::size_t> queue(seeds.begin(), seeds.end());
    while (!queue.empty()) {
      const std::size_t j = queue.front();
      queue.pop_front();
      if (label[j] == kNoise) label[j] = c;
      if (label[j] != kUnset) continue;
      label[j] = c;
      auto nb = index.within(points[j], eps);
      if (nb.size() >= min_count) queue.insert(queue.end(), nb.begin(), nb.end());
    }
  }
  return label;
}

std::vector<FruitCluster> cluster_targets(std::span<const Vec3> points, double eps, int min_pts) {
  const auto labels = dbscan_labels(points, eps, min_pts);
  const int n = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<FruitCluster> clusters(static_cast<std::size_t>(std::max(n, 0)));
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (labels[i] < 0) continue;
    auto& c = clusters[static_cast<std::size_t>(labels[i])];
    c.members.push_back(points[i]);
    c.bounds.extend(points[i]);
  }
  for (int id = 0; id < n; ++id) {
    auto& c = clusters[static_cast<std::size_t>(id)];
    c.id = id;
    Vec3 sum = Vec3::Zero();
    for (const auto& p : c.members) sum += p;
    c.centroid = sum / static_cast<double>(c.members.size());
  }
  return clusters;
}

std::vector<ViewpointCandidate> sample_viewpoints(const Vec3& centroid, double radius, int n_theta, int n_phi,
                                                  int cluster_id) {
  if (!(radius > 0.0)) throw std::invalid_argument("sampling radius must be positive");
  if (n_theta < 1 || n_phi < 1) throw std::invalid_argument("sample counts must be at least 1");
  std::vector<ViewpointCandidate> out;
  out.reserve(static_cast<std::size_t>(n_theta * n_phi));
  for (int i = 0; i < n_theta; ++i) {
    const double theta = (n_theta == 1 ? 30.0 : 30.0 + 120.0 * i / (n_theta - 1)) * kDeg;
    for (int j = 0; j < n_phi; ++j) {
      const double phi = 360.0 * j / n_phi * kDeg;
      const Vec3 offset(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
      ViewpointCandidate c;
      c.pose = CameraPose::look_at(centroid + radius * offset, centroid);
      c.target = centroid;
      c.cluster_id = cluster_id;
      out.push_back(c);
    }
  }
  return out;
}

WorkspaceModel::WorkspaceModel(std::vector<Vec3> points, double tolerance) : tolerance_(tolerance) {
  if (points.empty()) throw std::invalid_argument("workspace must not be empty");
  if (!(tolerance > 0.0)) throw std::invalid_argument("workspace tolerance must be positive");
  index_ = PointIndex(points, std::max(tolerance, 1e-3));
}

WorkspaceModel WorkspaceModel::from_box(const Aabb& box, double spacing, double tolerance) {
  if (box.empty()) throw std::invalid_argument("workspace box is empty");
  if (!(spacing > 0.0)) throw std::invalid_argument("workspace spacing must be positive");
  const Vec3 size = box.size();
  int n[3];
  for (int a = 0; a < 3; ++a) n[a] = static_cast<int>(std::floor(size[a] / spacing + 1e-9)) + 1;
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(n[0]) * n[1] * n[2]);
  for (int k = 0; k < n[2]; ++k) {
    for (int j = 0; j < n[1]; ++j) {
      for (int i = 0; i < n[0]; ++i) {
        Vec3 p = box.min + spacing * Vec3(i, j, k);
        pts.push_back(p.cwiseMin(box.max));
      }
    }
  }
  return WorkspaceModel(std::move(pts), tolerance);
}

WorkspaceModel WorkspaceModel::load_xyz(std::istream& in, double tolerance) {
  std::vector<Vec3> pts;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    double x = 0.0, y = 0.0, z = 0.0;
    if (!(ls >> x)) continue;
    if (!(ls >> y >> z)) throw std::runtime_error("workspace line " + std::to_string(lineno) + ": expected x y z");
    pts.emplace_back(x, y, z);
  }
  return WorkspaceModel(std::move(pts), tolerance);
}

std::size_t filter_workspace(std::vector<ViewpointCandidate>& candidates, const WorkspaceModel& ws) {
  std::size_t kept = 0;
  const double tol = ws.tolerance();
  for (auto& c : candidates) {
    if (c.status == ViewpointStatus::kFiltered || c.status == ViewpointStatus::kExecuted) continue;
    const Vec3 pos = c.pose.position;
    std::optional<Vec3> moved;
    if (ws.reachable(pos)) {
      ++kept;
      continue;
    }
    if (ws.reachable(pos, 2.0)) {
      moved = ws.nearest(pos);
    } else {
      const Vec3 to_target = c.target - pos;
      const double standoff = to_target.norm();
      const Vec3 dir = to_target / standoff;
      const double step = 0.5 * tol;
      for (double s = step; s <= 0.5 * standoff; s += step) {
        const Vec3 p = pos + s * dir;
        if (ws.reachable(p)) {
          moved = p;
          break;
        }
      }
    }
    if (moved && (*moved - c.target).norm() > 0.0) {
      c.pose = CameraPose::look_at(*moved, c.target);
      ++kept;
    } else {
      c.status = ViewpointStatus::kFiltered;
    }
  }
  return kept;
}

std::size_t mark_executed(std::vector<ViewpointCandidate>& candidates, std::span<const Vec3> executed,
                          double radius) {
  if (executed.empty()) return 0;
  const PointIndex index(executed, std::max(radius, 1e-3));
  std::size_t marked = 0;
  for (auto& c : candidates) {
    if (c.status == ViewpointStatus::kFiltered || c.status == ViewpointStatus::kExecuted) continue;
    if (index.any_within(c.pose.position, radius)) {
      c.status = ViewpointStatus::kExecuted;
      ++marked;
    }
  }
  return marked;
}

std::size_t filter_clearance(std::vector<ViewpointCandidate>& candidates, const SemanticOctree& map,
                             double clearance) {
  if (clearance <= 0.0) return 0;
  const double r2 = clearance * clearance;
  std::size_t marked = 0;
  for (auto& c : candidates) {
    if (c.status == ViewpointStatus::kFiltered) continue;
    const Vec3& p = c.pose.position;
    const VoxelKey lo = map.key(p - Vec3::Constant(clearance));
    const VoxelKey hi = map.key(p + Vec3::Constant(clearance));
    bool blocked = false;
    for (int x = lo.x; x <= hi.x && !blocked; ++x)
      for (int y = lo.y; y <= hi.y && !blocked; ++y)
        for (int z = lo.z; z <= hi.z && !blocked; ++z) {
          const VoxelKey k{x, y, z};
          if ((map.center(k) - p).squaredNorm() > r2) continue;
          const SemanticVoxel* v = map.find(k);
          blocked = v && v->occupancy() > 0.5;
        }
    if (blocked) {
      c.status = ViewpointStatus::kFiltered;
      ++marked;
    }
  }
  return marked;
}

std::vector<std::size_t> select_best(std::vector<ViewpointCandidate>& candidates, const SemanticOctree& map,
                                     IgMetric metric, const IgContext& ctx, std::size_t k,
                                     const EvalSettings& settings, std::size_t* rays_cast) {
  if (k < 1) throw std::invalid_argument("top-k must be at least 1");
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto& c = candidates[i];
    if (c.status == ViewpointStatus::kFiltered || c.status == ViewpointStatus::kExecuted) continue;
    if (metric == IgMetric::kRandom) {
      c.utility = random_utility(ctx.rs_seed, i);
    } else {
      const RayBundle bundle = generate_rays(settings.camera, c.pose, c.target, settings.rays, settings.mode);
      if (rays_cast) *rays_cast += bundle.directions.size();
      c.utility = evaluate_metric(metric, map, bundle, ctx, settings.trace, i);
    }
    c.status = ViewpointStatus::kEvaluated;
    live.push_back(i);
  }
  std::stable_sort(live.begin(), live.end(),
                   [&](std::size_t a, std::size_t b) { return candidates[a].utility > candidates[b].utility; });
  if (live.size() > k) live.resize(k);
  return live;
}

double path_length(std::span<const Vec3> points, const Vec3& start, std::span<const std::size_t> order) {
  double len = 0.0;
  Vec3 at = start;
  for (auto i : order) {
    len += (points[i] - at).norm();
    at = points[i];
  }
  return len;
}

namespace {

std::vector<std::size_t> held_karp(std::span<const Vec3> pts, const Vec3& start) {
  const std::size_t n = pts.size();
  const std::size_t full = (std::size_t{1} << n) - 1;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> cost((full + 1) * n, kInf);
  std::vector<std::uint8_t> parent((full + 1) * n, 0);
  auto at = [n](std::size_t mask, std::size_t j) { return mask * n + j; };
  for (std::size_t j = 0; j < n; ++j) cost[at(std::size_t{1} << j, j)] = (pts[j] - start).norm();
  for (std::size_t mask = 1; mask <= full; ++mask) {
    for (std::size_t j = 0; j < n; ++j) {
      const double base = cost[at(mask, j)];
      if (!(mask >> j & 1) || base == kInf) continue;
      for (std::size_t m = 0; m < n; ++m) {
        if (mask >> m & 1) continue;
        const std::size_t next = mask | (std::size_t{1} << m);
        const double c = base + (pts[m] - pts[j]).norm();
        if (c < cost[at(next, m)]) {
          cost[at(next, m)] = c;
          parent[at(next, m)] = static_cast<std::uint8_t>(j);
        }
      }
    }
  }
  std::size_t last = 0;
  for (std::size_t j = 1; j < n; ++j) {
    if (cost[at(full, j)] < cost[at(full, last)]) last = j;
  }
  std::vector<std::size_t> order(n);
  std::size_t mask = full;
  for (std::size_t pos = n; pos-- > 0;) {
    order[pos] = last;
    const std::size_t prev = parent[at(mask, last)];
    mask &= ~(std::size_t{1} << last);
    last = prev;
  }
  return order;
}

std::vector<std::size_t> nearest_neighbor_2opt(std::span<const Vec3> pts, const Vec3& start) {
  const std::size_t n = pts.size();
  std::vector<std::size_t> order;
  std::vector<bool> used(n, false);
  Vec3 at = start;
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t best = n;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j]) continue;
      const double d = (pts[j] - at).norm();
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    used[best] = true;
    order.push_back(best);
    at = pts[best];
  }
  auto p = [&](std::size_t pos) -> const Vec3& { return pts[order[pos]]; };
  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const Vec3& prev = i == 0 ? start : p(i - 1);
      for (std::size_t j = i + 1; j < n; ++j) {
        double delta = (prev - p(j)).norm() - (prev - p(i)).norm();
        if (j + 1 < n) delta += (p(i) - p(j + 1)).norm() - (p(j) - p(j + 1)).norm();
        if (delta < -1e-12) {
          std::reverse(order.begin() + static_cast<std::ptrdiff_t>(i), order.begin() + static_cast<std::ptrdiff_t>(j) + 1);
          improved = true;
        }
      }
    }
  }
  return order;
}

}  // namespace

std::vector<std::size_t> order_viewpoints_tsp(std::span<const Vec3> points, const Vec3& start) {
  if (points.empty()) return {};
  if (points.size() <= 12) return held_karp(points, start);
  return nearest_neighbor_2opt(points, start);
}

std::vector<VoxelKey> frontier_voxels(const SemanticOctree& map) {
  static constexpr int kFaces[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  std::vector<VoxelKey> out;
  SemanticOctree::Reader reader(map);
  map.for_each([&](const VoxelKey& k, const SemanticVoxel& v) {
    if (!(v.occupancy() < 0.5)) return;
    for (const auto& f : kFaces) {
      if (!reader.find({k.x + f[0], k.y + f[1], k.z + f[2]})) {
        out.push_back(k);
        return;
      }
    }
  });
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ViewpointCandidate> frontier_candidates(const SemanticOctree& map, const IgContext& ctx,
                                                    std::size_t n_samples, std::uint64_t seed, double radius) {
  if (n_samples < 1) throw std::invalid_argument("frontier sample count must be at least 1");
  if (!(radius > 0.0)) throw std::invalid_argument("frontier radius must be positive");
  const auto all = frontier_voxels(map);
  std::vector<VoxelKey> roi;
  if (const PointIndex* targets = ctx.targets(); targets && !targets->empty()) {
    for (const auto& k : all) {
      if (targets->any_within(map.center(k), std::nextafter(ctx.max_dist(), 0.0))) roi.push_back(k);
    }
  }
  const auto& pool = roi.empty() ? all : roi;
  std::vector<ViewpointCandidate> out;
  if (pool.empty()) return out;
  Rng rng(seed);
  out.reserve(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) {
    const Vec3 f = map.center(pool[rng.below(pool.size())]);
    const double z = rng.uniform(-1.0, 1.0);
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const Vec3 dir(rho * std::cos(phi), rho * std::sin(phi), z);
    ViewpointCandidate c;
    c.pose = CameraPose::look_at(f + radius * dir, f);
    c.target = f;
    c.cluster_id = -1;
    out.push_back(c);
  }
  return out;
}

std::vector<CameraPose> predefined_scan_poses(const Aabb& region, int n_poses, const ScanArc& arc) {
  if (n_poses < 1) throw std::invalid_argument("predefined scan needs at least one pose");
  if (region.empty() || !(region.size().z() > 0.0)) throw std::invalid_argument("scan region is degenerate");
  if (!(arc.radius > 0.0)) throw std::invalid_argument("scan radius must be positive");
  int heights = 1;
  for (int h = 1; h * h <= n_poses; ++h) {
    if (n_poses % h == 0) heights = h;
  }
  const int per_ring = n_poses / heights;
  const Vec3 c = region.center();
  std::vector<CameraPose> poses;
  poses.reserve(static_cast<std::size_t>(n_poses));
  for (int i = 0; i < heights; ++i) {
    const double z = region.min.z() + (i + 0.5) / heights * region.size().z();
    for (int j = 0; j < per_ring; ++j) {
      const double phi = (arc.center_deg + arc.span_deg * ((j + 0.5) / per_ring - 0.5)) * kDeg;
      const Vec3 eye(c.x() + arc.radius * std::cos(phi), c.y() + arc.radius * std::sin(phi), z);
      poses.push_back(CameraPose::look_at(eye, Vec3(c.x(), c.y(), z)));
    }
  }
  return poses;
}

}  // namespace nbv
