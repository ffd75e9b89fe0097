#include "nbv/semantic_map.hpp"

#include "nbv/raycast.hpp"

#include <algorithm>
#include <iomanip>
#include <limits>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace nbv {

SemanticOctree::SemanticOctree(MapParams params) : params_(params) {
  if (!(params_.resolution > 0.0)) throw std::invalid_argument("map resolution must be positive");
  if (params_.num_classes < 2 || params_.num_classes > kMaxClasses) {
    throw std::invalid_argument("number of classes must be in [2, " + std::to_string(kMaxClasses) + "]");
  }
  if (params_.target_class < 0 || params_.target_class >= params_.num_classes) {
    throw std::invalid_argument("target class out of range");
  }
  if (!(params_.max_range > 0.0)) throw std::invalid_argument("max range must be positive");
  if (!(params_.dirichlet_alpha > 0.0)) throw std::invalid_argument("Dirichlet prior must be positive");
}

const SemanticOctree::Block* SemanticOctree::find_block(const VoxelKey& bk) const {
  auto it = blocks_.find(bk);
  return it == blocks_.end() ? nullptr : it->second.get();
}

const SemanticVoxel* SemanticOctree::find(const VoxelKey& k) const {
  const Block* b = find_block(block_of(k));
  if (!b) return nullptr;
  const std::size_t i = index_in_block(k);
  return b->present[i] ? &b->voxels[i] : nullptr;
}

const SemanticVoxel* SemanticOctree::Reader::find(const VoxelKey& k) const {
  const VoxelKey bk = block_of(k);
  if (!has_cache_ || bk != cached_key_) {
    cached_ = map_->find_block(bk);
    cached_key_ = bk;
    has_cache_ = true;
  }
  if (!cached_) return nullptr;
  const std::size_t i = index_in_block(k);
  return cached_->present[i] ? &cached_->voxels[i] : nullptr;
}

SemanticVoxel& SemanticOctree::touch(const VoxelKey& k, bool* created) {
  auto& slot = blocks_[block_of(k)];
  if (!slot) slot = std::make_unique<Block>();
  const std::size_t i = index_in_block(k);
  SemanticVoxel& v = slot->voxels[i];
  const bool fresh = !slot->present[i];
  if (fresh) {
    slot->present.set(i);
    v.occ_logodds = 0.0;
    v.class_counts = ClassVector::Zero(params_.num_classes);
    v.last_update = 0;
    ++size_;
  }
  if (created) *created = fresh;
  return v;
}

void SemanticOctree::set_voxel(const VoxelKey& k, double occ_logodds, const ClassVector& counts) {
  if (counts.size() != params_.num_classes) throw std::invalid_argument("class count vector has wrong size");
  if ((counts.array() < 0.0).any()) throw std::invalid_argument("class counts must be non-negative");
  SemanticVoxel& v = touch(k);
  v.occ_logodds = std::clamp(occ_logodds, params_.sensor.log_min(), params_.sensor.log_max());
  v.class_counts = counts;
}

void SemanticOctree::apply_hit(const VoxelKey& k, int label, bool* created) {
  SemanticVoxel& v = touch(k, created);
  v.occ_logodds = std::min(v.occ_logodds + params_.sensor.log_hit(), params_.sensor.log_max());
  v.class_counts[label] += 1.0;
  v.last_update = sequence_;
}

void SemanticOctree::apply_miss(const VoxelKey& k, bool* created) {
  SemanticVoxel& v = touch(k, created);
  v.occ_logodds = std::max(v.occ_logodds + params_.sensor.log_miss(), params_.sensor.log_min());
  v.last_update = sequence_;
}

double SemanticOctree::occupancy(const VoxelKey& k) const {
  const SemanticVoxel* v = find(k);
  return v ? v->occupancy() : 0.5;
}

ClassVector SemanticOctree::class_distribution(const SemanticVoxel& v) const {
  const double alpha = params_.dirichlet_alpha;
  const double denom = params_.num_classes * alpha + v.class_counts.sum();
  return (v.class_counts.array() + alpha).matrix() / denom;
}

ClassVector SemanticOctree::class_distribution(const VoxelKey& k) const {
  if (const SemanticVoxel* v = find(k)) return class_distribution(*v);
  return ClassVector::Constant(params_.num_classes, 1.0 / params_.num_classes);
}

double SemanticOctree::voxel_entropy(const SemanticVoxel& v) const {
  return categorical_entropy(class_distribution(v));
}

double SemanticOctree::voxel_entropy(const VoxelKey& k) const {
  if (const SemanticVoxel* v = find(k)) return voxel_entropy(*v);
  return std::log(static_cast<double>(params_.num_classes));
}

std::optional<int> SemanticOctree::labeled_class(const SemanticVoxel& v) {
  if (!(v.class_counts.sum() > 0.0)) return std::nullopt;
  Eigen::Index best = 0;
  v.class_counts.maxCoeff(&best);  // first maximum wins
  return static_cast<int>(best);
}

std::vector<VoxelKey> SemanticOctree::sorted_keys() const {
  std::vector<VoxelKey> keys;
  keys.reserve(size_);
  for_each([&](const VoxelKey& k, const SemanticVoxel&) { keys.push_back(k); });
  std::sort(keys.begin(), keys.end());
  return keys;
}

namespace {

struct LabelVotes {
  std::array<int, kMaxClasses> votes{};
  Vec3 point_sum = Vec3::Zero();
  int points = 0;

  int majority(int num_classes) const {
    int best = 0;
    for (int c = 1; c < num_classes; ++c) {
      if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best)]) best = c;
    }
    return best;
  }
};

}  // namespace

UpdateStats integrate_observation(SemanticOctree& map, const CameraPose& pose, const LabeledDepthImage& obs,
                                  const CameraModel& cam) {
  cam.validate();
  if (!pose.is_orthonormal()) throw std::invalid_argument("camera rotation is not orthonormal");
  if (obs.width() != cam.width || obs.height() != cam.height) {
    throw std::invalid_argument("image size does not match camera model");
  }
  if (obs.label.rows() != obs.depth.rows() || obs.label.cols() != obs.depth.cols()) {
    throw std::invalid_argument("depth and label images differ in size");
  }

  const double res = map.resolution();
  const double max_range = map.params().max_range;
  const int num_classes = map.num_classes();
  const bool clear_no_return = map.params().clear_no_return;
  const Vec3& origin = pose.position;

  std::unordered_map<VoxelKey, LabelVotes, VoxelKeyHash> endpoints;
  std::unordered_set<VoxelKey, VoxelKeyHash> far_ends;

  for (int v = 0; v < obs.height(); ++v) {
    for (int u = 0; u < obs.width(); ++u) {
      const double d = obs.depth(v, u);
      const bool valid = LabeledDepthImage::valid(d);
      if (!valid && !clear_no_return) continue;
      const int label = obs.label(v, u);
      if (label < 0 || label >= num_classes) throw std::invalid_argument("pixel label out of range");
      const Vec3 ray_cam = cam.pixel_direction(u, v);
      const Vec3 p_cam = ray_cam * (valid ? d : std::numeric_limits<double>::infinity());
      if (valid && p_cam.norm() <= max_range) {
        const Vec3 p = pose.to_world(p_cam);
        auto& e = endpoints[map.key(p)];
        e.votes[static_cast<std::size_t>(label)]++;
        e.point_sum += p;
        ++e.points;
      } else {
        const Vec3 dir = pose.rotation * ray_cam.normalized();
        far_ends.insert(map.key(origin + dir * max_range));
      }
    }
  }

  std::unordered_set<VoxelKey, VoxelKeyHash> freed;
  auto carve = [&](const VoxelKey& end, const Vec3& target, bool include_end) {
    const Vec3 delta = target - origin;
    const double length = delta.norm();
    if (length <= 0.0) return;
    walk_cells(origin, delta / length, length, res, [&](const VoxelKey& k, double, double) {
      if (k == end) {
        if (include_end) freed.insert(k);
        return false;
      }
      freed.insert(k);
      return true;
    });
  };
  for (const auto& [k, e] : endpoints) carve(k, e.point_sum / e.points, false);
  for (const auto& k : far_ends) carve(k, map.center(k), true);

  UpdateStats stats;
  if (endpoints.empty() && freed.empty()) return stats;
  map.advance_sequence();
  for (const auto& k : freed) {
    if (endpoints.contains(k)) continue;
    bool created = false;
    map.apply_miss(k, &created);
    ++stats.misses;
    stats.new_voxels += created ? 1 : 0;
  }
  for (const auto& [k, votes] : endpoints) {
    bool created = false;
    map.apply_hit(k, votes.majority(num_classes), &created);
    ++stats.hits;
    stats.new_voxels += created ? 1 : 0;
  }
  return stats;
}

std::vector<Vec3> classified_voxels(const SemanticOctree& map, int cls, double p_o_min) {
  if (cls < 0 || cls >= map.num_classes()) throw std::invalid_argument("class index out of range");
  std::vector<VoxelKey> keys;
  map.for_each([&](const VoxelKey& k, const SemanticVoxel& v) {
    if (v.occupancy() < p_o_min) return;
    Eigen::Index best = 0;
    map.class_distribution(v).maxCoeff(&best);
    if (best == cls) keys.push_back(k);
  });
  std::sort(keys.begin(), keys.end());
  std::vector<Vec3> centers;
  centers.reserve(keys.size());
  for (const auto& k : keys) centers.push_back(map.center(k));
  return centers;
}

void save_map(std::ostream& out, const SemanticOctree& map) {
  out << "semmap v1 resolution=" << std::setprecision(17) << map.resolution() << " K=" << map.num_classes()
      << "\n";
  for (const auto& k : map.sorted_keys()) {
    const SemanticVoxel* v = map.find(k);
    out << k.x << ' ' << k.y << ' ' << k.z << ' ' << v->occ_logodds;
    for (Eigen::Index c = 0; c < v->class_counts.size(); ++c) out << ' ' << v->class_counts[c];
    out << '\n';
  }
}

SemanticOctree load_map(std::istream& in, MapParams defaults) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty map stream");
  std::istringstream header(line);
  std::string magic, version, res_field, k_field;
  header >> magic >> version >> res_field >> k_field;
  if (magic != "semmap" || version != "v1" || !res_field.starts_with("resolution=") || !k_field.starts_with("K=")) {
    throw std::runtime_error("bad map header: " + line);
  }
  defaults.resolution = std::stod(res_field.substr(11));
  defaults.num_classes = std::stoi(k_field.substr(2));
  if (defaults.target_class >= defaults.num_classes) defaults.target_class = 0;
  SemanticOctree map(defaults);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    VoxelKey k;
    double l = 0.0;
    ClassVector counts(map.num_classes());
    row >> k.x >> k.y >> k.z >> l;
    for (int c = 0; c < map.num_classes(); ++c) row >> counts[c];
    if (!row) throw std::runtime_error("malformed voxel at line " + std::to_string(line_no));
    map.set_voxel(k, l, counts);
  }
  return map;
}

void write_ply(std::ostream& out, std::span<const Vec3> points, std::span<const int> classes) {
  if (classes.size() != points.size()) throw std::invalid_argument("one class id per point required");
  out << "ply\nformat ascii 1.0\nelement vertex " << points.size()
      << "\nproperty double x\nproperty double y\nproperty double z\nproperty int class\nend_header\n";
  out << std::setprecision(9);
  for (std::size_t i = 0; i < points.size(); ++i) {
    out << points[i].x() << ' ' << points[i].y() << ' ' << points[i].z() << ' ' << classes[i] << '\n';
  }
}

}  // namespace nbv
