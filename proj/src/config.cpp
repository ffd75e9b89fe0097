#include "nbv/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace nbv {

PlannerKind parse_planner_kind(std::string_view name) {
  if (name == "ours") return PlannerKind::kOurs;
  if (name == "frontier") return PlannerKind::kFrontier;
  if (name == "predefined") return PlannerKind::kPredefined;
  throw std::invalid_argument("unknown planner: " + std::string(name));
}

std::string_view to_string(PlannerKind kind) {
  switch (kind) {
    case PlannerKind::kOurs:
      return "ours";
    case PlannerKind::kFrontier:
      return "frontier";
    case PlannerKind::kPredefined:
      return "predefined";
  }
  return "ours";
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return std::string(s.substr(1, s.size() - 2));
  }
  return std::string(s);
}

std::string quote(const std::string& s) { return "\"" + s + "\""; }

double to_double(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw std::invalid_argument("not a number: " + std::string(s));
  return v;
}

template <typename Int>
Int to_int(std::string_view s) {
  s = trim(s);
  Int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw std::invalid_argument("not an integer: " + std::string(s));
  return v;
}

bool to_bool(std::string_view s) {
  s = trim(s);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("not a boolean: " + std::string(s));
}

std::string fmt(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

std::vector<std::uint64_t> to_seed_list(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') throw std::invalid_argument("unterminated list");
    s = s.substr(1, s.size() - 2);
  }
  std::vector<std::uint64_t> out;
  while (!trim(s).empty()) {
    const auto comma = s.find(',');
    out.push_back(to_int<std::uint64_t>(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s = s.substr(comma + 1);
  }
  return out;
}

std::string seed_list(const std::vector<std::uint64_t>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s + "]";
}

struct Field {
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
};

#define NBV_DOUBLE(name, member) \
  Field { name, [](const ExperimentConfig& c) { return fmt(c.member); }, \
          [](ExperimentConfig& c, std::string_view v) { c.member = to_double(v); } }
#define NBV_INT(name, member) \
  Field { name, [](const ExperimentConfig& c) { return std::to_string(c.member); }, \
          [](ExperimentConfig& c, std::string_view v) { c.member = to_int<decltype(c.member)>(v); } }
#define NBV_BOOL(name, member) \
  Field { name, [](const ExperimentConfig& c) { return std::string(c.member ? "true" : "false"); }, \
          [](ExperimentConfig& c, std::string_view v) { c.member = to_bool(v); } }
#define NBV_STRING(name, member) \
  Field { name, [](const ExperimentConfig& c) { return quote(c.member); }, \
          [](ExperimentConfig& c, std::string_view v) { c.member = unquote(v); } }
#define NBV_ENUM(name, member, parse) \
  Field { name, [](const ExperimentConfig& c) { return quote(std::string(to_string(c.member))); }, \
          [](ExperimentConfig& c, std::string_view v) { c.member = parse(unquote(v)); } }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      NBV_STRING("run.label", label),
      NBV_INT("run.viewpoints_per_plant", viewpoints_per_plant),
      NBV_INT("run.initial_scan_count", initial_scan_count),
      Field{"run.seeds", [](const ExperimentConfig& c) { return seed_list(c.seeds); },
            [](ExperimentConfig& c, std::string_view v) { c.seeds = to_seed_list(v); }},
      Field{"run.scene_seeds", [](const ExperimentConfig& c) { return seed_list(c.scene_seeds); },
            [](ExperimentConfig& c, std::string_view v) { c.scene_seeds = to_seed_list(v); }},
      NBV_STRING("run.out", out_dir),
      NBV_BOOL("run.timing", timing),
      NBV_DOUBLE("run.surface_density", surface_density),

      NBV_STRING("scene.file", scene_file),
      NBV_INT("scene.plants", scene.plants),
      NBV_INT("scene.rows", scene.rows),
      NBV_DOUBLE("scene.row_spacing", scene.row_spacing),
      NBV_DOUBLE("scene.plant_spacing", scene.plant_spacing),
      NBV_DOUBLE("scene.plant_height", scene.plant_height),
      NBV_INT("scene.fruits_min", scene.fruits_min),
      NBV_INT("scene.fruits_max", scene.fruits_max),
      NBV_DOUBLE("scene.fruit_radius_min", scene.fruit_radius_min),
      NBV_DOUBLE("scene.fruit_radius_max", scene.fruit_radius_max),
      NBV_INT("scene.leaves", scene.leaves),
      NBV_DOUBLE("scene.leaf_radius_min", scene.leaf_radius_min),
      NBV_DOUBLE("scene.leaf_radius_max", scene.leaf_radius_max),
      NBV_DOUBLE("scene.occlusion", scene.occlusion),
      NBV_DOUBLE("scene.stem_radius", scene.stem_radius),
      NBV_BOOL("scene.ground", scene.ground),
      NBV_INT("scene.seed", scene.seed),

      NBV_INT("camera.width", camera.width),
      NBV_INT("camera.height", camera.height),
      NBV_DOUBLE("camera.fx", camera.fx),
      NBV_DOUBLE("camera.fy", camera.fy),
      NBV_DOUBLE("camera.cx", camera.cx),
      NBV_DOUBLE("camera.cy", camera.cy),
      NBV_DOUBLE("camera.max_depth", camera.max_depth),

      NBV_DOUBLE("map.resolution", resolution),
      NBV_DOUBLE("map.max_range", max_range),
      NBV_DOUBLE("noise.p_gt", p_gt),

      NBV_ENUM("planner.planner", planner, parse_planner_kind),
      NBV_ENUM("planner.metric", metric, parse_ig_metric),
      NBV_ENUM("planner.sampling", sampling, parse_sampling_mode),
      NBV_INT("planner.topk", topk),
      NBV_DOUBLE("planner.radius", radius),
      NBV_INT("planner.ntheta", n_theta),
      NBV_INT("planner.nphi", n_phi),
      NBV_DOUBLE("planner.cluster_size", cluster_size),
      NBV_DOUBLE("planner.max_dist", max_dist),
      NBV_DOUBLE("planner.dbscan_eps", dbscan_eps),
      NBV_INT("planner.min_pts", min_pts),
      NBV_INT("planner.dense_grid", dense_grid),
      NBV_INT("planner.sparse_grid", sparse_grid),
      NBV_DOUBLE("planner.visibility_cutoff", visibility_cutoff),
      NBV_INT("planner.frontier_samples", frontier_samples),
      NBV_DOUBLE("planner.revisit_distance", revisit_distance),
      NBV_DOUBLE("planner.camera_clearance", camera_clearance),
      NBV_DOUBLE("planner.ground_clearance", ground_clearance),
      NBV_STRING("planner.workspace", workspace),
      NBV_DOUBLE("planner.workspace_tolerance", workspace_tolerance),
      NBV_DOUBLE("planner.scan_radius", scan_radius),
      NBV_DOUBLE("planner.scan_arc_deg", scan_arc_deg),
      NBV_BOOL("planner.scan_face_aisle", scan_face_aisle),
  };
  return table;
}

#undef NBV_DOUBLE
#undef NBV_INT
#undef NBV_BOOL
#undef NBV_STRING
#undef NBV_ENUM

}  // namespace

void ExperimentConfig::validate() const {
  scene.validate();
  camera.validate();
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string(name) + " must be positive");
  };
  positive(resolution, "map.resolution");
  positive(max_range, "map.max_range");
  positive(cluster_size, "planner.cluster_size");
  positive(radius, "planner.radius");
  positive(max_dist, "planner.max_dist");
  positive(dbscan_eps, "planner.dbscan_eps");
  positive(visibility_cutoff, "planner.visibility_cutoff");
  positive(scan_radius, "planner.scan_radius");
  positive(scan_arc_deg, "planner.scan_arc_deg");
  positive(surface_density, "run.surface_density");
  if (!(p_gt >= 0.0 && p_gt <= 1.0)) throw std::invalid_argument("noise.p_gt must lie in [0, 1]");
  if (n_phi < 1 || n_theta < 1) throw std::invalid_argument("planner.nphi and planner.ntheta must be >= 1");
  if (min_pts < 1) throw std::invalid_argument("planner.min_pts must be >= 1");
  if (topk < 1) throw std::invalid_argument("planner.topk must be >= 1");
  if (dense_grid < 1 || sparse_grid < 1) throw std::invalid_argument("grid sizes must be >= 1");
  if (frontier_samples < 1) throw std::invalid_argument("planner.frontier_samples must be >= 1");
  if (camera_clearance < 0.0) throw std::invalid_argument("planner.camera_clearance must be >= 0");
  if (revisit_distance < 0.0) throw std::invalid_argument("planner.revisit_distance must be >= 0");
  if (workspace_tolerance < 0.0) throw std::invalid_argument("planner.workspace_tolerance must be >= 0");
  if (viewpoints_per_plant < 1) throw std::invalid_argument("run.viewpoints_per_plant must be >= 1");
  if (initial_scan_count < 0) throw std::invalid_argument("run.initial_scan_count must be >= 0");
  if (seeds.empty()) throw std::invalid_argument("run.seeds must not be empty");
}

void set_config_value(ExperimentConfig& cfg, std::string_view dotted_key, std::string_view value) {
  for (const auto& f : fields()) {
    if (dotted_key == f.key) {
      try {
        f.set(cfg, value);
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string(dotted_key) + ": " + e.what());
      }
      return;
    }
  }
  throw std::invalid_argument("unknown config key: " + std::string(dotted_key));
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string section;
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    // Strip comments outside quotes.
    bool quoted = false;
    std::size_t cut = raw.size();
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] == '"') quoted = !quoted;
      if (raw[i] == '#' && !quoted) {
        cut = i;
        break;
      }
    }
    const std::string_view line = trim(std::string_view(raw).substr(0, cut));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw std::invalid_argument(where + "bad section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument(where + "expected key = value");
    const std::string key = section + "." + std::string(trim(line.substr(0, eq)));
    try {
      set_config_value(cfg, key, line.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  return parse_config(in);
}

void write_config(std::ostream& out, const ExperimentConfig& cfg) {
  std::string section;
  for (const auto& f : fields()) {
    const std::string_view key(f.key);
    const auto dot = key.find('.');
    const std::string sec(key.substr(0, dot));
    if (sec != section) {
      out << (section.empty() ? "" : "\n") << '[' << sec << "]\n";
      section = sec;
    }
    out << key.substr(dot + 1) << " = " << f.get(cfg) << '\n';
  }
}

}  // namespace nbv
