#include "nbv/experiment.hpp"

#include "nbv/random.hpp"
#include "nbv/sensor.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace nbv {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Stream tags for derive_seed.
enum : std::uint64_t { kTagNoise = 1, kTagScanArc, kTagRandom, kTagResample, kTagFrontier, kTagSurface };

std::optional<WorkspaceModel> load_workspace(const ExperimentConfig& cfg) {
  const double tol = cfg.workspace_tolerance > 0.0 ? cfg.workspace_tolerance : 2.0 * cfg.resolution;
  if (cfg.workspace.empty() || cfg.workspace == "none") return std::nullopt;
  if (cfg.workspace.rfind("box:", 0) == 0) {
    std::stringstream ss(cfg.workspace.substr(4));
    double v[6];
    for (double& x : v) {
      std::string tok;
      if (!std::getline(ss, tok, ',')) throw std::invalid_argument("workspace box needs six numbers");
      x = std::stod(tok);
    }
    // Grid spacing that keeps every box point within the tolerance.
    return WorkspaceModel::from_box({Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5])}, tol, tol);
  }
  std::ifstream in(cfg.workspace);
  if (!in) throw std::runtime_error("cannot open workspace file: " + cfg.workspace);
  return WorkspaceModel::load_xyz(in, tol);
}

class Runner {
 public:
  Runner(const ExperimentConfig& cfg, const Scene& scene, std::uint64_t seed)
      : cfg_(cfg), scene_(scene), seed_(seed), map_(map_params(cfg)), workspace_(load_workspace(cfg)) {
    const auto surface = ground_truth_surface(scene, cfg.surface_density, derive_seed(scene.spec.seed, {kTagSurface}));
    truth_ = surface.with_label(kFruit);
    box_keys_ = keys_in_boxes(fruit_boxes(scene, cfg.resolution), cfg.resolution);
    settings_.camera = cfg.camera;
    settings_.rays = {cfg.resolution, cfg.cluster_size, cfg.dense_grid, cfg.sparse_grid};
    settings_.mode = cfg.sampling;
    settings_.trace.max_range = cfg.max_range;
    settings_.trace.visibility_cutoff = cfg.visibility_cutoff;
    log_.seed = seed;
    log_.scene_seed = scene.spec.seed;
    log_.planner = cfg.planner;
    log_.metric = cfg.metric;
  }

  ExperimentLog run() {
    for (std::size_t p = 0; p < scene_.plants.size(); ++p) {
      if (!run_station(p)) log_.status = "no_candidates";
    }
    return std::move(log_);
  }

 private:
  static MapParams map_params(const ExperimentConfig& cfg) {
    MapParams mp;
    mp.resolution = cfg.resolution;
    mp.max_range = cfg.max_range;
    mp.clear_no_return = true;
    return mp;
  }

  bool run_station(std::size_t p) {
    const Plant& plant = scene_.plants[p];
    Aabb region = plant.bounds;
    region.min.z() = std::max(region.min.z(), cfg_.ground_clearance);
    roi_ = plant.bounds.inflated(0.05);
    roi_.min.z() = std::max(roi_.min.z(), cfg_.ground_clearance);

    const int budget = cfg_.viewpoints_per_plant;
    const int n_init = cfg_.planner == PlannerKind::kPredefined ? budget : std::min(cfg_.initial_scan_count, budget);
    int executed = 0;
    if (n_init > 0) {
      Rng rng(derive_seed(seed_, {kTagScanArc, p}));
      double center = rng.uniform(0.0, 360.0);
      const double mid = aisle_y();
      if (cfg_.scan_face_aisle && std::abs(plant.base.y() - mid) > 1e-9) center = plant.base.y() < mid ? 90.0 : -90.0;
      const ScanArc arc{cfg_.scan_radius, center, cfg_.scan_arc_deg};
      for (const auto& pose : predefined_scan_poses(region, n_init, arc)) {
        execute(pose, 0.0);
        ++executed;
      }
    }
    int round = 0;
    while (executed < budget) {
      const auto t0 = Clock::now();
      const auto poses = plan_round(p, round++);
      const double plan_ms = cfg_.timing ? ms_since(t0) : 0.0;
      if (poses.empty()) return false;
      std::vector<Vec3> positions;
      for (const auto& pose : poses) positions.push_back(pose.position);
      const auto order = order_viewpoints_tsp(positions, position_.value_or(positions.front()));
      bool first = true;
      for (auto i : order) {
        if (executed == budget) break;
        execute(poses[i], first ? plan_ms : 0.0);
        first = false;
        ++executed;
      }
    }
    return true;
  }

  // Mean plant y; the line between rows when there are two.
  double aisle_y() const {
    double sum = 0.0;
    for (const auto& pl : scene_.plants) sum += pl.base.y();
    return scene_.plants.empty() ? 0.0 : sum / static_cast<double>(scene_.plants.size());
  }

  void filter(std::vector<ViewpointCandidate>& cands) {
    for (auto& c : cands) {
      if (c.pose.position.z() < cfg_.ground_clearance) c.status = ViewpointStatus::kFiltered;
    }
    if (workspace_) filter_workspace(cands, *workspace_);
    filter_clearance(cands, map_, cfg_.camera_clearance);
    if (cfg_.revisit_distance > 0.0) mark_executed(cands, executed_, cfg_.revisit_distance);
  }

  static std::size_t live_count(const std::vector<ViewpointCandidate>& cands) {
    return static_cast<std::size_t>(std::count_if(cands.begin(), cands.end(), [](const ViewpointCandidate& c) {
      return c.status != ViewpointStatus::kFiltered && c.status != ViewpointStatus::kExecuted;
    }));
  }

  std::vector<CameraPose> plan_round(std::size_t station, int round) {
    std::vector<Vec3> targets;
    for (const auto& c : classified_voxels(map_, kFruit)) {
      if (roi_.contains(c)) targets.push_back(c);
    }
    IgContext ctx(kFruit, cfg_.max_dist, std::make_shared<PointIndex>(targets, cfg_.max_dist),
                  default_confusion(map_.num_classes(), cfg_.p_gt));
    ctx.rs_seed = derive_seed(seed_, {kTagRandom, station, static_cast<std::uint64_t>(round)});

    std::vector<ViewpointCandidate> cands;
    const auto topk = static_cast<std::size_t>(cfg_.topk);
    if (cfg_.planner == PlannerKind::kFrontier) {
      const std::uint64_t s = derive_seed(seed_, {kTagFrontier, station, static_cast<std::uint64_t>(round)});
      cands = frontier_candidates(map_, ctx, static_cast<std::size_t>(cfg_.frontier_samples), s, cfg_.radius);
      for (auto& c : cands) {
        if (!roi_.contains(c.target)) c.status = ViewpointStatus::kFiltered;
      }
      filter(cands);
    } else {
      auto clusters = cluster_targets(targets, cfg_.dbscan_eps, cfg_.min_pts);
      if (clusters.empty()) {
        // Nothing detected yet: look at the middle of the plant.
        FruitCluster c;
        c.id = -1;
        c.centroid = roi_.center();
        clusters.push_back(c);
      }
      auto sample = [&](double radius) {
        std::vector<ViewpointCandidate> batch;
        for (const auto& cl : clusters) {
          auto s = sample_viewpoints(cl.centroid, radius, cfg_.n_theta, cfg_.n_phi, cl.id);
          batch.insert(batch.end(), s.begin(), s.end());
        }
        filter(batch);
        cands.insert(cands.end(), batch.begin(), batch.end());
      };
      sample(cfg_.radius);
      Rng jitter(derive_seed(seed_, {kTagResample, station, static_cast<std::uint64_t>(round)}));
      for (int attempt = 0; attempt < 3 && live_count(cands) < topk; ++attempt) {
        sample(cfg_.radius * jitter.uniform(0.9, 1.1));
      }
    }

    const auto t0 = Clock::now();
    std::size_t rays = 0;
    const auto best = select_best(cands, map_, cfg_.metric, ctx, topk, settings_, &rays);
    if (cfg_.timing) log_.ig_eval_ms += ms_since(t0);
    log_.candidates_evaluated += live_count(cands);
    rays_cast_ += rays;

    std::vector<CameraPose> poses;
    for (auto i : best) poses.push_back(cands[i].pose);
    return poses;
  }

  void execute(const CameraPose& pose, double plan_ms) {
    const auto t0 = Clock::now();
    const int idx = static_cast<int>(log_.samples.size());
    LabeledDepthImage obs = render(scene_, cfg_.camera, pose);
    if (cfg_.p_gt < 1.0) {
      obs = corrupt_labels(obs, cfg_.p_gt, derive_seed(seed_, {kTagNoise, static_cast<std::uint64_t>(idx)}),
                           map_.num_classes());
    }
    integrate_observation(map_, pose, obs, cfg_.camera);
    position_ = pose.position;
    executed_.push_back(pose.position);

    MetricSample s;
    s.viewpoint_idx = idx;
    s.map_ms = cfg_.timing ? ms_since(t0) : 0.0;
    s.plan_ms = plan_ms;
    s.rays_cast = rays_cast_;
    for (const auto& k : box_keys_) s.entropy_nats += map_.voxel_entropy(k);
    if (!truth_.empty()) {
      s.coverage = surface_coverage(classified_voxels(map_, kFruit), truth_, cfg_.resolution);
    }
    log_.samples.push_back(s);
    log_.poses.push_back(pose);
  }

  const ExperimentConfig& cfg_;
  const Scene& scene_;
  std::uint64_t seed_;
  SemanticOctree map_;
  std::optional<WorkspaceModel> workspace_;
  std::vector<Vec3> truth_;
  std::vector<VoxelKey> box_keys_;
  EvalSettings settings_;
  Aabb roi_;
  std::optional<Vec3> position_;
  std::vector<Vec3> executed_;
  std::size_t rays_cast_ = 0;
  ExperimentLog log_;
};

std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

Scene resolve_scene(const ExperimentConfig& cfg, std::uint64_t scene_seed) {
  if (!cfg.scene_file.empty()) {
    std::ifstream in(cfg.scene_file);
    if (!in) throw std::runtime_error("cannot open scene file: " + cfg.scene_file);
    return load_scene(in);
  }
  SceneSpec spec = cfg.scene;
  spec.seed = scene_seed;
  return generate_scene(spec);
}

ExperimentLog run_experiment(const ExperimentConfig& cfg, const Scene& scene, std::uint64_t seed) {
  cfg.validate();
  ExperimentLog log = Runner(cfg, scene, seed).run();
  log.run_id = cfg.label + "-s" + std::to_string(scene.spec.seed) + "-t" + std::to_string(seed);
  return log;
}

std::vector<ExperimentLog> run_all(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<std::uint64_t> scene_seeds = cfg.scene_seeds;
  if (scene_seeds.empty() || !cfg.scene_file.empty()) scene_seeds = {cfg.scene.seed};
  std::vector<ExperimentLog> logs;
  for (auto ss : scene_seeds) {
    const Scene scene = resolve_scene(cfg, ss);
    for (auto seed : cfg.seeds) logs.push_back(run_experiment(cfg, scene, seed));
  }
  return logs;
}

void write_csv(std::ostream& out, std::span<const ExperimentLog> logs) {
  out << "run_id,seed,planner,metric,viewpoint_idx,entropy_nats,coverage,rays_cast,map_ms,plan_ms\n";
  for (const auto& log : logs) {
    for (const auto& s : log.samples) {
      out << log.run_id << ',' << log.seed << ',' << to_string(log.planner) << ',' << to_string(log.metric) << ','
          << s.viewpoint_idx << ',' << format_fixed(s.entropy_nats, 6) << ',' << format_fixed(s.coverage, 6) << ','
          << s.rays_cast << ',' << format_fixed(s.map_ms, 3) << ',' << format_fixed(s.plan_ms, 3) << '\n';
    }
  }
}

void write_run_outputs(const ExperimentConfig& cfg, std::span<const ExperimentLog> logs) {
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream csv(std::filesystem::path(cfg.out_dir) / "runs.csv");
  write_csv(csv, logs);
  std::ofstream manifest(std::filesystem::path(cfg.out_dir) / "manifest.toml");
  write_config(manifest, cfg);
  if (!csv || !manifest) throw std::runtime_error("failed writing outputs to " + cfg.out_dir);
}

int viewpoints_to_coverage(const ExperimentLog& log, double threshold, int budget) {
  for (std::size_t i = 0; i < log.samples.size(); ++i) {
    if (log.samples[i].coverage >= threshold) return static_cast<int>(i) + 1;
  }
  return budget + 1;
}

int total_budget(const ExperimentConfig& cfg, const Scene& scene) {
  return cfg.viewpoints_per_plant * static_cast<int>(scene.plants.size());
}

MethodSummary summarize(const std::string& label, std::span<const ExperimentLog> logs, int budget) {
  MethodSummary m;
  m.label = label;
  m.runs = logs.size();
  if (logs.empty()) return m;
  std::size_t n = 0;
  for (const auto& l : logs) n = std::max(n, l.samples.size());
  m.entropy_mean.assign(n, 0.0);
  m.entropy_std.assign(n, 0.0);
  m.coverage_mean.assign(n, 0.0);
  m.coverage_std.assign(n, 0.0);
  auto at = [](const ExperimentLog& l, std::size_t i) -> const MetricSample& {
    return l.samples[std::min(i, l.samples.size() - 1)];
  };
  const double runs = static_cast<double>(logs.size());
  double vp80 = 0.0, cand = 0.0, ig_ms = 0.0;
  for (const auto& l : logs) {
    vp80 += viewpoints_to_coverage(l, 0.8, budget);
    cand += static_cast<double>(l.candidates_evaluated);
    ig_ms += l.ig_eval_ms;
    if (l.samples.empty()) continue;
    for (std::size_t i = 0; i < n; ++i) {
      m.entropy_mean[i] += at(l, i).entropy_nats / runs;
      m.coverage_mean[i] += at(l, i).coverage / runs;
    }
  }
  for (const auto& l : logs) {
    if (l.samples.empty()) continue;
    for (std::size_t i = 0; i < n; ++i) {
      m.entropy_std[i] += std::pow(at(l, i).entropy_nats - m.entropy_mean[i], 2) / runs;
      m.coverage_std[i] += std::pow(at(l, i).coverage - m.coverage_mean[i], 2) / runs;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    m.entropy_std[i] = std::sqrt(m.entropy_std[i]);
    m.coverage_std[i] = std::sqrt(m.coverage_std[i]);
  }
  if (n > 0) {
    m.final_coverage = m.coverage_mean.back();
    m.final_entropy = m.entropy_mean.back();
  }
  m.viewpoints_to_80 = vp80 / runs;
  m.ig_ms_per_candidate = cand > 0.0 ? ig_ms / cand : 0.0;
  return m;
}

void write_summary_csv(std::ostream& out, std::span<const MethodSummary> rows) {
  out << "method,runs,final_coverage,final_entropy_nats,viewpoints_to_80,ig_ms_per_candidate\n";
  for (const auto& r : rows) {
    out << r.label << ',' << r.runs << ',' << format_fixed(r.final_coverage, 6) << ','
        << format_fixed(r.final_entropy, 6) << ',' << format_fixed(r.viewpoints_to_80, 3) << ','
        << format_fixed(r.ig_ms_per_candidate, 4) << '\n';
  }
}

void write_svg_plot(std::ostream& out, const std::string& title, const std::string& y_label,
                    std::span<const MethodSummary> rows, bool coverage) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};
  constexpr double W = 640, H = 400, L = 60, R = 150, T = 30, B = 45;
  std::size_t n = 1;
  double y_max = coverage ? 1.0 : 0.0;
  for (const auto& r : rows) {
    const auto& ys = coverage ? r.coverage_mean : r.entropy_mean;
    n = std::max(n, ys.size());
    for (double y : ys) y_max = std::max(y_max, y);
  }
  if (!(y_max > 0.0)) y_max = 1.0;
  auto px = [&](double i) { return L + (W - L - R) * (n > 1 ? i / static_cast<double>(n - 1) : 0.0); };
  auto py = [&](double y) { return H - B - (H - T - B) * y / y_max; };
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n"
      << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\" font-size=\"12\">"
      << "viewpoints</text>\n"
      << "<text x=\"15\" y=\"" << (T + H - B) / 2 << "\" font-size=\"12\" transform=\"rotate(-90 15 "
      << (T + H - B) / 2 << ")\" text-anchor=\"middle\">" << y_label << "</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double y = y_max * t / 4.0;
    out << "<text x=\"" << L - 5 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\" font-size=\"10\">"
        << format_fixed(y, coverage ? 2 : 1) << "</text>\n";
  }
  out << "<text x=\"" << L << "\" y=\"" << H - B + 14 << "\" text-anchor=\"middle\" font-size=\"10\">1</text>\n"
      << "<text x=\"" << W - R << "\" y=\"" << H - B + 14 << "\" text-anchor=\"middle\" font-size=\"10\">" << n
      << "</text>\n";
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& ys = coverage ? rows[k].coverage_mean : rows[k].entropy_mean;
    const char* color = kColors[k % std::size(kColors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < ys.size(); ++i) {
      out << format_fixed(px(static_cast<double>(i)), 1) << ',' << format_fixed(py(ys[i]), 1) << ' ';
    }
    out << "\"/>\n";
    const double ly = T + 15.0 * static_cast<double>(k);
    out << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 30 << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << W - R + 35 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">" << rows[k].label
        << "</text>\n";
  }
  out << "</svg>\n";
}

std::vector<MethodSummary> compare_methods(std::span<const ExperimentConfig> configs, const std::string& out_dir) {
  if (configs.size() < 2) throw std::invalid_argument("compare needs at least two configurations");
  for (const auto& c : configs) {
    if (c.seeds != configs.front().seeds || c.scene_seeds != configs.front().scene_seeds ||
        c.scene.seed != configs.front().scene.seed) {
      throw std::invalid_argument("compared configurations must share scene and trial seeds");
    }
  }
  std::vector<MethodSummary> rows;
  std::vector<ExperimentLog> all;
  for (const auto& c : configs) {
    const auto logs = run_all(c);
    const Scene scene = resolve_scene(c, c.scene_seeds.empty() ? c.scene.seed : c.scene_seeds.front());
    rows.push_back(summarize(c.label, logs, total_budget(c, scene)));
    all.insert(all.end(), logs.begin(), logs.end());
  }
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  std::ofstream runs(dir / "runs.csv");
  write_csv(runs, all);
  std::ofstream summary(dir / "summary.csv");
  write_summary_csv(summary, rows);
  std::ofstream curves(dir / "curves.csv");
  curves << "method,viewpoint_idx,entropy_mean,entropy_std,coverage_mean,coverage_std\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.coverage_mean.size(); ++i) {
      curves << r.label << ',' << i << ',' << format_fixed(r.entropy_mean[i], 6) << ','
             << format_fixed(r.entropy_std[i], 6) << ',' << format_fixed(r.coverage_mean[i], 6) << ','
             << format_fixed(r.coverage_std[i], 6) << '\n';
    }
  }
  std::ofstream entropy_svg(dir / "entropy.svg");
  write_svg_plot(entropy_svg, "Fruit entropy", "entropy [nats]", rows, false);
  std::ofstream coverage_svg(dir / "coverage.svg");
  write_svg_plot(coverage_svg, "Fruit surface coverage", "coverage", rows, true);
  if (!runs || !summary || !curves || !entropy_svg || !coverage_svg) {
    throw std::runtime_error("failed writing comparison outputs to " + out_dir);
  }
  return rows;
}

}  // namespace nbv
