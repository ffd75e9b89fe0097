// Command-line front end: scene generation, closed-loop runs, comparisons
// and debug renders.

#include "nbv/config.hpp"
#include "nbv/experiment.hpp"
#include "nbv/scene.hpp"
#include "nbv/sensor.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace nbv;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> sampling, metric, planner;
  std::optional<int> topk, ntheta, nphi, initial_scan_count, viewpoints;
  std::optional<double> radius, p_gt;
  std::vector<std::string> sets;
  bool timing = false;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "Experiment config file");
  app->add_option("--seed", f.seed, "Trial seed (replaces run.seeds)");
  app->add_option("--out", f.out, "Output directory");
  app->add_option("--sampling", f.sampling, "adaptive, dense or sparse");
  app->add_option("--metric", f.metric, "rs, ae, uvc, uvpc, oae, mi or osamcep");
  app->add_option("--planner", f.planner, "ours, frontier or predefined");
  app->add_option("--topk", f.topk, "Viewpoints executed per planning round");
  app->add_option("--radius", f.radius, "Sampling sphere radius [m]");
  app->add_option("--ntheta", f.ntheta, "Elevation samples");
  app->add_option("--nphi", f.nphi, "Azimuth samples");
  app->add_option("--initial-scan-count", f.initial_scan_count, "Predefined views per plant before planning");
  app->add_option("--viewpoints", f.viewpoints, "Viewpoint budget per plant");
  app->add_option("--p-gt", f.p_gt, "Probability a mask keeps its true class");
  app->add_option("--set", f.sets, "Extra section.key=value override (repeatable)");
  app->add_flag("--timing", f.timing, "Record wall-clock phase times");
}

ExperimentConfig resolve(const CommonFlags& f) {
  ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  auto set = [&](const char* key, const std::string& v) { set_config_value(cfg, key, v); };
  if (f.seed) cfg.seeds = {*f.seed};
  if (f.out) cfg.out_dir = *f.out;
  if (f.sampling) set("planner.sampling", *f.sampling);
  if (f.metric) set("planner.metric", *f.metric);
  if (f.planner) set("planner.planner", *f.planner);
  if (f.topk) cfg.topk = *f.topk;
  if (f.radius) cfg.radius = *f.radius;
  if (f.ntheta) cfg.n_theta = *f.ntheta;
  if (f.nphi) cfg.n_phi = *f.nphi;
  if (f.initial_scan_count) cfg.initial_scan_count = *f.initial_scan_count;
  if (f.viewpoints) cfg.viewpoints_per_plant = *f.viewpoints;
  if (f.p_gt) cfg.p_gt = *f.p_gt;
  if (f.timing) cfg.timing = true;
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects section.key=value, got " + s);
    set(s.substr(0, eq).c_str(), s.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

Vec3 parse_vec(const std::string& s) {
  std::stringstream ss(s);
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    std::string tok;
    if (!std::getline(ss, tok, ',')) throw std::invalid_argument("expected x,y,z but got " + s);
    v[i] = std::stod(tok);
  }
  return v;
}

void write_pgm(const fs::path& path, const Eigen::Matrix<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& img,
               int max_value) {
  std::ofstream out(path, std::ios::binary);
  out << "P5\n" << img.cols() << ' ' << img.rows() << '\n' << max_value << '\n';
  for (Eigen::Index r = 0; r < img.rows(); ++r) {
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      const std::uint16_t v = img(r, c);
      if (max_value > 255) out.put(static_cast<char>(v >> 8));
      out.put(static_cast<char>(v & 0xff));
    }
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void print_summary(const std::vector<MethodSummary>& rows) {
  std::printf("%-24s %6s %10s %12s %8s %10s\n", "method", "runs", "coverage", "entropy", "vp80", "ig_ms");
  for (const auto& r : rows) {
    std::printf("%-24s %6zu %10.4f %12.3f %8.2f %10.4f\n", r.label.c_str(), r.runs, r.final_coverage,
                r.final_entropy, r.viewpoints_to_80, r.ig_ms_per_candidate);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Target-aware next-best-view simulator"};
  app.require_subcommand(1);

  CommonFlags gen_flags;
  auto* gen = app.add_subcommand("generate-scene", "Write a procedural scene and its fruit surface samples");
  add_common(gen, gen_flags);

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "Run the closed loop and write runs.csv and manifest.toml");
  add_common(run, run_flags);

  CommonFlags cmp_flags;
  std::string vary;
  auto* cmp = app.add_subcommand("compare", "Run variants of a config and write summary tables and plots");
  add_common(cmp, cmp_flags);
  cmp->add_option("--vary", vary, "section.key=v1,v2,... values to compare")->required();

  CommonFlags dbg_flags;
  std::string eye = "0.5,0,0.45", look = "0,0,0.45";
  auto* dbg = app.add_subcommand("render-debug", "Render one view to depth.pgm and label.pgm");
  add_common(dbg, dbg_flags);
  dbg->add_option("--eye", eye, "Camera position x,y,z");
  dbg->add_option("--look-at", look, "Point the camera looks at x,y,z");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) {
      ExperimentConfig cfg = resolve(gen_flags);
      const std::uint64_t scene_seed = gen_flags.seed.value_or(cfg.scene.seed);
      const Scene scene = resolve_scene(cfg, scene_seed);
      fs::create_directories(cfg.out_dir);
      std::ofstream js(fs::path(cfg.out_dir) / "scene.json");
      save_scene(js, scene);
      const auto surface = ground_truth_surface(scene, cfg.surface_density, scene_seed);
      std::ofstream ply(fs::path(cfg.out_dir) / "surface.ply");
      write_ply(ply, surface.points, surface.labels);
      std::printf("scene: %zu plants, %zu primitives, %zu fruits -> %s\n", scene.plants.size(),
                  scene.primitives.size(), scene.fruits().size(), cfg.out_dir.c_str());
    } else if (run->parsed()) {
      const ExperimentConfig cfg = resolve(run_flags);
      const auto logs = run_all(cfg);
      write_run_outputs(cfg, logs);
      for (const auto& l : logs) {
        const auto& last = l.samples.empty() ? MetricSample{} : l.samples.back();
        std::printf("%s: %zu views, coverage %.4f, entropy %.3f, status %s\n", l.run_id.c_str(), l.samples.size(),
                    last.coverage, last.entropy_nats, l.status.c_str());
      }
    } else if (cmp->parsed()) {
      const ExperimentConfig base = resolve(cmp_flags);
      const auto eq = vary.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--vary expects section.key=v1,v2,...");
      const std::string key = vary.substr(0, eq);
      std::vector<ExperimentConfig> configs;
      std::stringstream values(vary.substr(eq + 1));
      std::string v;
      while (std::getline(values, v, ',')) {
        ExperimentConfig c = base;
        set_config_value(c, key, v);
        c.label = v;
        c.validate();
        configs.push_back(c);
      }
      const auto rows = compare_methods(configs, base.out_dir);
      print_summary(rows);
      if (key == "planner.sampling") {
        const MethodSummary* dense = nullptr;
        const MethodSummary* adaptive = nullptr;
        for (const auto& r : rows) {
          if (r.label == "dense") dense = &r;
          if (r.label == "adaptive") adaptive = &r;
        }
        if (dense && adaptive && adaptive->ig_ms_per_candidate > 0.0) {
          std::printf("dense/adaptive IG time per candidate: %.2fx\n",
                      dense->ig_ms_per_candidate / adaptive->ig_ms_per_candidate);
        }
      }
    } else if (dbg->parsed()) {
      const ExperimentConfig cfg = resolve(dbg_flags);
      const Scene scene = resolve_scene(cfg, dbg_flags.seed.value_or(cfg.scene.seed));
      const CameraPose pose = CameraPose::look_at(parse_vec(eye), parse_vec(look));
      LabeledDepthImage obs = render(scene, cfg.camera, pose);
      if (cfg.p_gt < 1.0) obs = corrupt_labels(obs, cfg.p_gt, cfg.seeds.front());
      const double max_depth = cfg.camera.max_depth;
      Eigen::Matrix<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> depth(obs.height(), obs.width());
      Eigen::Matrix<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> label(obs.height(), obs.width());
      for (int r = 0; r < obs.height(); ++r) {
        for (int c = 0; c < obs.width(); ++c) {
          const double d = obs.depth(r, c);
          depth(r, c) = LabeledDepthImage::valid(d) ? static_cast<std::uint16_t>(std::lround(d / max_depth * 65535.0)) : 0;
          label(r, c) = static_cast<std::uint16_t>(obs.label(r, c) * 100);
        }
      }
      fs::create_directories(cfg.out_dir);
      write_pgm(fs::path(cfg.out_dir) / "depth.pgm", depth, 65535);
      write_pgm(fs::path(cfg.out_dir) / "label.pgm", label, 255);
      std::printf("wrote depth.pgm and label.pgm to %s\n", cfg.out_dir.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
