#pragma once

#include "nbv/config.hpp"
#include "nbv/eval.hpp"
#include "nbv/planner.hpp"
#include "nbv/scene.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace nbv {

struct ExperimentLog {
  std::string run_id;
  std::uint64_t scene_seed = 0;
  std::uint64_t seed = 0;
  PlannerKind planner = PlannerKind::kOurs;
  IgMetric metric = IgMetric::kOsamcep;
  std::vector<MetricSample> samples;
  std::vector<CameraPose> poses;  ///< executed views, parallel to samples
  /// "ok", or "no_candidates" when a station ran out of viewpoints early.
  std::string status = "ok";
  std::size_t candidates_evaluated = 0;
  double ig_eval_ms = 0.0;  ///< only measured with timing enabled
};

/// The scene a run uses: the scene file when configured, otherwise the
/// generated scene with its seed replaced by `scene_seed`.
Scene resolve_scene(const ExperimentConfig& cfg, std::uint64_t scene_seed);

/// One closed-loop run. Each plant is a station: a predefined scan of
/// `initial_scan_count` views (the whole budget for the predefined planner),
/// then planning rounds until `viewpoints_per_plant` views were executed
/// there. Every executed view yields one sample with entropy over all
/// ground-truth fruit boxes and coverage of all fruit surface points.
/// Pure function of (cfg, scene, seed) unless cfg.timing is set.
ExperimentLog run_experiment(const ExperimentConfig& cfg, const Scene& scene, std::uint64_t seed);

/// All scene seeds times all trial seeds of the config, in that order.
std::vector<ExperimentLog> run_all(const ExperimentConfig& cfg);

/// Header `run_id,seed,planner,metric,viewpoint_idx,entropy_nats,coverage,rays_cast,map_ms,plan_ms`
/// and one row per executed viewpoint.
void write_csv(std::ostream& out, std::span<const ExperimentLog> logs);

/// Writes runs.csv and manifest.toml into cfg.out_dir.
void write_run_outputs(const ExperimentConfig& cfg, std::span<const ExperimentLog> logs);

/// Number of executed views until coverage first reaches `threshold`, or
/// budget + 1 when it never does.
int viewpoints_to_coverage(const ExperimentLog& log, double threshold, int budget);

struct MethodSummary {
  std::string label;
  std::size_t runs = 0;
  std::vector<double> entropy_mean, entropy_std;
  std::vector<double> coverage_mean, coverage_std;
  double final_coverage = 0.0;
  double final_entropy = 0.0;
  double viewpoints_to_80 = 0.0;
  double ig_ms_per_candidate = 0.0;
};

/// Per-viewpoint mean and (population) std over runs. Runs that stopped
/// early carry their last value forward.
MethodSummary summarize(const std::string& label, std::span<const ExperimentLog> logs, int budget);

/// Runs every config (which must share scene and trial seeds), writes
/// summary.csv, curves.csv, entropy.svg and coverage.svg into `out_dir`
/// and returns the summaries. Throws std::invalid_argument on fewer than
/// two configs or mismatched seeds.
std::vector<MethodSummary> compare_methods(std::span<const ExperimentConfig> configs, const std::string& out_dir);

void write_summary_csv(std::ostream& out, std::span<const MethodSummary> rows);
void write_svg_plot(std::ostream& out, const std::string& title, const std::string& y_label,
                    std::span<const MethodSummary> rows, bool coverage);

/// Total viewpoint budget of a config on a scene.
int total_budget(const ExperimentConfig& cfg, const Scene& scene);

}  // namespace nbv
