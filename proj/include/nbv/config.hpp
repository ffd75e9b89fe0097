#pragma once

#include "nbv/camera.hpp"
#include "nbv/metrics.hpp"
#include "nbv/raycast.hpp"
#include "nbv/scene.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace nbv {

enum class PlannerKind { kOurs, kFrontier, kPredefined };

PlannerKind parse_planner_kind(std::string_view name);
std::string_view to_string(PlannerKind kind);

/// Everything a run depends on. Defaults follow the evaluation parameter
/// table where one exists.
struct ExperimentConfig {
  std::string label = "run";

  SceneSpec scene;
  std::string scene_file;  ///< overrides `scene` when set
  CameraModel camera;

  double resolution = 0.015;
  double max_range = 1.0;
  double p_gt = 0.7;
  double cluster_size = 0.1;
  double radius = 0.4;
  int n_phi = 10;
  int n_theta = 5;
  double max_dist = 0.1;
  double dbscan_eps = 0.05;
  int min_pts = 3;

  PlannerKind planner = PlannerKind::kOurs;
  IgMetric metric = IgMetric::kOsamcep;
  SamplingMode sampling = SamplingMode::kAdaptive;
  int dense_grid = 28;
  int sparse_grid = 6;
  double visibility_cutoff = 0.01;
  int topk = 3;
  int frontier_samples = 50;
  /// Candidates closer than this to an executed view are not proposed again.
  double revisit_distance = 0.05;
  /// Candidates this close to a mapped occupied voxel are dropped.
  double camera_clearance = 0.1;
  /// Candidates below this height are dropped.
  double ground_clearance = 0.05;
  /// "none", "box:xmin,ymin,zmin,xmax,ymax,zmax" or a path to an XYZ file.
  std::string workspace = "none";
  /// Workspace tolerance; 0 means twice the map resolution.
  double workspace_tolerance = 0.0;

  int viewpoints_per_plant = 30;
  int initial_scan_count = 4;
  double scan_radius = 0.45;
  double scan_arc_deg = 360.0;
  /// Center each plant's scan arc on the aisle between rows instead of a
  /// random azimuth. Single-row scenes keep the random center.
  bool scan_face_aisle = false;

  double surface_density = 20000.0;
  std::vector<std::uint64_t> seeds = {1};
  /// Scene seeds to sweep; empty means just `scene.seed`.
  std::vector<std::uint64_t> scene_seeds;
  std::string out_dir = "out";
  /// Record wall-clock phase times. Off by default so CSVs are reproducible.
  bool timing = false;

  /// Throws std::invalid_argument naming the first bad field.
  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Sets `section.key` from its text form. Throws std::invalid_argument for
/// unknown keys or unparsable values.
void set_config_value(ExperimentConfig& cfg, std::string_view dotted_key, std::string_view value);

/// TOML-style `[section]` headers and `key = value` lines; `#` starts a
/// comment, strings may be quoted, lists are comma separated (optionally in
/// brackets). Unknown keys are errors.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Writes every key; parsing the output reproduces `cfg` exactly.
void write_config(std::ostream& out, const ExperimentConfig& cfg);

}  // namespace nbv
