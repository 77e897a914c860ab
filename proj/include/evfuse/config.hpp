#pragma once

#include <string>
#include <vector>

#include "evfuse/eval.hpp"
#include "evfuse/pipeline.hpp"

namespace evfuse {

struct EvalConfig {
  double max_depth = 1e9;
  BadPixThresholds bad_pix;
  std::vector<double> pr_thresholds{0.05, 0.1, 0.2, 0.3, 0.5, 1.0};
  double max_gt_skew = 0.05;
};

// Reconstruction run description. JSON keys (all optional unless noted):
//
// {
//   "events": ["cam0.txt", "cam1.txt"],      // required, calibration order
//   "event_format": "text" | "binary",
//   "timestamps_us": false,
//   "trajectory": "traj.txt",                // required, TUM format
//   "calibration": "calib.json",             // required
//   "packet": {"count": 20000} | {"duration": 0.2},
//   "z_min": 1.0, "z_max": 4.0, "nz": 100,
//   "sampling": "inverse_depth" | "linear",
//   "scheme": "Hc*At", "ns": 1, "split": "equal_count" | "equal_time",
//   "shuffle": "off" | "cyclic" | "seeded", "seed": 0,
//   "agt": {"kernel": 5, "offset": -10},
//   "median": {"enabled": true, "kernel": 5},
//   "morph_fill": false,
//   "robust_max": {"percentile": 98, "mode": "two_pass" | "streaming"},
//   "subvoxel": false, "clamp_trajectory": false,
//   "ref_camera": {"width":.., "height":.., "fx":.., "fy":.., "cx":.., "cy":..},
//   "eval": {"max_depth": 10, "bad_pix_abs": 0.3, "bad_pix_rel": 0.05,
//            "pr_thresholds": [..], "max_gt_skew": 0.05},
//   "output": "out", "threads": 1
// }
struct PipelineConfig {
  std::vector<std::string> event_paths;
  bool binary_events = false;
  bool timestamps_us = false;
  std::string trajectory_path;
  std::string calibration_path;
  PipelineOptions options;
  EvalConfig eval;
  std::string output_dir = "out";
};

// Rejects unknown keys and invalid values with kConfig. Input paths are
// only required by Validate(..., true).
PipelineConfig ParsePipelineConfig(const std::string& json_text);
PipelineConfig ReadPipelineConfigFile(const std::string& path);

// Canonical JSON (fixed key order); the run manifest hashes this text.
std::string PipelineConfigToJson(const PipelineConfig& config);

void ValidatePipelineConfig(const PipelineConfig& config, bool require_inputs);

ShuffleMode ParseShuffleMode(const std::string& text);
const char* ShuffleModeName(ShuffleMode mode);

}  // namespace evfuse
