#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "evfuse/bench.hpp"
#include "evfuse/config.hpp"
#include "evfuse/error.hpp"
#include "evfuse/eval.hpp"
#include "evfuse/pipeline.hpp"

namespace evfuse::cli {

// 0 success, 1 configuration, 2 data, 3 numerical / geometry.
int ExitCodeFor(ErrorKind kind);

// Command-line values that take precedence over the config file.
struct ReconstructOverrides {
  std::optional<double> z_min;
  std::optional<double> z_max;
  std::optional<int> nz;
  std::optional<std::string> scheme;
  std::optional<int> ns;
  std::optional<std::string> split;
  std::optional<std::string> shuffle;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> packet_count;
  std::optional<double> packet_duration;
  std::optional<int> threads;
  std::optional<std::string> out;
};

void ApplyOverrides(PipelineConfig& config, const ReconstructOverrides& overrides);

// Reads the config and resolves its relative input paths against the
// config file's directory. The output directory stays relative to the
// working directory.
PipelineConfig LoadConfig(const std::string& config_path,
                          const ReconstructOverrides& overrides = {});

PipelineInputs LoadInputs(const PipelineConfig& config);

struct ReconstructSummary {
  std::size_t packets = 0;
  std::size_t points = 0;
  std::string manifest_path;
};

// Writes <out>/packet_NNNN/{depth.pfm, depth.png, confidence.pfm,
// confidence.png, points.ply[, dsi.bin]} and <out>/manifest.json. On
// failure the manifest is still written for the packets that finished,
// then the error is rethrown.
ReconstructSummary Reconstruct(const std::string& config_path,
                               const ReconstructOverrides& overrides = {},
                               bool dump_dsi = false);

// Writes events_<camera>.{txt,bin}, trajectory.txt, calibration.json,
// scene.json and a ready-to-run config.json into out_dir.
void Simulate(const std::string& scene_path, const std::string& out_dir, bool binary_events);

struct EvaluateOptions {
  std::string run_dir;
  std::optional<std::string> scene_path;    // simulation JSON, GT rendered per packet
  std::optional<std::string> gt_list_path;  // lines "t depth.pfm"
  std::optional<std::string> out_dir;       // defaults to run_dir
};

struct EvaluateSummary {
  MetricsReport aggregate;
  std::size_t packets_evaluated = 0;
  std::size_t packets_skipped = 0;
};

// metrics.json, metrics.txt and pr.csv.
EvaluateSummary Evaluate(const EvaluateOptions& options);

struct ProjectDsiOptions {
  std::optional<std::string> config_path;  // rebuild the packet's DSI
  std::size_t packet = 0;
  std::optional<std::string> dsi_path;     // or read a dsi.bin dump
  std::string out_dir = ".";
  ReconstructOverrides overrides;
};

// front.png (w x h), top.png (w x N_Z), side.png (N_Z x h), front.pfm.
void ProjectDsi(const ProjectDsiOptions& options);

// bench.csv and summary.txt.
BenchReport Bench(const std::string& out_dir, const BenchOptions& options);

}  // namespace evfuse::cli
