#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "evfuse/calibration.hpp"
#include "evfuse/depth.hpp"
#include "evfuse/dsi.hpp"
#include "evfuse/events.hpp"
#include "evfuse/fusion.hpp"

namespace evfuse {

struct PipelineInputs {
  std::vector<EventStream> streams;  // one per calibration camera, same order
  Calibration calibration;
  Trajectory trajectory;             // world-from-rig
};

struct PipelineOptions {
  PacketMode packets = ByDuration{0.2};
  GridSpec grid;
  FusionScheme scheme;
  PostProcessOptions post;
  double robust_percentile = 98.0;
  bool streaming_robust_max = false;  // default: two passes over the packets
  bool subvoxel = false;
  bool clamp_trajectory = false;
  int threads = 1;
  std::optional<CameraModel> ref_camera;  // defaults to camera 0, pinhole
  bool keep_grids = false;
  std::optional<std::size_t> only_packet;  // process a single packet index
};

struct StageTimes {
  double dsi = 0.0;
  double fusion = 0.0;
  double extract = 0.0;
  double post = 0.0;
};

struct PacketOutput {
  std::size_t index = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  double t_ref = 0.0;
  ReferenceView ref;
  std::vector<std::size_t> event_counts;  // per camera
  std::vector<SweepStats> sweep_stats;    // per camera
  std::size_t grids_built = 0;
  DepthResult dense;     // before thresholding
  DepthResult filtered;  // after AGT / median / fill
  std::optional<DsiGrid> fused;
  StageTimes times;
  std::vector<std::string> warnings;
};

struct PipelineResult {
  std::vector<PacketOutput> packets;
  double robust_max = 0.0;
};

// Called once per finished packet, in packet order.
using PacketCallback = std::function<void(const PacketOutput&)>;

// Packets are cut on camera 0's stream; the other cameras contribute the
// events falling in the same time window. The reference view is camera 0 at
// the midpoint of its packet's first and last event. A failure is rethrown with packet index and stage in
// the message after all earlier packets have been finished and reported.
PipelineResult RunPipeline(const PipelineInputs& inputs, const PipelineOptions& options,
                           const PacketCallback& on_packet = {});

}  // namespace evfuse
