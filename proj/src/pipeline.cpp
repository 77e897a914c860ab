#include "evfuse/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "evfuse/error.hpp"

namespace evfuse {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

struct StageError {
  std::size_t packet;
  std::string stage;
  ErrorKind kind;
  std::string message;
};

}  // namespace

PipelineResult RunPipeline(const PipelineInputs& inputs, const PipelineOptions& options,
                           const PacketCallback& on_packet) {
  const auto& cams = inputs.calibration.cameras;
  if (cams.empty()) throw Error(ErrorKind::kConfig, "calibration has no cameras");
  if (inputs.streams.size() != cams.size()) {
    throw Error(ErrorKind::kConfig, "expected one event stream per calibrated camera");
  }
  for (std::size_t c = 0; c < cams.size(); ++c) {
    if (inputs.streams[c].width != cams[c].model.width() ||
        inputs.streams[c].height != cams[c].model.height()) {
      throw Error(ErrorKind::kConfig, "event stream " + std::to_string(c) +
                                          " does not match the camera resolution");
    }
  }

  std::vector<UndistortionMap> undistort;
  undistort.reserve(cams.size());
  for (const auto& cam : cams) undistort.emplace_back(cam.model);
  const CameraModel ref_camera = options.ref_camera.value_or(cams[0].model.Pinhole());
  const bool by_count = std::holds_alternative<ByCount>(options.packets);
  const auto packets = Packetize(inputs.streams[0], options.packets);
  if (options.only_packet && *options.only_packet >= packets.size()) {
    throw Error(ErrorKind::kConfig, "packet index " + std::to_string(*options.only_packet) +
                                        " out of range (" + std::to_string(packets.size()) +
                                        " packets)");
  }

  PipelineResult result;
  RobustMaxAccumulator robust(options.robust_percentile);
  std::optional<StageError> failure;
  std::string stage;

  for (std::size_t p = 0; p < packets.size() && !failure; ++p) {
    if (options.only_packet && p != *options.only_packet) continue;
    const Packet& packet = packets[p];
    PacketOutput out;
    out.index = p;
    out.t_start = packet.t_start;
    out.t_end = packet.t_end;
    out.t_ref = 0.5 * (packet.events.front().t + packet.events.back().t);
    try {
      stage = "reference view";
      const Pose world_from_rig =
          inputs.trajectory.Interpolate(out.t_ref, options.clamp_trajectory);
      out.ref = {cams[0].WorldFromCamera(world_from_rig), ref_camera};

      SchemeInputs scheme_in;
      scheme_in.trajectory = &inputs.trajectory;
      scheme_in.ref = out.ref;
      scheme_in.grid = options.grid;
      scheme_in.sweep.threads = options.threads;
      scheme_in.sweep.clamp_trajectory = options.clamp_trajectory;
      scheme_in.fusion_threads = options.threads;
      const double slice_end =
          by_count ? std::nextafter(packet.t_end, std::numeric_limits<double>::infinity())
                   : packet.t_end;
      for (std::size_t c = 0; c < cams.size(); ++c) {
        const auto events = c == 0 ? packet.events
                                   : SliceByTime(inputs.streams[c].events, packet.t_start,
                                                 slice_end);
        out.event_counts.push_back(events.size());
        scheme_in.cameras.push_back({events, &undistort[c], cams[c].cam_from_rig});
      }

      stage = "dsi+fusion";
      SchemeResult fused = ApplyScheme(options.scheme, scheme_in);
      out.times.dsi = fused.dsi_seconds;
      out.times.fusion = fused.fusion_seconds;
      out.sweep_stats = std::move(fused.camera_stats);
      out.grids_built = fused.grids_built;
      out.warnings = std::move(fused.warnings);

      stage = "extract";
      const auto t_extract = Clock::now();
      out.dense = ExtractDepthConfidence(fused.fused, options.subvoxel);
      out.times.extract = Seconds(t_extract);
      robust.AddMap(out.dense.confidence);
      if (options.keep_grids) out.fused = std::move(fused.fused);

      if (options.streaming_robust_max) {
        stage = "post-process";
        const auto t_post = Clock::now();
        out.filtered = PostProcess(out.dense, robust.Value(), options.post);
        out.times.post = Seconds(t_post);
        if (on_packet) on_packet(out);
      }
    } catch (const Error& e) {
      failure = StageError{p, stage, e.kind(), e.what()};
      break;
    }
    result.packets.push_back(std::move(out));
  }

  result.robust_max = robust.Value();
  if (!options.streaming_robust_max) {
    for (auto& out : result.packets) {
      const auto t_post = Clock::now();
      out.filtered = PostProcess(out.dense, result.robust_max, options.post);
      out.times.post = Seconds(t_post);
      if (on_packet) on_packet(out);
    }
  }
  if (failure) {
    throw Error(failure->kind, "packet " + std::to_string(failure->packet) + ", stage " +
                                   failure->stage + ": " + failure->message);
  }
  return result;
}

}  // namespace evfuse
