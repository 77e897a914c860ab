#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "evfuse/calibration.hpp"
#include "evfuse/checksum.hpp"
#include "evfuse/depth.hpp"
#include "evfuse/dsi.hpp"
#include "evfuse/events.hpp"
#include "evfuse/image_io.hpp"
#include "evfuse/scene_io.hpp"
#include "evfuse/simulator.hpp"
#include "evfuse/trajectory_io.hpp"

namespace evfuse::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string Resolve(const fs::path& base, const std::string& path) {
  if (path.empty()) return path;
  const fs::path p(path);
  return p.is_absolute() ? path : (base / p).lexically_normal().string();
}

void MakeDirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create directory " + dir.string());
}

json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, path + ": " + e.what());
  }
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
}

json PoseJson(const Pose& pose) {
  const auto& q = pose.rotation;
  const auto& t = pose.translation;
  return {{"translation", {t.x(), t.y(), t.z()}}, {"rotation", {q.x(), q.y(), q.z(), q.w()}}};
}

Pose PoseFromJson(const json& j) {
  const auto t = j.at("translation").get<std::vector<double>>();
  const auto q = j.at("rotation").get<std::vector<double>>();
  if (t.size() != 3 || q.size() != 4) throw Error(ErrorKind::kParse, "malformed pose");
  return {Eigen::Quaterniond(q[3], q[0], q[1], q[2]), Eigen::Vector3d(t[0], t[1], t[2])};
}

json CameraJson(const CameraModel& m) {
  return {{"width", m.width()}, {"height", m.height()}, {"fx", m.fx()},
          {"fy", m.fy()},       {"cx", m.cx()},         {"cy", m.cy()}};
}

CameraModel CameraFromJson(const json& j) {
  return CameraModel(j.at("fx").get<double>(), j.at("fy").get<double>(),
                     j.at("cx").get<double>(), j.at("cy").get<double>(),
                     j.at("width").get<int>(), j.at("height").get<int>());
}

json OutputEntry(const fs::path& root, const fs::path& file) {
  return {{"file", fs::relative(file, root).generic_string()},
          {"sha256", Sha256File(file.string())}};
}

std::string PacketDirName(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "packet_%04zu", index);
  return buf;
}

// Depth with NaN outside the mask.
Image<float> MaskedDepth(const DepthResult& result) {
  Image<float> depth(result.depth.width(), result.depth.height(),
                     std::numeric_limits<float>::quiet_NaN());
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      if (result.Has(x, y)) depth(x, y) = result.depth(x, y);
    }
  }
  return depth;
}

void WriteProjections(const DsiGrid& grid, const fs::path& out_dir) {
  MakeDirs(out_dir);
  const DsiProjections proj = MaxProjections(grid);
  WritePngRgba((out_dir / "front.png").string(), PseudoColor(proj.front));
  WritePngRgba((out_dir / "top.png").string(), PseudoColor(proj.top));
  WritePngRgba((out_dir / "side.png").string(), PseudoColor(proj.side));
  WritePfm((out_dir / "front.pfm").string(), proj.front);
}

}  // namespace

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
      return 1;
    case ErrorKind::kParse:
    case ErrorKind::kOrdering:
    case ErrorKind::kOutOfBounds:
    case ErrorKind::kRange:
    case ErrorKind::kAlignment:
    case ErrorKind::kIo:
      return 2;
    case ErrorKind::kDistortion:
    case ErrorKind::kDegenerateGeometry:
    case ErrorKind::kDomain:
      return 3;
  }
  return 2;
}

void ApplyOverrides(PipelineConfig& config, const ReconstructOverrides& ov) {
  PipelineOptions& o = config.options;
  if (ov.z_min) o.grid.z_min = *ov.z_min;
  if (ov.z_max) o.grid.z_max = *ov.z_max;
  if (ov.nz) o.grid.num_planes = *ov.nz;
  if (ov.scheme) {
    const FusionScheme parsed = ParseSchemeString(*ov.scheme);
    o.scheme.camera_fn = parsed.camera_fn;
    o.scheme.time_fn = parsed.time_fn;
    o.scheme.order = parsed.order;
  }
  if (ov.ns) o.scheme.num_subintervals = *ov.ns;
  if (ov.split) o.scheme.split = ParseSplit(*ov.split);
  if (ov.shuffle) o.scheme.shuffle = ParseShuffleMode(*ov.shuffle);
  if (ov.seed) o.scheme.seed = *ov.seed;
  if (ov.packet_count && ov.packet_duration) {
    throw Error(ErrorKind::kConfig, "--packet-count and --packet-duration are exclusive");
  }
  if (ov.packet_count) o.packets = ByCount{*ov.packet_count};
  if (ov.packet_duration) o.packets = ByDuration{*ov.packet_duration};
  if (ov.threads) o.threads = *ov.threads;
  if (ov.out) config.output_dir = *ov.out;
}

PipelineConfig LoadConfig(const std::string& config_path, const ReconstructOverrides& overrides) {
  PipelineConfig config = ReadPipelineConfigFile(config_path);
  ApplyOverrides(config, overrides);
  ValidatePipelineConfig(config, true);
  const fs::path base = fs::path(config_path).parent_path();
  for (auto& p : config.event_paths) p = Resolve(base, p);
  config.trajectory_path = Resolve(base, config.trajectory_path);
  config.calibration_path = Resolve(base, config.calibration_path);
  return config;
}

PipelineInputs LoadInputs(const PipelineConfig& config) {
  PipelineInputs inputs;
  inputs.calibration = ReadCalibrationFile(config.calibration_path);
  const auto& cams = inputs.calibration.cameras;
  if (config.event_paths.size() != cams.size()) {
    throw Error(ErrorKind::kConfig, std::to_string(config.event_paths.size()) +
                                        " event files for " + std::to_string(cams.size()) +
                                        " calibrated cameras");
  }
  for (std::size_t c = 0; c < cams.size(); ++c) {
    const auto& path = config.event_paths[c];
    const int w = cams[c].model.width();
    const int h = cams[c].model.height();
    if (config.binary_events) {
      std::ifstream in(path, std::ios::binary);
      if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
      inputs.streams.push_back(ReadEventBinary(in, w, h, cams[c].id));
    } else {
      EventParseOptions opts;
      opts.microsecond_timestamps = config.timestamps_us;
      opts.camera_id = cams[c].id;
      inputs.streams.push_back(ReadEventTextFile(path, w, h, opts));
    }
  }
  inputs.trajectory = ReadTrajectoryFile(config.trajectory_path);
  return inputs;
}

ReconstructSummary Reconstruct(const std::string& config_path,
                               const ReconstructOverrides& overrides, bool dump_dsi) {
  // The hash covers the config as given plus overrides, before paths are
  // resolved, so it does not depend on the working directory.
  PipelineConfig as_given = ReadPipelineConfigFile(config_path);
  ApplyOverrides(as_given, overrides);
  ValidatePipelineConfig(as_given, true);
  const std::string canonical = PipelineConfigToJson(as_given);

  PipelineConfig config = LoadConfig(config_path, overrides);
  config.options.keep_grids = dump_dsi;
  const fs::path root(config.output_dir);
  MakeDirs(root);

  json manifest;
  manifest["tool"] = "evfuse";
  manifest["config_sha256"] = Sha256Hex(canonical);
  manifest["config"] = json::parse(canonical);
  json inputs_json = json::array();
  for (const auto& p : config.event_paths) {
    inputs_json.push_back({{"role", "events"}, {"path", p}, {"sha256", Sha256File(p)}});
  }
  inputs_json.push_back({{"role", "trajectory"},
                         {"path", config.trajectory_path},
                         {"sha256", Sha256File(config.trajectory_path)}});
  inputs_json.push_back({{"role", "calibration"},
                         {"path", config.calibration_path},
                         {"sha256", Sha256File(config.calibration_path)}});
  manifest["inputs"] = inputs_json;

  ReconstructSummary summary;
  json packets = json::array();
  const auto write_manifest = [&](const std::optional<Error>& error, double robust_max) {
    manifest["robust_max"] = robust_max;
    manifest["packets"] = packets;
    if (error) {
      manifest["status"] = "failed";
      manifest["error"] = {{"kind", ErrorKindName(error->kind())}, {"message", error->what()}};
    } else {
      manifest["status"] = "ok";
    }
    summary.manifest_path = (root / "manifest.json").string();
    WriteText(root / "manifest.json", manifest.dump(2) + "\n");
  };

  const auto on_packet = [&](const PacketOutput& out) {
    const auto t_write = std::chrono::steady_clock::now();
    const fs::path dir = root / PacketDirName(out.index);
    MakeDirs(dir);
    const DepthResult& f = out.filtered;
    WritePfm((dir / "depth.pfm").string(), MaskedDepth(f));
    WritePngRgba((dir / "depth.png").string(), ColorizeDepth(f, f.z_min, f.z_max));
    WritePfm((dir / "confidence.pfm").string(), out.dense.confidence);
    WritePngGray((dir / "confidence.png").string(), NegatedConfidence(out.dense.confidence));
    WritePlyAscii((dir / "points.ply").string(), ToPointCloud(f, out.ref));
    json outputs = json::array();
    for (const char* name :
         {"depth.pfm", "depth.png", "confidence.pfm", "confidence.png", "points.ply"}) {
      outputs.push_back(OutputEntry(root, dir / name));
    }
    if (out.fused) {
      WriteDsiDumpFile((dir / "dsi.bin").string(), *out.fused);
      outputs.push_back(OutputEntry(root, dir / "dsi.bin"));
    }
    const double write_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_write).count();

    json sweep = json::array();
    for (const auto& s : out.sweep_stats) {
      sweep.push_back({{"events_in", s.events_in},
                       {"events_swept", s.events_swept},
                       {"events_skipped", s.events_skipped},
                       {"degenerate_warps", s.degenerate_warps},
                       {"weight_dropped", s.weight_dropped}});
    }
    const std::size_t points = f.MaskCount();
    summary.points += points;
    ++summary.packets;
    packets.push_back({
        {"index", out.index},
        {"t_start", out.t_start},
        {"t_end", out.t_end},
        {"t_ref", out.t_ref},
        {"ref", {{"world_from_ref", PoseJson(out.ref.world_from_ref)},
                 {"camera", CameraJson(out.ref.camera)}}},
        {"event_counts", out.event_counts},
        {"dropped", sweep},
        {"grids_built", out.grids_built},
        {"points", points},
        {"seconds", {{"dsi", out.times.dsi},
                     {"fusion", out.times.fusion},
                     {"extract", out.times.extract},
                     {"post", out.times.post},
                     {"write", write_seconds}}},
        {"warnings", out.warnings},
        {"outputs", outputs},
    });
  };

  PipelineResult result;
  try {
    const PipelineInputs inputs = LoadInputs(config);
    result = RunPipeline(inputs, config.options, on_packet);
  } catch (const Error& e) {
    write_manifest(e, result.robust_max);
    throw;
  }
  write_manifest(std::nullopt, result.robust_max);
  return summary;
}

void Simulate(const std::string& scene_path, const std::string& out_dir, bool binary_events) {
  const SimulationConfig sim = ReadSimulationFile(scene_path);
  const std::vector<EventStream> streams =
      sim.mode == SimulationMode::kGeometric
          ? GenerateEventsGeometric(sim.scene, sim.rig, sim.geometric)
          : GenerateEventsPhotometric(sim.scene, sim.rig, sim.photometric);
  const fs::path root(out_dir);
  MakeDirs(root);

  json events = json::array();
  for (const auto& stream : streams) {
    const std::string name =
        "events_" + stream.camera_id + (binary_events ? ".bin" : ".txt");
    const fs::path path = root / name;
    if (binary_events) {
      std::ofstream out(path, std::ios::binary);
      if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
      WriteEventBinary(out, stream.events);
    } else {
      WriteEventTextFile(path.string(), stream.events);
    }
    events.push_back(name);
  }
  WriteTrajectoryFile((root / "trajectory.txt").string(), sim.rig.trajectory);
  WriteCalibrationFile((root / "calibration.json").string(), sim.rig.ToCalibration());
  fs::copy_file(scene_path, root / "scene.json", fs::copy_options::overwrite_existing);

  PipelineConfig config;
  config.event_paths = events.get<std::vector<std::string>>();
  config.binary_events = binary_events;
  config.trajectory_path = "trajectory.txt";
  config.calibration_path = "calibration.json";
  WriteText(root / "config.json", PipelineConfigToJson(config) + "\n");
}

EvaluateSummary Evaluate(const EvaluateOptions& options) {
  if (options.scene_path.has_value() == options.gt_list_path.has_value()) {
    throw Error(ErrorKind::kConfig, "evaluate needs exactly one of --scene or --gt");
  }
  const fs::path run(options.run_dir);
  const json manifest = ReadJsonFile((run / "manifest.json").string());
  const PipelineConfig config = ParsePipelineConfig(manifest.at("config").dump());
  const EvalConfig& ev = config.eval;

  std::optional<Scene> scene;
  std::vector<GtSnapshot> snapshots;
  if (options.scene_path) {
    scene = ReadSimulationFile(*options.scene_path).scene;
  } else {
    std::ifstream in(*options.gt_list_path);
    if (!in) throw Error(ErrorKind::kIo, "cannot open " + *options.gt_list_path);
    const fs::path base = fs::path(*options.gt_list_path).parent_path();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ls(line);
      double t = 0.0;
      std::string file;
      if (!(ls >> t >> file)) throw LineError(ErrorKind::kParse, line_no, "expected 't path'");
      if (!snapshots.empty() && !(t > snapshots.back().t)) {
        throw LineError(ErrorKind::kOrdering, line_no, "GT timestamps must increase");
      }
      snapshots.push_back({t, ReadPfm(Resolve(base, file))});
    }
  }

  EvaluateSummary summary;
  std::vector<std::string> names;
  std::vector<MetricsReport> reports;
  json per_packet = json::array();
  // Pooled precision / recall: every evaluated packet stacked vertically.
  DepthResult pooled_est;
  Image<float> pooled_gt;
  std::vector<std::pair<DepthResult, Image<float>>> pairs;

  for (const auto& p : manifest.at("packets")) {
    const std::size_t index = p.at("index").get<std::size_t>();
    const fs::path dir = run / PacketDirName(index);
    const ReferenceView ref{PoseFromJson(p.at("ref").at("world_from_ref")),
                            CameraFromJson(p.at("ref").at("camera"))};
    Image<float> gt;
    if (scene) {
      gt = RenderGtDepth(*scene, ref);
    } else {
      const auto nearest = NearestSnapshot(snapshots, p.at("t_ref").get<double>(), ev.max_gt_skew);
      if (!nearest) {
        ++summary.packets_skipped;
        continue;
      }
      gt = snapshots[*nearest].depth;
    }
    DepthResult est;
    est.depth = ReadPfm((dir / "depth.pfm").string());
    est.confidence = ReadPfm((dir / "confidence.pfm").string());
    est.z_min = config.options.grid.z_min;
    est.z_max = config.options.grid.z_max;
    if (gt.width() != est.depth.width() || gt.height() != est.depth.height()) {
      throw Error(ErrorKind::kAlignment, "GT size does not match packet " + std::to_string(index));
    }
    est.mask = Image<std::uint8_t>(est.depth.width(), est.depth.height(), 0);
    for (int y = 0; y < est.depth.height(); ++y) {
      for (int x = 0; x < est.depth.width(); ++x) {
        est.mask(x, y) = std::isfinite(est.depth(x, y)) ? 1 : 0;
      }
    }
    MetricsReport report = DepthErrors(est, gt, ev.max_depth, ev.bad_pix, true);
    json entry = json::parse(ReportToJson(report));
    per_packet.push_back({{"index", index}, {"metrics", entry}});
    names.push_back(PacketDirName(index));
    reports.push_back(std::move(report));
    pairs.emplace_back(std::move(est), std::move(gt));
    ++summary.packets_evaluated;
  }

  json out;
  out["run"] = options.run_dir;
  out["packets_evaluated"] = summary.packets_evaluated;
  out["packets_skipped"] = summary.packets_skipped;
  out["packets"] = per_packet;
  std::vector<PrPoint> pr;
  if (!reports.empty()) {
    summary.aggregate = AggregateReports(reports);
    out["aggregate"] = json::parse(ReportToJson(summary.aggregate));
    const int w = pairs.front().first.depth.width();
    const int h = pairs.front().first.depth.height();
    const int total_h = h * static_cast<int>(pairs.size());
    pooled_est.depth = Image<float>(w, total_h);
    pooled_est.confidence = Image<float>(w, total_h);
    pooled_est.mask = Image<std::uint8_t>(w, total_h);
    pooled_gt = Image<float>(w, total_h);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const int yy = static_cast<int>(i) * h + y;
          pooled_est.depth(x, yy) = pairs[i].first.depth(x, y);
          pooled_est.mask(x, yy) = pairs[i].first.mask(x, y);
          pooled_gt(x, yy) = pairs[i].second(x, y);
        }
      }
    }
    pr = PrCurves(pooled_est, pooled_gt, ev.pr_thresholds);
    names.push_back("all");
    reports.push_back(summary.aggregate);
  }

  const fs::path out_dir(options.out_dir.value_or(options.run_dir));
  MakeDirs(out_dir);
  WriteText(out_dir / "metrics.json", out.dump(2) + "\n");
  std::ostringstream table;
  WriteReportTable(table, names, reports);
  WriteText(out_dir / "metrics.txt", table.str());
  std::ostringstream csv;
  WritePrCsv(csv, pr);
  WriteText(out_dir / "pr.csv", csv.str());
  return summary;
}

void ProjectDsi(const ProjectDsiOptions& options) {
  if (options.config_path.has_value() == options.dsi_path.has_value()) {
    throw Error(ErrorKind::kConfig, "project-dsi needs exactly one of --config or --dsi");
  }
  if (options.dsi_path) {
    std::ifstream in(*options.dsi_path, std::ios::binary);
    if (!in) throw Error(ErrorKind::kIo, "cannot open " + *options.dsi_path);
    const DsiDump dump = ReadDsiDump(in);
    const CameraModel camera(1.0, 1.0, 0.5 * (dump.width - 1), 0.5 * (dump.height - 1),
                             dump.width, dump.height);
    DsiGrid grid(ReferenceView{Pose::Identity(), camera}, dump.num_planes, dump.z_min,
                 dump.z_max);
    std::copy(dump.values.begin(), dump.values.end(), grid.values().begin());
    WriteProjections(grid, options.out_dir);
    return;
  }
  PipelineConfig config = LoadConfig(*options.config_path, options.overrides);
  config.options.only_packet = options.packet;
  config.options.keep_grids = true;
  const PipelineResult result = RunPipeline(LoadInputs(config), config.options);
  WriteProjections(*result.packets.front().fused, options.out_dir);
}

BenchReport Bench(const std::string& out_dir, const BenchOptions& options) {
  const BenchReport report = RunBench(options);
  const fs::path root(out_dir);
  MakeDirs(root);
  std::ostringstream csv;
  WriteBenchCsv(csv, report);
  WriteText(root / "bench.csv", csv.str());
  std::ostringstream summary;
  WriteBenchSummary(summary, report);
  WriteText(root / "summary.txt", summary.str());
  return report;
}

}  // namespace evfuse::cli
