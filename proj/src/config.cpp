#include "evfuse/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "evfuse/error.hpp"

namespace evfuse {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void RejectUnknownKeys(const json& obj, std::initializer_list<const char*> allowed,
                       const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorKind::kConfig, where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error(ErrorKind::kConfig, "unknown key '" + key + "' in " + where);
  }
}

}  // namespace

ShuffleMode ParseShuffleMode(const std::string& text) {
  if (text == "off" || text == "none") return ShuffleMode::kOff;
  if (text == "cyclic") return ShuffleMode::kCyclic;
  if (text == "seeded") return ShuffleMode::kSeeded;
  throw Error(ErrorKind::kConfig, "unknown shuffle mode '" + text + "'");
}

const char* ShuffleModeName(ShuffleMode mode) {
  switch (mode) {
    case ShuffleMode::kOff: return "off";
    case ShuffleMode::kCyclic: return "cyclic";
    case ShuffleMode::kSeeded: return "seeded";
  }
  return "off";
}

PipelineConfig ParsePipelineConfig(const std::string& json_text) {
  PipelineConfig cfg;
  PipelineOptions& o = cfg.options;
  try {
    const json j = json::parse(json_text);
    RejectUnknownKeys(j, {"events", "event_format", "timestamps_us", "trajectory",
                          "calibration", "packet", "z_min", "z_max", "nz", "sampling",
                          "scheme", "ns", "split", "shuffle", "seed", "agt", "median",
                          "morph_fill", "robust_max", "subvoxel", "clamp_trajectory",
                          "ref_camera", "eval", "output", "threads"},
                      "config");
    if (j.contains("events")) cfg.event_paths = j.at("events").get<std::vector<std::string>>();
    if (j.contains("event_format")) {
      const auto f = j.at("event_format").get<std::string>();
      if (f != "text" && f != "binary") {
        throw Error(ErrorKind::kConfig, "event_format must be 'text' or 'binary'");
      }
      cfg.binary_events = f == "binary";
    }
    cfg.timestamps_us = j.value("timestamps_us", false);
    cfg.trajectory_path = j.value("trajectory", "");
    cfg.calibration_path = j.value("calibration", "");
    if (j.contains("packet")) {
      const json& p = j.at("packet");
      RejectUnknownKeys(p, {"count", "duration"}, "packet");
      if (p.contains("count") == p.contains("duration")) {
        throw Error(ErrorKind::kConfig, "packet needs exactly one of 'count' or 'duration'");
      }
      if (p.contains("count")) {
        o.packets = ByCount{p.at("count").get<std::size_t>()};
      } else {
        o.packets = ByDuration{p.at("duration").get<double>()};
      }
    }
    o.grid.z_min = j.value("z_min", o.grid.z_min);
    o.grid.z_max = j.value("z_max", o.grid.z_max);
    o.grid.num_planes = j.value("nz", o.grid.num_planes);
    if (j.contains("sampling")) {
      const auto s = j.at("sampling").get<std::string>();
      if (s == "inverse_depth") {
        o.grid.sampling = DepthSampling::kInverseDepth;
      } else if (s == "linear") {
        o.grid.sampling = DepthSampling::kLinear;
      } else {
        throw Error(ErrorKind::kConfig, "sampling must be 'inverse_depth' or 'linear'");
      }
    }
    if (j.contains("scheme")) {
      const FusionScheme parsed = ParseSchemeString(j.at("scheme").get<std::string>());
      o.scheme.camera_fn = parsed.camera_fn;
      o.scheme.time_fn = parsed.time_fn;
      o.scheme.order = parsed.order;
    }
    o.scheme.num_subintervals = j.value("ns", o.scheme.num_subintervals);
    if (j.contains("split")) o.scheme.split = ParseSplit(j.at("split").get<std::string>());
    if (j.contains("shuffle")) o.scheme.shuffle = ParseShuffleMode(j.at("shuffle").get<std::string>());
    o.scheme.seed = j.value("seed", o.scheme.seed);
    if (j.contains("agt")) {
      const json& a = j.at("agt");
      RejectUnknownKeys(a, {"kernel", "offset"}, "agt");
      o.post.agt.kernel_size = a.value("kernel", o.post.agt.kernel_size);
      o.post.agt.offset = a.value("offset", o.post.agt.offset);
    }
    if (j.contains("median")) {
      const json& m = j.at("median");
      RejectUnknownKeys(m, {"enabled", "kernel"}, "median");
      o.post.median = m.value("enabled", o.post.median);
      o.post.median_kernel = m.value("kernel", o.post.median_kernel);
    }
    o.post.morph_fill = j.value("morph_fill", o.post.morph_fill);
    if (j.contains("robust_max")) {
      const json& r = j.at("robust_max");
      RejectUnknownKeys(r, {"percentile", "mode"}, "robust_max");
      o.robust_percentile = r.value("percentile", o.robust_percentile);
      const auto mode = r.value("mode", std::string("two_pass"));
      if (mode != "two_pass" && mode != "streaming") {
        throw Error(ErrorKind::kConfig, "robust_max.mode must be 'two_pass' or 'streaming'");
      }
      o.streaming_robust_max = mode == "streaming";
    }
    o.subvoxel = j.value("subvoxel", o.subvoxel);
    o.clamp_trajectory = j.value("clamp_trajectory", o.clamp_trajectory);
    if (j.contains("ref_camera")) {
      const json& r = j.at("ref_camera");
      RejectUnknownKeys(r, {"width", "height", "fx", "fy", "cx", "cy"}, "ref_camera");
      o.ref_camera = CameraModel(r.at("fx").get<double>(), r.at("fy").get<double>(),
                                 r.at("cx").get<double>(), r.at("cy").get<double>(),
                                 r.at("width").get<int>(), r.at("height").get<int>());
    }
    if (j.contains("eval")) {
      const json& e = j.at("eval");
      RejectUnknownKeys(e, {"max_depth", "bad_pix_abs", "bad_pix_rel", "pr_thresholds",
                            "max_gt_skew"},
                        "eval");
      cfg.eval.max_depth = e.value("max_depth", cfg.eval.max_depth);
      cfg.eval.bad_pix.abs_m = e.value("bad_pix_abs", cfg.eval.bad_pix.abs_m);
      cfg.eval.bad_pix.rel = e.value("bad_pix_rel", cfg.eval.bad_pix.rel);
      if (e.contains("pr_thresholds")) {
        cfg.eval.pr_thresholds = e.at("pr_thresholds").get<std::vector<double>>();
      }
      cfg.eval.max_gt_skew = e.value("max_gt_skew", cfg.eval.max_gt_skew);
    }
    cfg.output_dir = j.value("output", cfg.output_dir);
    o.threads = j.value("threads", o.threads);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("config: ") + e.what());
  }
  ValidatePipelineConfig(cfg, false);
  return cfg;
}

PipelineConfig ReadPipelineConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kConfig, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParsePipelineConfig(ss.str());
}

void ValidatePipelineConfig(const PipelineConfig& cfg, bool require_inputs) {
  const PipelineOptions& o = cfg.options;
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::kConfig, msg); };
  if (require_inputs) {
    if (cfg.event_paths.empty()) fail("no event files given");
    if (cfg.trajectory_path.empty()) fail("no trajectory file given");
    if (cfg.calibration_path.empty()) fail("no calibration file given");
  }
  if (o.grid.num_planes < 2) fail("nz must be >= 2");
  if (!(o.grid.z_min > 0.0) || !(o.grid.z_max > o.grid.z_min)) {
    fail("need 0 < z_min < z_max");
  }
  if (const auto* c = std::get_if<ByCount>(&o.packets); c && c->count == 0) {
    fail("packet count must be positive");
  }
  if (const auto* d = std::get_if<ByDuration>(&o.packets); d && !(d->seconds > 0.0)) {
    fail("packet duration must be positive");
  }
  if (o.scheme.num_subintervals < 1) fail("ns must be >= 1");
  if (o.scheme.shuffle != ShuffleMode::kOff && o.scheme.num_subintervals < 2) {
    fail("shuffle needs ns >= 2");
  }
  if (o.post.agt.kernel_size < 1 || o.post.agt.kernel_size % 2 == 0) fail("agt.kernel must be odd");
  if (o.post.median_kernel < 1 || o.post.median_kernel % 2 == 0) fail("median.kernel must be odd");
  if (!(o.robust_percentile > 0.0) || o.robust_percentile > 100.0) {
    fail("robust_max.percentile must be in (0, 100]");
  }
  if (o.threads < 1) fail("threads must be >= 1");
  if (!(cfg.eval.max_depth > 0.0)) fail("eval.max_depth must be positive");
  if (!(cfg.eval.bad_pix.abs_m >= 0.0) || !(cfg.eval.bad_pix.rel >= 0.0)) {
    fail("bad-pix thresholds must be non-negative");
  }
  for (std::size_t i = 0; i < cfg.eval.pr_thresholds.size(); ++i) {
    const double t = cfg.eval.pr_thresholds[i];
    if (!(t > 0.0) || (i > 0 && !(t > cfg.eval.pr_thresholds[i - 1]))) {
      fail("eval.pr_thresholds must be positive and strictly increasing");
    }
  }
}

std::string PipelineConfigToJson(const PipelineConfig& cfg) {
  const PipelineOptions& o = cfg.options;
  ordered_json j;
  j["events"] = cfg.event_paths;
  j["event_format"] = cfg.binary_events ? "binary" : "text";
  j["timestamps_us"] = cfg.timestamps_us;
  j["trajectory"] = cfg.trajectory_path;
  j["calibration"] = cfg.calibration_path;
  if (const auto* c = std::get_if<ByCount>(&o.packets)) {
    j["packet"] = {{"count", c->count}};
  } else {
    j["packet"] = {{"duration", std::get<ByDuration>(o.packets).seconds}};
  }
  j["z_min"] = o.grid.z_min;
  j["z_max"] = o.grid.z_max;
  j["nz"] = o.grid.num_planes;
  j["sampling"] = o.grid.sampling == DepthSampling::kInverseDepth ? "inverse_depth" : "linear";
  j["scheme"] = SchemeString(o.scheme);
  j["ns"] = o.scheme.num_subintervals;
  j["split"] = SplitName(o.scheme.split);
  j["shuffle"] = ShuffleModeName(o.scheme.shuffle);
  j["seed"] = o.scheme.seed;
  j["agt"] = {{"kernel", o.post.agt.kernel_size}, {"offset", o.post.agt.offset}};
  j["median"] = {{"enabled", o.post.median}, {"kernel", o.post.median_kernel}};
  j["morph_fill"] = o.post.morph_fill;
  j["robust_max"] = {{"percentile", o.robust_percentile},
                     {"mode", o.streaming_robust_max ? "streaming" : "two_pass"}};
  j["subvoxel"] = o.subvoxel;
  j["clamp_trajectory"] = o.clamp_trajectory;
  if (o.ref_camera) {
    const CameraModel& m = *o.ref_camera;
    j["ref_camera"] = {{"width", m.width()}, {"height", m.height()}, {"fx", m.fx()},
                       {"fy", m.fy()},       {"cx", m.cx()},         {"cy", m.cy()}};
  }
  j["eval"] = {{"max_depth", cfg.eval.max_depth},
               {"bad_pix_abs", cfg.eval.bad_pix.abs_m},
               {"bad_pix_rel", cfg.eval.bad_pix.rel},
               {"pr_thresholds", cfg.eval.pr_thresholds},
               {"max_gt_skew", cfg.eval.max_gt_skew}};
  j["output"] = cfg.output_dir;
  j["threads"] = o.threads;
  return j.dump(2);
}

}  // namespace evfuse
