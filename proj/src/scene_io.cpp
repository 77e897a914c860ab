#include "evfuse/scene_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "evfuse/error.hpp"

namespace evfuse {
namespace {

using nlohmann::json;

void RejectUnknownKeys(const json& obj, std::initializer_list<const char*> allowed,
                       const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorKind::kConfig, where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error(ErrorKind::kConfig, "unknown key '" + key + "' in " + where);
  }
}

Eigen::Vector3d Vec3(const json& j, const std::string& where) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw Error(ErrorKind::kConfig, where + " needs 3 values");
  return {v[0], v[1], v[2]};
}

Eigen::Vector2d Vec2(const json& j, const std::string& where) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 2) throw Error(ErrorKind::kConfig, where + " needs 2 values");
  return {v[0], v[1]};
}

TexturedPlane ParsePlane(const json& j, const std::string& where) {
  RejectUnknownKeys(j, {"origin", "u_axis", "v_axis", "half_extent", "base", "texture", "stripes"},
                    where);
  TexturedPlane p;
  p.origin = Vec3(j.at("origin"), where + ".origin");
  if (j.contains("u_axis")) p.u_axis = Vec3(j.at("u_axis"), where + ".u_axis");
  if (j.contains("v_axis")) p.v_axis = Vec3(j.at("v_axis"), where + ".v_axis");
  if (std::abs(p.u_axis.norm() - 1.0) > 1e-6 || std::abs(p.v_axis.norm() - 1.0) > 1e-6 ||
      std::abs(p.u_axis.dot(p.v_axis)) > 1e-6) {
    throw Error(ErrorKind::kConfig, where + " axes must be orthonormal");
  }
  p.half_extent = Vec2(j.at("half_extent"), where + ".half_extent");
  p.base_log_intensity = j.value("base", 0.0);
  if (j.contains("texture")) {
    for (const auto& t : j.at("texture")) {
      RejectUnknownKeys(t, {"amplitude", "frequency", "phase"}, where + ".texture");
      p.texture.push_back({t.at("amplitude").get<double>(),
                           Vec2(t.at("frequency"), where + ".texture.frequency"),
                           t.value("phase", 0.0)});
    }
  }
  if (j.contains("stripes")) {
    for (const auto& t : j.at("stripes")) {
      RejectUnknownKeys(t, {"amplitude", "frequency", "phase", "harmonics"}, where + ".stripes");
      const int harmonics = t.value("harmonics", 16);
      if (harmonics < 1) throw Error(ErrorKind::kConfig, where + ".stripes.harmonics must be >= 1");
      p.stripes.push_back({t.at("amplitude").get<double>(),
                           Vec2(t.at("frequency"), where + ".stripes.frequency"),
                           t.value("phase", 0.0), harmonics});
    }
  }
  return p;
}

}  // namespace

SimulationConfig ParseSimulationJson(const std::string& text) {
  SimulationConfig cfg;
  try {
    const json j = json::parse(text);
    RejectUnknownKeys(j, {"mode", "duration", "time_step", "samples_per_edge",
                          "contrast_threshold", "noise_rate", "seed", "velocity",
                          "calibration", "num_cameras", "baseline", "preset", "segments",
                          "planes", "background"},
                      "simulation config");
    const std::string mode = j.value("mode", "geometric");
    if (mode == "geometric") {
      cfg.mode = SimulationMode::kGeometric;
    } else if (mode == "photometric") {
      cfg.mode = SimulationMode::kPhotometric;
    } else {
      throw Error(ErrorKind::kConfig, "unknown simulation mode '" + mode + "'");
    }
    const double duration = j.value("duration", 1.0);
    cfg.geometric.duration = cfg.photometric.duration = duration;
    if (j.contains("time_step")) {
      cfg.geometric.time_step = cfg.photometric.time_step = j.at("time_step").get<double>();
    }
    cfg.geometric.samples_per_edge = j.value("samples_per_edge", cfg.geometric.samples_per_edge);

    if (j.contains("calibration")) {
      if (j.contains("num_cameras") || j.contains("baseline")) {
        throw Error(ErrorKind::kConfig,
                    "num_cameras and baseline only apply to the default rig");
      }
      cfg.rig.cameras = ParseCalibrationJson(j.at("calibration").dump()).cameras;
    } else {
      const int n = j.value("num_cameras", 2);
      if (n < 1) throw Error(ErrorKind::kConfig, "num_cameras must be >= 1");
      cfg.rig.cameras = DefaultDeskRig(n, j.value("baseline", 0.2)).cameras;
    }
    const Eigen::Vector3d velocity =
        j.contains("velocity") ? Vec3(j.at("velocity"), "velocity") : Eigen::Vector3d(0.5, 0, 0);
    cfg.rig.trajectory = ConstantVelocityTrajectory(velocity, duration);
    cfg.rig.contrast_threshold = j.value("contrast_threshold", cfg.rig.contrast_threshold);
    cfg.rig.noise_rate = j.value("noise_rate", 0.0);
    cfg.rig.seed = j.value("seed", std::uint64_t{1});

    if (j.contains("preset")) {
      const json& p = j.at("preset");
      RejectUnknownKeys(p, {"name", "depth", "segments", "seed"}, "preset");
      const std::string name = p.at("name").get<std::string>();
      const double depth = p.value("depth", 2.0);
      if (name == "planar_edges") {
        cfg.scene = PlanarEdgeScene(depth, p.value("segments", 24), p.value("seed", std::uint64_t{7}));
      } else if (name == "textured_plane") {
        if (p.contains("segments") || p.contains("seed")) {
          throw Error(ErrorKind::kConfig, "textured_plane preset only takes a depth");
        }
        cfg.scene = TexturedPlaneScene(depth);
      } else {
        throw Error(ErrorKind::kConfig, "unknown scene preset '" + name + "'");
      }
    }
    if (j.contains("segments")) {
      for (const auto& s : j.at("segments")) {
        RejectUnknownKeys(s, {"a", "b"}, "segments[]");
        cfg.scene.segments.push_back({Vec3(s.at("a"), "segment.a"), Vec3(s.at("b"), "segment.b")});
      }
    }
    if (j.contains("planes")) {
      for (std::size_t i = 0; i < j.at("planes").size(); ++i) {
        cfg.scene.planes.push_back(
            ParsePlane(j.at("planes")[i], "planes[" + std::to_string(i) + "]"));
      }
    }
    cfg.scene.background_log_intensity = j.value("background", 0.0);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("simulation config: ") + e.what());
  }
  if (cfg.scene.segments.empty() && cfg.scene.planes.empty()) {
    throw Error(ErrorKind::kConfig, "simulation scene is empty");
  }
  return cfg;
}

SimulationConfig ReadSimulationFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseSimulationJson(ss.str());
}

}  // namespace evfuse
