#include "evfuse/calibration.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "evfuse/error.hpp"

namespace evfuse {
namespace {

using nlohmann::json;

void RejectUnknownKeys(const json& obj, std::initializer_list<const char*> allowed,
                       const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error(ErrorKind::kConfig, "unknown key '" + key + "' in " + where);
  }
}

CameraCalibration ParseCamera(const json& j, std::size_t index) {
  const std::string where = "cameras[" + std::to_string(index) + "]";
  if (!j.is_object()) throw Error(ErrorKind::kConfig, where + " must be an object");
  RejectUnknownKeys(j, {"id", "width", "height", "fx", "fy", "cx", "cy",
                        "distortion", "cam_from_rig"}, where);
  CameraCalibration cam;
  cam.id = j.value("id", "cam" + std::to_string(index));
  Distortion d;
  if (j.contains("distortion")) {
    const auto coeffs = j.at("distortion").get<std::vector<double>>();
    if (coeffs.size() != 5 && coeffs.size() != 4) {
      throw Error(ErrorKind::kConfig, where + ".distortion needs 4 or 5 coefficients");
    }
    d.k1 = coeffs[0];
    d.k2 = coeffs[1];
    d.p1 = coeffs[2];
    d.p2 = coeffs[3];
    d.k3 = coeffs.size() == 5 ? coeffs[4] : 0.0;
  }
  cam.model = CameraModel(j.at("fx").get<double>(), j.at("fy").get<double>(),
                          j.at("cx").get<double>(), j.at("cy").get<double>(),
                          j.at("width").get<int>(), j.at("height").get<int>(), d);
  if (j.contains("cam_from_rig")) {
    const json& e = j.at("cam_from_rig");
    RejectUnknownKeys(e, {"translation", "rotation"}, where + ".cam_from_rig");
    Eigen::Vector3d t = Eigen::Vector3d::Zero();
    Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
    if (e.contains("translation")) {
      const auto v = e.at("translation").get<std::vector<double>>();
      if (v.size() != 3) throw Error(ErrorKind::kConfig, where + " translation needs 3 values");
      t = {v[0], v[1], v[2]};
    }
    if (e.contains("rotation")) {
      const auto v = e.at("rotation").get<std::vector<double>>();
      if (v.size() != 4) throw Error(ErrorKind::kConfig, where + " rotation needs [qx,qy,qz,qw]");
      q = Eigen::Quaterniond(v[3], v[0], v[1], v[2]);
      if (std::abs(q.norm() - 1.0) > 1e-3) {
        throw Error(ErrorKind::kConfig, where + " rotation is not a unit quaternion");
      }
    }
    cam.cam_from_rig = Pose(q.normalized(), t);
  }
  return cam;
}

}  // namespace

const CameraCalibration& Calibration::Find(const std::string& id) const {
  for (const auto& cam : cameras) {
    if (cam.id == id) return cam;
  }
  throw Error(ErrorKind::kConfig, "no camera '" + id + "' in calibration");
}

Calibration ParseCalibrationJson(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("calibration JSON: ") + e.what());
  }
  Calibration calib;
  try {
    if (!j.is_object()) throw Error(ErrorKind::kConfig, "calibration must be an object");
    RejectUnknownKeys(j, {"cameras"}, "calibration");
    const json& cams = j.at("cameras");
    if (!cams.is_array() || cams.empty()) {
      throw Error(ErrorKind::kConfig, "calibration needs a non-empty 'cameras' array");
    }
    for (std::size_t i = 0; i < cams.size(); ++i) {
      calib.cameras.push_back(ParseCamera(cams[i], i));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("calibration: ") + e.what());
  }
  return calib;
}

Calibration ReadCalibrationFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseCalibrationJson(ss.str());
}

std::string CalibrationToJson(const Calibration& calibration) {
  json cams = json::array();
  for (const auto& cam : calibration.cameras) {
    const CameraModel& m = cam.model;
    const Distortion& d = m.distortion();
    const auto& q = cam.cam_from_rig.rotation;
    const auto& t = cam.cam_from_rig.translation;
    cams.push_back({
        {"id", cam.id},
        {"width", m.width()},
        {"height", m.height()},
        {"fx", m.fx()},
        {"fy", m.fy()},
        {"cx", m.cx()},
        {"cy", m.cy()},
        {"distortion", {d.k1, d.k2, d.p1, d.p2, d.k3}},
        {"cam_from_rig",
         {{"translation", {t.x(), t.y(), t.z()}},
          {"rotation", {q.x(), q.y(), q.z(), q.w()}}}},
    });
  }
  return json{{"cameras", cams}}.dump(2);
}

void WriteCalibrationFile(const std::string& path, const Calibration& calibration) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  out << CalibrationToJson(calibration) << '\n';
}

}  // namespace evfuse
