#pragma once

#include <string>
#include <vector>

#include "evfuse/geometry.hpp"

namespace evfuse {

struct CameraCalibration {
  std::string id;
  CameraModel model;
  Pose cam_from_rig;

  // World-from-camera pose given a world-from-rig pose.
  Pose WorldFromCamera(const Pose& world_from_rig) const {
    return world_from_rig * cam_from_rig.Inverse();
  }
};

// JSON schema:
// {
//   "cameras": [
//     {"id": "left", "width": 240, "height": 180,
//      "fx": 200, "fy": 200, "cx": 119.5, "cy": 89.5,
//      "distortion": [k1, k2, p1, p2, k3],                // optional
//      "cam_from_rig": {"translation": [x, y, z],          // optional
//                       "rotation": [qx, qy, qz, qw]}}
//   ]
// }
struct Calibration {
  std::vector<CameraCalibration> cameras;

  const CameraCalibration& Find(const std::string& id) const;
};

Calibration ParseCalibrationJson(const std::string& text);
Calibration ReadCalibrationFile(const std::string& path);
std::string CalibrationToJson(const Calibration& calibration);
void WriteCalibrationFile(const std::string& path, const Calibration& calibration);

}  // namespace evfuse
