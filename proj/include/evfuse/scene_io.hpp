#pragma once

#include <string>

#include "evfuse/simulator.hpp"

namespace evfuse {

enum class SimulationMode { kGeometric, kPhotometric };

// Everything the `simulate` subcommand needs.
//
// {
//   "mode": "geometric" | "photometric",
//   "duration": 1.0, "time_step": 0.0005, "samples_per_edge": 100,
//   "contrast_threshold": 0.2, "noise_rate": 0.0, "seed": 1,
//   "velocity": [0.5, 0, 0],
//   "calibration": { "cameras": [...] },          // calibration file schema
//   "num_cameras": 2, "baseline": 0.2,            // default rig, without calibration
//   "preset": {"name": "planar_edges" | "textured_plane", "depth": 2.0,
//              "segments": 24, "seed": 7},        // built-in scene, extended below
//   "segments": [{"a": [x,y,z], "b": [x,y,z]}],
//   "planes": [{"origin": [..], "u_axis": [..], "v_axis": [..],
//               "half_extent": [hu, hv], "base": 0.0,
//               "texture": [{"amplitude": a, "frequency": [fu, fv], "phase": p}],
//               "stripes": [{"amplitude": a, "frequency": [fu, fv], "phase": p,
//                            "harmonics": n}]}],
//   "background": 0.0
// }
struct SimulationConfig {
  SimulationMode mode = SimulationMode::kGeometric;
  Scene scene;
  RigConfig rig;
  GeometricOptions geometric;
  PhotometricOptions photometric;

  double duration() const {
    return mode == SimulationMode::kGeometric ? geometric.duration : photometric.duration;
  }
};

SimulationConfig ParseSimulationJson(const std::string& text);
SimulationConfig ReadSimulationFile(const std::string& path);

}  // namespace evfuse
