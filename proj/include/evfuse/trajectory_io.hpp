#pragma once

#include <iosfwd>
#include <string>

#include "evfuse/geometry.hpp"

namespace evfuse {

// TUM-style lines "t tx ty tz qx qy qz qw" (world-from-body). Quaternions
// must have unit norm within 1e-3 and are renormalized.
Trajectory ParseTrajectoryText(std::istream& in);
Trajectory ReadTrajectoryFile(const std::string& path);

void WriteTrajectoryText(std::ostream& out, const Trajectory& trajectory);
void WriteTrajectoryFile(const std::string& path, const Trajectory& trajectory);

}  // namespace evfuse
