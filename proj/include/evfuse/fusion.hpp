#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evfuse/dsi.hpp"

namespace evfuse {

// Power means, listed in ascending order: for non-negative inputs
// min <= H <= G <= A <= RMS <= max.
enum class FusionFunction { kMin, kHarmonic, kGeometric, kArithmetic, kRms, kMax };

inline constexpr FusionFunction kAllFusionFunctions[] = {
    FusionFunction::kMin,        FusionFunction::kHarmonic, FusionFunction::kGeometric,
    FusionFunction::kArithmetic, FusionFunction::kRms,      FusionFunction::kMax};

// "min", "H", "G", "A", "RMS", "max".
const char* FusionFunctionName(FusionFunction fn);
FusionFunction ParseFusionFunction(const std::string& name);

// n-ary mean of non-negative values. The harmonic mean is 0 when any input
// is 0. Throws kDomain on negative or non-finite input, kConfig when empty.
double FuseValue(FusionFunction fn, std::span<const double> values);

// Voxel-wise fusion of aligned grids. Throws kAlignment when the grids do
// not share reference view, dimensions and plane depths.
DsiGrid FuseGrids(FusionFunction fn, std::span<const DsiGrid* const> grids,
                  int threads = 1);
DsiGrid FuseGrids(FusionFunction fn, std::span<const DsiGrid> grids, int threads = 1);

enum class FusionOrder {
  kCameraFirst,  // fuse cameras per sub-interval, then across time
  kTimeFirst,    // fuse sub-intervals per camera, then across cameras
};

enum class SubintervalSplit { kEqualTime, kEqualCount };

enum class ShuffleMode { kOff, kCyclic, kSeeded };

struct FusionScheme {
  FusionFunction camera_fn = FusionFunction::kHarmonic;
  FusionFunction time_fn = FusionFunction::kArithmetic;
  FusionOrder order = FusionOrder::kTimeFirst;
  int num_subintervals = 1;
  SubintervalSplit split = SubintervalSplit::kEqualCount;
  ShuffleMode shuffle = ShuffleMode::kOff;
  std::uint64_t seed = 0;
};

// Composition strings read right to left like function composition:
// "Hc*At" applies At first (time-first), "At*Hc" applies Hc first.
// Function tokens: min, H, G, A, RMS, max (case-insensitive), axis suffix
// c or t, optionally separated by '_'.
FusionScheme ParseSchemeString(const std::string& text);
std::string SchemeString(const FusionScheme& scheme);

SubintervalSplit ParseSplit(const std::string& text);
const char* SplitName(SubintervalSplit split);

// Pairing of sub-interval indices for non-reference cameras: cyclic gives
// i -> (i + 1) mod n, seeded gives a reproducible uniform permutation.
// Throws kConfig for n < 2.
std::vector<int> ShufflePairing(int num_subintervals, ShuffleMode mode,
                                std::uint64_t seed = 0);

struct GridSpec {
  int num_planes = 100;
  double z_min = 1.0;
  double z_max = 4.0;
  DepthSampling sampling = DepthSampling::kInverseDepth;
};

struct CameraEvents {
  std::span<const Event> events;
  const UndistortionMap* camera = nullptr;
  Pose cam_from_body;
};

struct SchemeInputs {
  std::vector<CameraEvents> cameras;  // camera 0 anchors the reference view
  const Trajectory* trajectory = nullptr;  // world-from-body
  ReferenceView ref;
  GridSpec grid;
  SweepOptions sweep;
  int fusion_threads = 1;
};

struct SchemeResult {
  DsiGrid fused;
  std::vector<SweepStats> camera_stats;
  std::size_t grids_built = 0;
  std::size_t empty_grids = 0;
  double dsi_seconds = 0.0;
  double fusion_seconds = 0.0;
  std::vector<std::string> warnings;
};

// Index ranges [begin, end) of each sub-interval of a time-sorted range.
std::vector<std::pair<std::size_t, std::size_t>> SplitSubintervals(
    std::span<const Event> events, int num_subintervals, SubintervalSplit split);

// Builds one grid per (camera, sub-interval) and reduces them along both
// axes in the scheme's order. Empty sub-intervals contribute zero grids.
SchemeResult ApplyScheme(const FusionScheme& scheme, const SchemeInputs& inputs);

// Lower-level entry point: grids[c][i] is camera c, sub-interval i.
DsiGrid FuseCameraTime(const FusionScheme& scheme,
                       const std::vector<std::vector<DsiGrid>>& grids,
                       int threads = 1);

// Same, writing into `out`, which is reallocated only when its layout
// differs from the inputs'.
void FuseCameraTime(const FusionScheme& scheme, const std::vector<std::vector<DsiGrid>>& grids,
                    DsiGrid& out, int threads = 1);

}  // namespace evfuse
