#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "evfuse/dsi.hpp"
#include "evfuse/image.hpp"

namespace evfuse {

// Depth is NaN where absent. mask(x, y) != 0 implies a finite depth within
// [z_min, z_max].
struct DepthResult {
  Image<float> depth;
  Image<float> confidence;
  Image<std::uint8_t> mask;
  double z_min = 0.0;
  double z_max = 0.0;

  std::size_t MaskCount() const;
  bool Has(int x, int y) const { return mask(x, y) != 0; }
};

// Per-pixel arg max / max along the depth axis. Ties go to the nearer plane.
// Pixels whose column is all zero get confidence 0 and no depth. The mask is
// left empty (all false). With subvoxel_refinement a parabola through the
// arg max and its two neighbours refines the depth in the grid's sampling
// domain.
DepthResult ExtractDepthConfidence(const DsiGrid& grid, bool subvoxel_refinement = false);

// Collects per-packet confidence maxima and reports a percentile of them
// (linear interpolation between order statistics).
class RobustMaxAccumulator {
 public:
  explicit RobustMaxAccumulator(double percentile = 98.0);

  void Add(double packet_max);
  void AddMap(const Image<float>& confidence);
  std::size_t count() const { return maxima_.size(); }
  // 0 when nothing was added.
  double Value() const;

 private:
  double percentile_;
  std::vector<double> maxima_;
};

// 255 * c / robust_max clamped to [0, 255]; all zeros when robust_max <= 0.
Image<float> NormalizeConfidence(const Image<float>& confidence, double robust_max);

struct AgtOptions {
  int kernel_size = 5;    // odd
  double offset = 10.0;  // added to the local Gaussian mean
};

// Gaussian sigma used for a given kernel size: 0.3 * ((k - 1) / 2 - 1) + 0.8.
double AgtSigma(int kernel_size);

// Keeps pixel iff c'(x,y) > gaussian_mean(x,y) + offset and c'(x,y) > 0.
// Reflect-101 border handling.
Image<std::uint8_t> AgtMask(const Image<float>& normalized, const AgtOptions& options = {});

// Sets the mask to `mask` restricted to pixels that carry a depth.
DepthResult ApplyMask(DepthResult result, const Image<std::uint8_t>& mask);

// For each kept pixel: drop it when fewer than min_neighbors other kept
// pixels lie in its k x k window, otherwise replace its depth with the
// (lower) median of the kept depths in the window.
DepthResult MedianFilter(const DepthResult& result, int kernel_size = 5,
                         int min_neighbors = 3);

// One 4-neighbour dilation of the mask; new pixels take the depth of the
// kept neighbour, the smallest one on conflicts.
DepthResult MorphFill(const DepthResult& result);

// Kept pixels back-projected at their depth and expressed in world frame.
std::vector<Eigen::Vector3d> ToPointCloud(const DepthResult& result,
                                          const ReferenceView& ref);

struct PostProcessOptions {
  AgtOptions agt;
  bool median = true;
  int median_kernel = 5;
  bool morph_fill = false;
};

// normalize -> AGT -> median -> optional morphological fill.
DepthResult PostProcess(const DepthResult& dense, double robust_max,
                        const PostProcessOptions& options = {});

}  // namespace evfuse
