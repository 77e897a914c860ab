#pragma once

#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "evfuse/events.hpp"
#include "evfuse/geometry.hpp"
#include "evfuse/image.hpp"

namespace evfuse {

enum class DepthSampling { kInverseDepth, kLinear };

// Projective voxel grid of ray counts anchored at a reference view. Values
// are stored plane-major: index = (k * height + y) * width + x.
class DsiGrid {
 public:
  DsiGrid() = default;
  // Throws kConfig unless num_planes >= 2 and 0 < z_min < z_max.
  DsiGrid(const ReferenceView& ref, int num_planes, double z_min, double z_max,
          DepthSampling sampling = DepthSampling::kInverseDepth);

  const ReferenceView& ref() const { return ref_; }
  int width() const { return width_; }
  int height() const { return height_; }
  int num_planes() const { return num_planes_; }
  double z_min() const { return z_min_; }
  double z_max() const { return z_max_; }
  DepthSampling sampling() const { return sampling_; }
  const std::vector<double>& depths() const { return depths_; }
  double PlaneDepth(int k) const { return depths_[k]; }
  std::size_t plane_size() const { return static_cast<std::size_t>(width_) * height_; }
  std::size_t voxel_count() const { return values_.size(); }

  float& at(int x, int y, int k) { return values_[Index(x, y, k)]; }
  float at(int x, int y, int k) const { return values_[Index(x, y, k)]; }
  std::span<float> values() { return values_; }
  std::span<const float> values() const { return values_; }
  std::span<float> plane(int k) { return std::span<float>(values_).subspan(k * plane_size(), plane_size()); }
  std::span<const float> plane(int k) const { return std::span<const float>(values_).subspan(k * plane_size(), plane_size()); }

  // Sum of all voxels, accumulated in double.
  double Mass() const;
  void SetZero();
  // Voxel-wise this += other. Throws kAlignment on layout mismatch.
  void Add(const DsiGrid& other);
  void Scale(float factor);

  // Same reference view, dimensions and plane depths.
  bool SameLayout(const DsiGrid& other) const;
  // Throws kAlignment with a description of the first mismatch.
  void CheckSameLayout(const DsiGrid& other) const;

  // Spreads `weight` over the <= 4 integer neighbours of (px, py) on plane
  // k. Returns the part of the weight that fell outside the grid.
  float BilinearVote(int k, double px, double py, float weight = 1.0f) {
    const double fx0 = std::floor(px);
    const double fy0 = std::floor(py);
    if (!(fx0 >= -1.0 && fy0 >= -1.0 && fx0 < width_ && fy0 < height_)) return weight;
    const int x0 = static_cast<int>(fx0);
    const int y0 = static_cast<int>(fy0);
    const float ax = static_cast<float>(px - fx0);
    const float ay = static_cast<float>(py - fy0);
    const float w00 = (1.0f - ax) * (1.0f - ay) * weight;
    const float w10 = ax * (1.0f - ay) * weight;
    const float w01 = (1.0f - ax) * ay * weight;
    const float w11 = ax * ay * weight;
    float* base = values_.data() + static_cast<std::size_t>(k) * plane_size();
    float dropped = 0.0f;
    const bool x0_in = x0 >= 0;
    const bool x1_in = x0 + 1 < width_;
    const bool y0_in = y0 >= 0;
    const bool y1_in = y0 + 1 < height_;
    if (w00 != 0.0f) {
      if (x0_in && y0_in) base[y0 * width_ + x0] += w00; else dropped += w00;
    }
    if (w10 != 0.0f) {
      if (x1_in && y0_in) base[y0 * width_ + x0 + 1] += w10; else dropped += w10;
    }
    if (w01 != 0.0f) {
      if (x0_in && y1_in) base[(y0 + 1) * width_ + x0] += w01; else dropped += w01;
    }
    if (w11 != 0.0f) {
      if (x1_in && y1_in) base[(y0 + 1) * width_ + x0 + 1] += w11; else dropped += w11;
    }
    return dropped;
  }

 private:
  std::size_t Index(int x, int y, int k) const {
    return (static_cast<std::size_t>(k) * height_ + y) * width_ + x;
  }

  ReferenceView ref_;
  int width_ = 0;
  int height_ = 0;
  int num_planes_ = 0;
  double z_min_ = 0.0;
  double z_max_ = 0.0;
  DepthSampling sampling_ = DepthSampling::kInverseDepth;
  std::vector<double> depths_;
  std::vector<float> values_;
};

std::vector<double> PlaneDepths(int num_planes, double z_min, double z_max,
                                DepthSampling sampling);

// Per-pixel undistorted normalized coordinates of a camera, computed once.
class UndistortionMap {
 public:
  UndistortionMap() = default;
  explicit UndistortionMap(const CameraModel& camera);

  const CameraModel& camera() const { return camera_; }
  // False for pixels whose undistortion did not converge.
  bool Valid(int x, int y) const { return valid_[Index(x, y)] != 0; }
  const Eigen::Vector2d& operator()(int x, int y) const { return normalized_[Index(x, y)]; }

 private:
  std::size_t Index(int x, int y) const {
    return static_cast<std::size_t>(y) * camera_.width() + x;
  }

  CameraModel camera_;
  std::vector<Eigen::Vector2d> normalized_;
  std::vector<unsigned char> valid_;
};

struct SweepOptions {
  int threads = 1;
  bool clamp_trajectory = false;
  float weight = 1.0f;
};

struct SweepStats {
  std::size_t events_in = 0;
  std::size_t events_swept = 0;
  std::size_t events_skipped = 0;  // outside trajectory / invalid pixel
  std::size_t degenerate_warps = 0;
  double weight_dropped = 0.0;     // bilinear weight falling off the grid

  SweepStats& operator+=(const SweepStats& o) {
    events_in += o.events_in;
    events_swept += o.events_swept;
    events_skipped += o.events_skipped;
    degenerate_warps += o.degenerate_warps;
    weight_dropped += o.weight_dropped;
    return *this;
  }
};

// Back-projects every event through every depth plane and votes into the
// grid (adding to existing contents). `trajectory` gives world-from-body
// poses; cam_from_body is the camera extrinsic. With threads > 1 the events
// are split into contiguous chunks, each accumulated into its own grid, and
// the partial grids are added in chunk order.
SweepStats SweepEvents(DsiGrid& grid, std::span<const Event> events,
                       const UndistortionMap& camera, const Trajectory& trajectory,
                       const Pose& cam_from_body = Pose::Identity(),
                       const SweepOptions& options = {});

struct DsiProjections {
  Image<float> front;  // width x height, max over depth
  Image<float> top;    // width x num_planes, max over rows
  Image<float> side;   // num_planes x height, max over columns
};

DsiProjections MaxProjections(const DsiGrid& grid);

// Debug dump: little-endian u32 width, u32 height, u32 num_planes,
// f64 z_min, f64 z_max, then width*height*num_planes f32 values, plane-major.
struct DsiDump {
  int width = 0;
  int height = 0;
  int num_planes = 0;
  double z_min = 0.0;
  double z_max = 0.0;
  std::vector<float> values;
};

void WriteDsiDump(std::ostream& out, const DsiGrid& grid);
void WriteDsiDumpFile(const std::string& path, const DsiGrid& grid);
DsiDump ReadDsiDump(std::istream& in);

}  // namespace evfuse
