#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace evfuse {

struct Distortion {
  // Radial-tangential (plumb bob) coefficients.
  double k1 = 0.0, k2 = 0.0, p1 = 0.0, p2 = 0.0, k3 = 0.0;

  bool IsZero() const {
    return k1 == 0.0 && k2 == 0.0 && p1 == 0.0 && p2 == 0.0 && k3 == 0.0;
  }
};

class CameraModel {
 public:
  CameraModel() = default;
  // Throws kConfig if fx, fy <= 0 or the principal point is off-sensor.
  CameraModel(double fx, double fy, double cx, double cy, int width, int height,
              Distortion distortion = {});

  double fx() const { return fx_; }
  double fy() const { return fy_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }
  int width() const { return width_; }
  int height() const { return height_; }
  const Distortion& distortion() const { return distortion_; }

  // Same intrinsics without lens distortion.
  CameraModel Pinhole() const;

  // Applies the lens model to ideal normalized coordinates.
  Eigen::Vector2d Distort(const Eigen::Vector2d& normalized) const;

  // Pixel -> ideal normalized coordinates, inverting the lens model with
  // Newton iterations. Throws kDistortion if the residual stays above
  // 1e-8 after max_iterations.
  Eigen::Vector2d UndistortPixel(const Eigen::Vector2d& pixel,
                                 int max_iterations = 20) const;

  // Ideal normalized coordinates -> pixel, ignoring distortion.
  Eigen::Vector2d ProjectNormalized(const Eigen::Vector2d& normalized) const {
    return {fx_ * normalized.x() + cx_, fy_ * normalized.y() + cy_};
  }
  // Ideal normalized coordinates -> pixel through the lens model.
  Eigen::Vector2d ProjectDistorted(const Eigen::Vector2d& normalized) const {
    return ProjectNormalized(Distort(normalized));
  }
  Eigen::Vector2d PixelToNormalized(const Eigen::Vector2d& pixel) const {
    return {(pixel.x() - cx_) / fx_, (pixel.y() - cy_) / fy_};
  }

  bool InBounds(double x, double y) const {
    return x >= 0.0 && y >= 0.0 && x <= width_ - 1 && y <= height_ - 1;
  }

 private:
  double fx_ = 1.0, fy_ = 1.0, cx_ = 0.0, cy_ = 0.0;
  int width_ = 1, height_ = 1;
  Distortion distortion_;
};

// Rigid transform. Poses are stored world-from-camera unless the variable
// name says otherwise (cam_from_ref etc.).
struct Pose {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Pose() = default;
  Pose(const Eigen::Quaterniond& q, const Eigen::Vector3d& t)
      : rotation(q.normalized()), translation(t) {}
  Pose(const Eigen::Matrix3d& r, const Eigen::Vector3d& t)
      : rotation(Eigen::Quaterniond(r).normalized()), translation(t) {}

  static Pose Identity() { return {}; }
  static Pose FromTranslation(const Eigen::Vector3d& t) {
    return {Eigen::Quaterniond::Identity(), t};
  }

  Eigen::Matrix3d R() const { return rotation.toRotationMatrix(); }
  Pose Inverse() const {
    const Eigen::Quaterniond inv = rotation.conjugate();
    return {inv, -(inv * translation)};
  }
  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }
  Pose operator*(const Pose& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }
};

struct PoseSample {
  double t = 0.0;
  Pose pose;
};

class Trajectory {
 public:
  Trajectory() = default;
  // Throws kOrdering unless timestamps strictly increase.
  explicit Trajectory(std::vector<PoseSample> samples);

  bool empty() const { return samples_.empty(); }
  std::size_t size() const { return samples_.size(); }
  const std::vector<PoseSample>& samples() const { return samples_; }
  double t_begin() const;
  double t_end() const;

  // Linear translation + slerp between bracketing samples. Exact at sample
  // times. Throws kConfig when empty, kRange when t is outside the covered
  // interval and clamp is false.
  Pose Interpolate(double t, bool clamp = false) const;

  // Interpolation restricted to segment [index, index + 1].
  Pose InterpolateSegment(std::size_t index, double t) const;

  // Index i such that samples[i].t <= t < samples[i+1].t (clamped to the
  // last segment).
  std::size_t FindSegment(double t) const;

 private:
  std::vector<PoseSample> samples_;
};

// Amortized O(1) pose lookup for non-decreasing query times.
class TrajectoryCursor {
 public:
  TrajectoryCursor(const Trajectory& trajectory, bool clamp = false)
      : trajectory_(&trajectory), clamp_(clamp) {}

  Pose At(double t);

 private:
  const Trajectory* trajectory_;
  bool clamp_;
  std::size_t segment_ = 0;
};

Eigen::Quaterniond Slerp(const Eigen::Quaterniond& a,
                         const Eigen::Quaterniond& b, double s);

struct ReferenceView {
  Pose world_from_ref;
  CameraModel camera;  // undistorted pinhole
};

// Homography induced by the plane z = depth of the reference frame, mapping
// homogeneous normalized coordinates of the event camera to those of the
// reference view: (R + t e3^T / depth)^-1 with (R, t) = cam_from_ref.
// Normalized so that the (2,2) entry is 1 when nonzero. Throws
// kDegenerateGeometry if the matrix is singular.
Eigen::Matrix3d PlaneHomography(const Pose& cam_from_ref, double depth);

// Same, with world-from-camera poses for the event camera and the
// reference view.
Eigen::Matrix3d HomographyForPlane(const Pose& world_from_cam,
                                   const ReferenceView& ref, double depth);

// Transfers an event pixel to reference-view pixel coordinates through the
// plane at `depth`. std::nullopt when the homogeneous scale vanishes.
std::optional<Eigen::Vector2d> WarpEvent(const Eigen::Vector2d& event_pixel,
                                         const CameraModel& cam,
                                         const Pose& world_from_cam,
                                         const ReferenceView& ref,
                                         double depth);

// Per-event precomputation for sweeping one event over many depth planes.
// Uses the rank-one inverse of R + t e3^T / Z, so each plane costs a few
// multiply-adds instead of a 3x3 inversion.
class PlaneSweepRay {
 public:
  PlaneSweepRay(const Eigen::Matrix3d& cam_from_ref_rotation,
                const Eigen::Vector3d& cam_from_ref_translation,
                const Eigen::Vector2d& event_normalized);

  // Reference-view normalized coordinates at `depth`; false if the plane
  // point lies behind the event camera.
  bool At(double depth, double& x, double& y) const {
    const double denom = depth + b_z_;
    if (std::abs(denom) < 1e-12) return false;
    const double s = a_z_ / denom;
    const double w = a_z_ - b_z_ * s;
    if (w <= 1e-12) return false;
    const double inv_w = 1.0 / w;
    x = (a_x_ - b_x_ * s) * inv_w;
    y = (a_y_ - b_y_ * s) * inv_w;
    return true;
  }

 private:
  double a_x_, a_y_, a_z_;
  double b_x_, b_y_, b_z_;
};

}  // namespace evfuse
