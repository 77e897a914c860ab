#include "evfuse/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/LU>

#include "evfuse/error.hpp"

namespace evfuse {

CameraModel::CameraModel(double fx, double fy, double cx, double cy, int width,
                         int height, Distortion distortion)
    : fx_(fx), fy_(fy), cx_(cx), cy_(cy), width_(width), height_(height),
      distortion_(distortion) {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorKind::kConfig, "focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorKind::kConfig, "sensor size must be positive");
  }
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    throw Error(ErrorKind::kConfig, "principal point outside the sensor");
  }
}

CameraModel CameraModel::Pinhole() const {
  return CameraModel(fx_, fy_, cx_, cy_, width_, height_);
}

Eigen::Vector2d CameraModel::Distort(const Eigen::Vector2d& p) const {
  const Distortion& d = distortion_;
  const double x = p.x(), y = p.y();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + r2 * (d.k1 + r2 * (d.k2 + r2 * d.k3));
  return {x * radial + 2.0 * d.p1 * x * y + d.p2 * (r2 + 2.0 * x * x),
          y * radial + d.p1 * (r2 + 2.0 * y * y) + 2.0 * d.p2 * x * y};
}

Eigen::Vector2d CameraModel::UndistortPixel(const Eigen::Vector2d& pixel,
                                            int max_iterations) const {
  const Eigen::Vector2d target = PixelToNormalized(pixel);
  if (distortion_.IsZero()) return target;

  const Distortion& d = distortion_;
  Eigen::Vector2d p = target;
  double residual = 0.0;
  for (int iter = 0; iter <= max_iterations; ++iter) {
    const Eigen::Vector2d f = Distort(p) - target;
    residual = f.norm();
    if (residual < 1e-14) break;
    if (iter == max_iterations) break;

    const double x = p.x(), y = p.y();
    const double r2 = x * x + y * y;
    const double radial = 1.0 + r2 * (d.k1 + r2 * (d.k2 + r2 * d.k3));
    const double dradial = d.k1 + 2.0 * d.k2 * r2 + 3.0 * d.k3 * r2 * r2;
    Eigen::Matrix2d jac;
    jac(0, 0) = radial + 2.0 * x * x * dradial + 2.0 * d.p1 * y + 6.0 * d.p2 * x;
    jac(0, 1) = 2.0 * x * y * dradial + 2.0 * d.p1 * x + 2.0 * d.p2 * y;
    jac(1, 0) = 2.0 * x * y * dradial + 2.0 * d.p1 * x + 2.0 * d.p2 * y;
    jac(1, 1) = radial + 2.0 * y * y * dradial + 6.0 * d.p1 * y + 2.0 * d.p2 * x;
    const double det = jac.determinant();
    if (std::abs(det) < 1e-15) break;
    p -= jac.inverse() * f;
    if (!p.allFinite()) break;
  }
  if (!(residual < 1e-8)) {
    throw Error(ErrorKind::kDistortion,
                "undistortion did not converge at pixel (" +
                    std::to_string(pixel.x()) + ", " +
                    std::to_string(pixel.y()) + ")");
  }
  return p;
}

Trajectory::Trajectory(std::vector<PoseSample> samples)
    : samples_(std::move(samples)) {
  for (std::size_t i = 1; i < samples_.size(); ++i) {
    if (!(samples_[i].t > samples_[i - 1].t)) {
      throw Error(ErrorKind::kOrdering,
                  "trajectory timestamps must strictly increase (sample " +
                      std::to_string(i) + ")");
    }
  }
}

double Trajectory::t_begin() const {
  if (samples_.empty()) throw Error(ErrorKind::kConfig, "empty trajectory");
  return samples_.front().t;
}

double Trajectory::t_end() const {
  if (samples_.empty()) throw Error(ErrorKind::kConfig, "empty trajectory");
  return samples_.back().t;
}

std::size_t Trajectory::FindSegment(double t) const {
  if (samples_.size() < 2) return 0;
  auto it = std::upper_bound(
      samples_.begin(), samples_.end(), t,
      [](double value, const PoseSample& s) { return value < s.t; });
  if (it == samples_.begin()) return 0;
  const std::size_t idx = static_cast<std::size_t>(it - samples_.begin()) - 1;
  return std::min(idx, samples_.size() - 2);
}

Eigen::Quaterniond Slerp(const Eigen::Quaterniond& a,
                         const Eigen::Quaterniond& b, double s) {
  Eigen::Quaterniond bb = b;
  double cos_theta = a.dot(b);
  if (cos_theta < 0.0) {
    bb.coeffs() = -bb.coeffs();
    cos_theta = -cos_theta;
  }
  if (cos_theta > 1.0 - 1e-12) {
    Eigen::Quaterniond q;
    q.coeffs() = (1.0 - s) * a.coeffs() + s * bb.coeffs();
    return q.normalized();
  }
  const double theta = std::acos(std::min(1.0, cos_theta));
  const double sin_theta = std::sin(theta);
  const double wa = std::sin((1.0 - s) * theta) / sin_theta;
  const double wb = std::sin(s * theta) / sin_theta;
  Eigen::Quaterniond q;
  q.coeffs() = wa * a.coeffs() + wb * bb.coeffs();
  return q.normalized();
}

Pose Trajectory::InterpolateSegment(std::size_t index, double t) const {
  if (samples_.size() == 1) return samples_.front().pose;
  const PoseSample& a = samples_[index];
  const PoseSample& b = samples_[index + 1];
  if (t == a.t) return a.pose;
  if (t == b.t) return b.pose;
  const double s = (t - a.t) / (b.t - a.t);
  Pose out;
  out.translation = (1.0 - s) * a.pose.translation + s * b.pose.translation;
  out.rotation = Slerp(a.pose.rotation, b.pose.rotation, s);
  return out;
}

Pose Trajectory::Interpolate(double t, bool clamp) const {
  if (samples_.empty()) throw Error(ErrorKind::kConfig, "empty trajectory");
  if (t < samples_.front().t || t > samples_.back().t) {
    if (!clamp) {
      throw Error(ErrorKind::kRange,
                  "time " + std::to_string(t) + " outside trajectory [" +
                      std::to_string(samples_.front().t) + ", " +
                      std::to_string(samples_.back().t) + "]");
    }
    return t < samples_.front().t ? samples_.front().pose
                                  : samples_.back().pose;
  }
  return InterpolateSegment(FindSegment(t), t);
}

Pose TrajectoryCursor::At(double t) {
  const auto& samples = trajectory_->samples();
  if (samples.empty()) throw Error(ErrorKind::kConfig, "empty trajectory");
  if (samples.size() == 1 || t < samples.front().t || t > samples.back().t) {
    return trajectory_->Interpolate(t, clamp_);
  }
  if (t < samples[segment_].t) {
    segment_ = trajectory_->FindSegment(t);
  } else {
    while (segment_ + 2 < samples.size() && t >= samples[segment_ + 1].t) {
      ++segment_;
    }
  }
  return trajectory_->InterpolateSegment(segment_, t);
}

Eigen::Matrix3d PlaneHomography(const Pose& cam_from_ref, double depth) {
  if (!(depth > 0.0)) {
    throw Error(ErrorKind::kDegenerateGeometry, "plane depth must be positive");
  }
  const Eigen::Matrix3d m =
      cam_from_ref.R() +
      cam_from_ref.translation * Eigen::RowVector3d(0.0, 0.0, 1.0) / depth;
  Eigen::FullPivLU<Eigen::Matrix3d> lu(m);
  if (!lu.isInvertible() || std::abs(m.determinant()) < 1e-12) {
    throw Error(ErrorKind::kDegenerateGeometry,
                "plane passes through the optical center");
  }
  Eigen::Matrix3d h = lu.inverse();
  if (std::abs(h(2, 2)) > 1e-15) h /= h(2, 2);
  return h;
}

Eigen::Matrix3d HomographyForPlane(const Pose& world_from_cam,
                                   const ReferenceView& ref, double depth) {
  return PlaneHomography(world_from_cam.Inverse() * ref.world_from_ref, depth);
}

std::optional<Eigen::Vector2d> WarpEvent(const Eigen::Vector2d& event_pixel,
                                         const CameraModel& cam,
                                         const Pose& world_from_cam,
                                         const ReferenceView& ref,
                                         double depth) {
  const Eigen::Vector2d n = cam.UndistortPixel(event_pixel);
  const Eigen::Matrix3d h = HomographyForPlane(world_from_cam, ref, depth);
  const Eigen::Vector3d p = h * Eigen::Vector3d(n.x(), n.y(), 1.0);
  if (std::abs(p.z()) < 1e-12) return std::nullopt;
  return ref.camera.ProjectNormalized(p.head<2>() / p.z());
}

PlaneSweepRay::PlaneSweepRay(const Eigen::Matrix3d& r,
                             const Eigen::Vector3d& t,
                             const Eigen::Vector2d& n) {
  const Eigen::Vector3d a = r.transpose() * Eigen::Vector3d(n.x(), n.y(), 1.0);
  const Eigen::Vector3d b = r.transpose() * t;
  a_x_ = a.x();
  a_y_ = a.y();
  a_z_ = a.z();
  b_x_ = b.x();
  b_y_ = b.y();
  b_z_ = b.z();
}

}  // namespace evfuse
