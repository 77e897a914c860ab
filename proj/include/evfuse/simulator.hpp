#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "evfuse/calibration.hpp"
#include "evfuse/events.hpp"
#include "evfuse/geometry.hpp"
#include "evfuse/image.hpp"

namespace evfuse {

struct Segment {
  Eigen::Vector3d a;
  Eigen::Vector3d b;
};

// One term of a log-intensity texture: amplitude * sin(2 pi (f . (u, v)) + phase),
// frequency in cycles per meter along the plane axes.
struct Sinusoid {
  double amplitude = 0.0;
  Eigen::Vector2d frequency = Eigen::Vector2d::Zero();
  double phase = 0.0;
};

// Band-limited square wave along `frequency`: the first `harmonics` odd
// terms of its Fourier series, Lanczos-smoothed, swinging between about
// -amplitude and +amplitude.
struct Stripes {
  double amplitude = 0.0;
  Eigen::Vector2d frequency = Eigen::Vector2d::Zero();
  double phase = 0.0;
  int harmonics = 1;

  double Evaluate(double u, double v) const;
};

// Rectangle origin + u * u_axis + v * v_axis with |u| <= half_extent.x(),
// |v| <= half_extent.y(). Axes are orthonormal.
struct TexturedPlane {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d u_axis = Eigen::Vector3d::UnitX();
  Eigen::Vector3d v_axis = Eigen::Vector3d::UnitY();
  Eigen::Vector2d half_extent{1.0, 1.0};
  double base_log_intensity = 0.0;
  std::vector<Sinusoid> texture;
  std::vector<Stripes> stripes;

  Eigen::Vector3d Normal() const { return u_axis.cross(v_axis); }
  double LogIntensity(double u, double v) const;
  // Ray parameter s > 0 with origin + s * direction on the rectangle.
  std::optional<double> Intersect(const Eigen::Vector3d& ray_origin,
                                  const Eigen::Vector3d& direction,
                                  Eigen::Vector2d* uv = nullptr) const;
};

struct Scene {
  std::vector<Segment> segments;
  std::vector<TexturedPlane> planes;
  double background_log_intensity = 0.0;
};

struct RigConfig {
  std::vector<CameraCalibration> cameras;
  Trajectory trajectory;  // world-from-rig
  double contrast_threshold = 0.2;
  double noise_rate = 0.0;  // spurious events per pixel per second
  std::uint64_t seed = 1;

  Calibration ToCalibration() const { return {cameras}; }
};

struct GeometricOptions {
  double duration = 1.0;
  int samples_per_edge = 100;
  double time_step = 5e-4;
  int threads = 1;
};

struct PhotometricOptions {
  double duration = 1.0;
  double time_step = 1e-3;
  int threads = 1;
};

// Edge points tracked in each camera; an event fires whenever a point's
// projection has moved at least one pixel since its previous event. Before
// the first event the reference is the centre of the pixel the point
// starts in.
std::vector<EventStream> GenerateEventsGeometric(const Scene& scene, const RigConfig& rig,
                                                 const GeometricOptions& options = {});

// Per-pixel log-intensity crossings of +-contrast_threshold over the planes'
// textures. Throws kConfig when the threshold is not positive.
std::vector<EventStream> GenerateEventsPhotometric(const Scene& scene, const RigConfig& rig,
                                                   const PhotometricOptions& options = {});

// Appends round(rate * w * h * duration) uniformly distributed events and
// re-sorts by time.
void AddNoiseEvents(EventStream& stream, double rate, double duration, std::uint64_t seed);

// Z-depth in the reference frame; NaN where no geometry is hit. Planes are
// dense, segments rasterized; nearest wins.
Image<float> RenderGtDepth(const Scene& scene, const ReferenceView& ref);

Trajectory ConstantVelocityTrajectory(const Eigen::Vector3d& velocity, double duration,
                                      int samples = 101);

// 240x180 cameras, fx = fy = 200, spaced by `baseline` along +x, moving
// sideways at 0.5 m/s for `duration` seconds.
RigConfig DefaultDeskRig(int num_cameras = 2, double baseline = 0.2, double duration = 1.0);

// Random near-vertical segments lying on a fronto-parallel plane at `depth`
// that also serves as dense ground truth.
Scene PlanarEdgeScene(double depth = 2.0, int num_segments = 24, std::uint64_t seed = 7);

// The sinusoids that make up a Stripes term.
std::vector<Sinusoid> SquareWave(double amplitude, const Eigen::Vector2d& frequency,
                                 double phase, int harmonics);

// Fronto-parallel plane at `depth` textured with five near-vertical stripe
// families whose edge contrasts range from 0.08 to 1.2.
Scene TexturedPlaneScene(double depth = 2.0);

}  // namespace evfuse
