#include "evfuse/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "evfuse/dsi.hpp"
#include "evfuse/error.hpp"
#include "parallel.hpp"

namespace evfuse {
namespace {

struct StepPose {
  Eigen::Matrix3d rotation;  // world from camera
  Eigen::Vector3d center;
  Pose cam_from_world;
};

std::vector<StepPose> SamplePoses(const RigConfig& rig, const CameraCalibration& cam,
                                  double duration, double step, std::vector<double>& times) {
  const auto steps = static_cast<std::size_t>(std::ceil(duration / step - 1e-9));
  times.resize(steps + 1);
  std::vector<StepPose> poses(steps + 1);
  TrajectoryCursor cursor(rig.trajectory);
  for (std::size_t i = 0; i <= steps; ++i) {
    times[i] = std::min(duration, i * step);
    const Pose world_from_cam = cam.WorldFromCamera(cursor.At(times[i]));
    poses[i] = {world_from_cam.R(), world_from_cam.translation, world_from_cam.Inverse()};
  }
  return poses;
}

void SortByTime(std::vector<Event>& events) {
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) { return a.t < b.t; });
}

void CheckRig(const RigConfig& rig, double duration) {
  if (rig.cameras.empty()) throw Error(ErrorKind::kConfig, "rig has no cameras");
  if (!(duration > 0.0)) throw Error(ErrorKind::kConfig, "duration must be positive");
  if (rig.trajectory.empty() || rig.trajectory.t_begin() > 0.0 ||
      rig.trajectory.t_end() < duration) {
    throw Error(ErrorKind::kRange, "trajectory does not cover the simulated interval");
  }
}

void AppendEvent(std::vector<Event>& out, const CameraModel& model, const Eigen::Vector2d& p,
                 double t, int polarity) {
  const long x = std::lround(p.x());
  const long y = std::lround(p.y());
  if (x < 0 || y < 0 || x >= model.width() || y >= model.height()) return;
  out.push_back({static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), t,
                 static_cast<std::int8_t>(polarity)});
}

}  // namespace

namespace {

double LanczosSquareCoefficient(double amplitude, int n, int harmonics) {
  const double x = std::numbers::pi * n / (2.0 * harmonics + 1.0);
  return amplitude * (std::sin(x) / x) * 4.0 / (std::numbers::pi * n);
}

}  // namespace

double Stripes::Evaluate(double u, double v) const {
  const double arg = 2.0 * std::numbers::pi * (frequency.x() * u + frequency.y() * v) + phase;
  const double lanczos = std::numbers::pi / (2.0 * harmonics + 1.0);
  // Odd harmonics n by repeated rotation: w = exp(i n arg), q = exp(i n lanczos).
  const std::complex<double> w_step = std::polar(1.0, 2.0 * arg);
  const std::complex<double> q_step = std::polar(1.0, 2.0 * lanczos);
  std::complex<double> w = std::polar(1.0, arg);
  std::complex<double> q = std::polar(1.0, lanczos);
  double value = 0.0;
  for (int k = 0; k < harmonics; ++k) {
    const double n = 2.0 * k + 1.0;
    value += q.imag() / (n * n) * w.imag();
    w *= w_step;
    q *= q_step;
  }
  return value * amplitude * 4.0 / (std::numbers::pi * lanczos);
}

double TexturedPlane::LogIntensity(double u, double v) const {
  double value = base_log_intensity;
  for (const auto& s : stripes) value += s.Evaluate(u, v);
  for (const auto& s : texture) {
    value += s.amplitude *
             std::sin(2.0 * std::numbers::pi * (s.frequency.x() * u + s.frequency.y() * v) +
                      s.phase);
  }
  return value;
}

std::optional<double> TexturedPlane::Intersect(const Eigen::Vector3d& ray_origin,
                                               const Eigen::Vector3d& direction,
                                               Eigen::Vector2d* uv) const {
  const Eigen::Vector3d n = Normal();
  const double denom = n.dot(direction);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const double s = n.dot(origin - ray_origin) / denom;
  if (!(s > 0.0)) return std::nullopt;
  const Eigen::Vector3d rel = ray_origin + s * direction - origin;
  const double u = rel.dot(u_axis);
  const double v = rel.dot(v_axis);
  if (std::abs(u) > half_extent.x() || std::abs(v) > half_extent.y()) return std::nullopt;
  if (uv) *uv = {u, v};
  return s;
}

std::vector<EventStream> GenerateEventsGeometric(const Scene& scene, const RigConfig& rig,
                                                 const GeometricOptions& options) {
  CheckRig(rig, options.duration);
  if (options.samples_per_edge < 1 || !(options.time_step > 0.0)) {
    throw Error(ErrorKind::kConfig, "invalid geometric simulation options");
  }
  std::vector<Eigen::Vector3d> points;
  for (const auto& seg : scene.segments) {
    const int n = options.samples_per_edge;
    for (int i = 0; i < n; ++i) {
      const double s = n == 1 ? 0.5 : static_cast<double>(i) / (n - 1);
      points.push_back(seg.a + s * (seg.b - seg.a));
    }
  }

  std::vector<EventStream> streams;
  for (std::size_t c = 0; c < rig.cameras.size(); ++c) {
    const CameraCalibration& cam = rig.cameras[c];
    const CameraModel& model = cam.model;
    std::vector<double> times;
    const auto poses = SamplePoses(rig, cam, options.duration, options.time_step, times);

    std::vector<std::vector<Event>> per_point(points.size());
    detail::ParallelRange(
        points.size(), options.threads,
        [&](std::size_t begin, std::size_t end) {
          for (std::size_t p = begin; p < end; ++p) {
            auto& out = per_point[p];
            std::optional<Eigen::Vector2d> last;
            Eigen::Vector2d prev = Eigen::Vector2d::Zero();
            double t_prev = 0.0;
            for (std::size_t i = 0; i < poses.size(); ++i) {
              const Eigen::Vector3d pc = poses[i].cam_from_world * points[p];
              if (pc.z() <= 1e-9) {
                last.reset();
                continue;
              }
              const Eigen::Vector2d proj = model.ProjectDistorted(pc.head<2>() / pc.z());
              if (!last) {
                last = Eigen::Vector2d(std::round(proj.x()), std::round(proj.y()));
                prev = proj;
                t_prev = times[i];
                continue;
              }
              for (;;) {
                const double d = (proj - *last).norm();
                if (d < 1.0) break;
                const double d_prev = (prev - *last).norm();
                const double frac = d > d_prev ? std::clamp((1.0 - d_prev) / (d - d_prev), 0.0, 1.0)
                                               : 1.0;
                const Eigen::Vector2d hit = prev + frac * (proj - prev);
                const double t_hit = t_prev + frac * (times[i] - t_prev);
                AppendEvent(out, model, hit, t_hit, hit.x() >= last->x() ? 1 : -1);
                last = hit;
                prev = hit;
                t_prev = t_hit;
              }
              prev = proj;
              t_prev = times[i];
            }
          }
        },
        1);

    EventStream stream;
    stream.camera_id = cam.id;
    stream.width = model.width();
    stream.height = model.height();
    for (auto& v : per_point) stream.events.insert(stream.events.end(), v.begin(), v.end());
    SortByTime(stream.events);
    if (rig.noise_rate > 0.0) {
      AddNoiseEvents(stream, rig.noise_rate, options.duration, rig.seed + 7919 * c);
    }
    streams.push_back(std::move(stream));
  }
  return streams;
}

std::vector<EventStream> GenerateEventsPhotometric(const Scene& scene, const RigConfig& rig,
                                                   const PhotometricOptions& options) {
  const double theta = rig.contrast_threshold;
  if (!(theta > 0.0)) throw Error(ErrorKind::kConfig, "contrast threshold must be positive");
  if (!(options.time_step > 0.0)) throw Error(ErrorKind::kConfig, "time step must be positive");
  CheckRig(rig, options.duration);

  std::vector<EventStream> streams;
  for (std::size_t c = 0; c < rig.cameras.size(); ++c) {
    const CameraCalibration& cam = rig.cameras[c];
    const CameraModel& model = cam.model;
    const UndistortionMap undistort(model);
    std::vector<double> times;
    const auto poses = SamplePoses(rig, cam, options.duration, options.time_step, times);
    const int w = model.width(), h = model.height();

    auto log_intensity = [&](const StepPose& pose, const Eigen::Vector3d& bearing) {
      const Eigen::Vector3d dir = pose.rotation * bearing;
      double best = std::numeric_limits<double>::infinity();
      double value = scene.background_log_intensity;
      for (const auto& plane : scene.planes) {
        Eigen::Vector2d uv;
        const auto s = plane.Intersect(pose.center, dir, &uv);
        if (s && *s < best) {
          best = *s;
          value = plane.LogIntensity(uv.x(), uv.y());
        }
      }
      return value;
    };

    std::vector<std::vector<Event>> per_row(h);
    detail::ParallelRange(
        static_cast<std::size_t>(h), options.threads,
        [&](std::size_t begin, std::size_t end) {
          for (std::size_t y = begin; y < end; ++y) {
            auto& out = per_row[y];
            for (int x = 0; x < w; ++x) {
              if (!undistort.Valid(x, static_cast<int>(y))) continue;
              const Eigen::Vector2d& n = undistort(x, static_cast<int>(y));
              const Eigen::Vector3d bearing(n.x(), n.y(), 1.0);
              double ref_level = log_intensity(poses[0], bearing);
              double prev = ref_level;
              for (std::size_t i = 1; i < poses.size(); ++i) {
                const double cur = log_intensity(poses[i], bearing);
                while (cur - ref_level >= theta || ref_level - cur >= theta) {
                  const int pol = cur > ref_level ? 1 : -1;
                  const double level = ref_level + pol * theta;
                  const double frac = std::clamp((level - prev) / (cur - prev), 0.0, 1.0);
                  const double t = times[i - 1] + frac * (times[i] - times[i - 1]);
                  out.push_back({static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), t,
                                 static_cast<std::int8_t>(pol)});
                  ref_level = level;
                }
                prev = cur;
              }
            }
          }
        },
        1);

    EventStream stream;
    stream.camera_id = cam.id;
    stream.width = w;
    stream.height = h;
    for (auto& v : per_row) stream.events.insert(stream.events.end(), v.begin(), v.end());
    SortByTime(stream.events);
    if (rig.noise_rate > 0.0) {
      AddNoiseEvents(stream, rig.noise_rate, options.duration, rig.seed + 7919 * c);
    }
    streams.push_back(std::move(stream));
  }
  return streams;
}

void AddNoiseEvents(EventStream& stream, double rate, double duration, std::uint64_t seed) {
  if (rate < 0.0 || duration < 0.0) throw Error(ErrorKind::kConfig, "negative noise rate");
  const auto count = static_cast<std::size_t>(
      std::llround(rate * stream.width * stream.height * duration));
  std::mt19937_64 rng(seed);
  auto uniform = [&rng] { return std::generate_canonical<double, 53>(rng); };
  for (std::size_t i = 0; i < count; ++i) {
    const auto x = static_cast<std::uint16_t>(std::min<double>(stream.width - 1, uniform() * stream.width));
    const auto y = static_cast<std::uint16_t>(std::min<double>(stream.height - 1, uniform() * stream.height));
    const double t = uniform() * duration;
    const auto p = static_cast<std::int8_t>(uniform() < 0.5 ? -1 : 1);
    stream.events.push_back({x, y, t, p});
  }
  SortByTime(stream.events);
}

Image<float> RenderGtDepth(const Scene& scene, const ReferenceView& ref) {
  const CameraModel& model = ref.camera;
  const int w = model.width(), h = model.height();
  const float nan = std::numeric_limits<float>::quiet_NaN();
  Image<float> depth(w, h, nan);
  const Eigen::Matrix3d rotation = ref.world_from_ref.R();
  const Eigen::Vector3d center = ref.world_from_ref.translation;

  if (!scene.planes.empty()) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const Eigen::Vector2d n = model.PixelToNormalized({x, y});
        const Eigen::Vector3d dir = rotation * Eigen::Vector3d(n.x(), n.y(), 1.0);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& plane : scene.planes) {
          const auto s = plane.Intersect(center, dir);
          if (s) best = std::min(best, *s);
        }
        if (std::isfinite(best)) depth(x, y) = static_cast<float>(best);
      }
    }
  }

  const Pose ref_from_world = ref.world_from_ref.Inverse();
  for (const auto& seg : scene.segments) {
    const Eigen::Vector3d a = ref_from_world * seg.a;
    const Eigen::Vector3d b = ref_from_world * seg.b;
    const double min_z = std::min(a.z(), b.z());
    if (min_z <= 1e-9) continue;
    const double span_px = std::max(model.fx(), model.fy()) * (b - a).norm() / min_z;
    const int n = std::max(2, static_cast<int>(std::ceil(span_px * 4.0)) + 1);
    for (int i = 0; i < n; ++i) {
      const Eigen::Vector3d p = a + (static_cast<double>(i) / (n - 1)) * (b - a);
      const Eigen::Vector2d px = model.ProjectNormalized(p.head<2>() / p.z());
      const long x = std::lround(px.x()), y = std::lround(px.y());
      if (x < 0 || y < 0 || x >= w || y >= h) continue;
      float& d = depth(static_cast<int>(x), static_cast<int>(y));
      if (std::isnan(d) || p.z() < d) d = static_cast<float>(p.z());
    }
  }
  return depth;
}

Trajectory ConstantVelocityTrajectory(const Eigen::Vector3d& velocity, double duration,
                                      int samples) {
  if (samples < 2 || !(duration > 0.0)) {
    throw Error(ErrorKind::kConfig, "trajectory needs >= 2 samples and a positive duration");
  }
  std::vector<PoseSample> out;
  for (int i = 0; i < samples; ++i) {
    const double t = duration * i / (samples - 1);
    out.push_back({t, Pose::FromTranslation(velocity * t)});
  }
  return Trajectory(std::move(out));
}

RigConfig DefaultDeskRig(int num_cameras, double baseline, double duration) {
  if (num_cameras < 1) throw Error(ErrorKind::kConfig, "rig needs at least one camera");
  RigConfig rig;
  for (int c = 0; c < num_cameras; ++c) {
    CameraCalibration cam;
    cam.id = "cam" + std::to_string(c);
    cam.model = CameraModel(200.0, 200.0, 119.5, 89.5, 240, 180);
    cam.cam_from_rig = Pose::FromTranslation({-baseline * c, 0.0, 0.0});
    rig.cameras.push_back(cam);
  }
  rig.trajectory = ConstantVelocityTrajectory({0.5, 0.0, 0.0}, duration);
  return rig;
}

Scene PlanarEdgeScene(double depth, int num_segments, std::uint64_t seed) {
  Scene scene;
  TexturedPlane support;
  support.origin = {0.5, 0.0, depth};
  support.half_extent = {4.0 * depth, 3.0 * depth};
  scene.planes.push_back(support);

  // Spread over the region seen by the default rig during its motion.
  const double half_w = 0.6 * depth, half_h = 0.4 * depth;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(-half_w, half_w + 0.7);
  std::uniform_real_distribution<double> uy(-half_h, half_h);
  std::uniform_real_distribution<double> angle(-1.0, 1.0);
  std::uniform_real_distribution<double> length(0.15 * depth, 0.3 * depth);
  for (int i = 0; i < num_segments; ++i) {
    const Eigen::Vector3d mid(ux(rng), uy(rng), depth);
    const double a = angle(rng);  // radians from vertical
    const double half = 0.5 * length(rng);
    const Eigen::Vector3d dir(std::sin(a), std::cos(a), 0.0);
    scene.segments.push_back({mid - half * dir, mid + half * dir});
  }
  return scene;
}

std::vector<Sinusoid> SquareWave(double amplitude, const Eigen::Vector2d& frequency,
                                 double phase, int harmonics) {
  std::vector<Sinusoid> terms;
  for (int k = 0; k < harmonics; ++k) {
    const int n = 2 * k + 1;
    terms.push_back({LanczosSquareCoefficient(amplitude, n, harmonics), n * frequency, n * phase});
  }
  return terms;
}

Scene TexturedPlaneScene(double depth) {
  struct Family {
    double amplitude;
    double fx, fy;
    double phase;
  };
  // Edge contrast is twice the amplitude.
  constexpr Family kFamilies[] = {
      {0.04, 2.3, 0.2, 0.4},   {0.08, 1.9, -0.15, 2.1}, {0.15, 2.1, 0.1, 1.3},
      {0.30, 1.7, -0.05, 0.7}, {0.60, 2.0, 0.0, 2.9},
  };
  Scene scene;
  TexturedPlane plane;
  plane.origin = {0.5, 0.0, depth};
  plane.half_extent = {4.0 * depth, 3.0 * depth};
  for (const auto& f : kFamilies) {
    plane.stripes.push_back({f.amplitude, {f.fx / depth, f.fy / depth}, f.phase, 32});
  }
  scene.planes.push_back(plane);
  return scene;
}

}  // namespace evfuse
