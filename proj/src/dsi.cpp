#include "evfuse/dsi.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <fstream>
#include <ostream>
#include <thread>

#include "evfuse/error.hpp"

namespace evfuse {

std::vector<double> PlaneDepths(int num_planes, double z_min, double z_max,
                                DepthSampling sampling) {
  if (num_planes < 2) throw Error(ErrorKind::kConfig, "need at least 2 depth planes");
  if (!(z_min > 0.0) || !(z_max > z_min)) {
    throw Error(ErrorKind::kConfig, "depth range must satisfy 0 < z_min < z_max");
  }
  std::vector<double> depths(num_planes);
  const double last = num_planes - 1;
  for (int k = 0; k < num_planes; ++k) {
    if (sampling == DepthSampling::kInverseDepth) {
      const double inv = 1.0 / z_min + k * (1.0 / z_max - 1.0 / z_min) / last;
      depths[k] = 1.0 / inv;
    } else {
      depths[k] = z_min + k * (z_max - z_min) / last;
    }
  }
  depths.front() = z_min;
  depths.back() = z_max;
  return depths;
}

DsiGrid::DsiGrid(const ReferenceView& ref, int num_planes, double z_min,
                 double z_max, DepthSampling sampling)
    : ref_(ref),
      width_(ref.camera.width()),
      height_(ref.camera.height()),
      num_planes_(num_planes),
      z_min_(z_min),
      z_max_(z_max),
      sampling_(sampling),
      depths_(PlaneDepths(num_planes, z_min, z_max, sampling)),
      values_(static_cast<std::size_t>(width_) * height_ * num_planes, 0.0f) {}

double DsiGrid::Mass() const {
  double sum = 0.0;
  for (float v : values_) sum += v;
  return sum;
}

void DsiGrid::SetZero() { std::fill(values_.begin(), values_.end(), 0.0f); }

void DsiGrid::Add(const DsiGrid& other) {
  CheckSameLayout(other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
}

void DsiGrid::Scale(float factor) {
  for (float& v : values_) v *= factor;
}

namespace {

bool SamePose(const Pose& a, const Pose& b) {
  return a.rotation.coeffs() == b.rotation.coeffs() && a.translation == b.translation;
}

bool SameCamera(const CameraModel& a, const CameraModel& b) {
  return a.fx() == b.fx() && a.fy() == b.fy() && a.cx() == b.cx() &&
         a.cy() == b.cy() && a.width() == b.width() && a.height() == b.height();
}

}  // namespace

bool DsiGrid::SameLayout(const DsiGrid& other) const {
  return width_ == other.width_ && height_ == other.height_ &&
         num_planes_ == other.num_planes_ && depths_ == other.depths_ &&
         SamePose(ref_.world_from_ref, other.ref_.world_from_ref) &&
         SameCamera(ref_.camera, other.ref_.camera);
}

void DsiGrid::CheckSameLayout(const DsiGrid& other) const {
  if (width_ != other.width_ || height_ != other.height_ ||
      num_planes_ != other.num_planes_) {
    throw Error(ErrorKind::kAlignment, "DSI dimensions differ");
  }
  if (depths_ != other.depths_) {
    throw Error(ErrorKind::kAlignment, "DSI depth sampling differs");
  }
  if (!SamePose(ref_.world_from_ref, other.ref_.world_from_ref) ||
      !SameCamera(ref_.camera, other.ref_.camera)) {
    throw Error(ErrorKind::kAlignment, "DSIs are anchored at different reference views");
  }
}

UndistortionMap::UndistortionMap(const CameraModel& camera)
    : camera_(camera),
      normalized_(static_cast<std::size_t>(camera.width()) * camera.height()),
      valid_(normalized_.size(), 1) {
  for (int y = 0; y < camera.height(); ++y) {
    for (int x = 0; x < camera.width(); ++x) {
      try {
        normalized_[Index(x, y)] = camera.UndistortPixel({double(x), double(y)});
      } catch (const Error&) {
        valid_[Index(x, y)] = 0;
      }
    }
  }
}

namespace {

void SweepChunk(DsiGrid& grid, std::span<const Event> events,
                const UndistortionMap& camera, const Trajectory& trajectory,
                const Pose& body_from_cam, const SweepOptions& options,
                SweepStats& stats) {
  const ReferenceView& ref = grid.ref();
  const double rfx = ref.camera.fx(), rfy = ref.camera.fy();
  const double rcx = ref.camera.cx(), rcy = ref.camera.cy();
  const std::vector<double>& depths = grid.depths();
  const int num_planes = grid.num_planes();
  const int cam_w = camera.camera().width();
  const int cam_h = camera.camera().height();
  const double t_lo = trajectory.empty() ? 0.0 : trajectory.t_begin();
  const double t_hi = trajectory.empty() ? 0.0 : trajectory.t_end();

  TrajectoryCursor cursor(trajectory, options.clamp_trajectory);
  double dropped = 0.0;
  for (const Event& e : events) {
    ++stats.events_in;
    if (e.x >= cam_w || e.y >= cam_h || !camera.Valid(e.x, e.y)) {
      ++stats.events_skipped;
      continue;
    }
    if (!options.clamp_trajectory && (e.t < t_lo || e.t > t_hi)) {
      ++stats.events_skipped;
      continue;
    }
    const Pose world_from_cam = cursor.At(e.t) * body_from_cam;
    const Pose cam_from_ref = world_from_cam.Inverse() * ref.world_from_ref;
    const PlaneSweepRay ray(cam_from_ref.R(), cam_from_ref.translation,
                            camera(e.x, e.y));
    bool any = false;
    for (int k = 0; k < num_planes; ++k) {
      double x, y;
      if (!ray.At(depths[k], x, y)) {
        ++stats.degenerate_warps;
        dropped += options.weight;
        continue;
      }
      any = true;
      dropped += grid.BilinearVote(k, rfx * x + rcx, rfy * y + rcy, options.weight);
    }
    if (any) ++stats.events_swept; else ++stats.events_skipped;
  }
  stats.weight_dropped += dropped;
}

}  // namespace

SweepStats SweepEvents(DsiGrid& grid, std::span<const Event> events,
                       const UndistortionMap& camera, const Trajectory& trajectory,
                       const Pose& cam_from_body, const SweepOptions& options) {
  if (trajectory.empty()) throw Error(ErrorKind::kConfig, "empty trajectory");
  const Pose body_from_cam = cam_from_body.Inverse();
  SweepStats stats;
  const std::size_t threads = static_cast<std::size_t>(std::max(1, options.threads));
  if (threads == 1 || events.size() < 2 * threads) {
    SweepChunk(grid, events, camera, trajectory, body_from_cam, options, stats);
    return stats;
  }

  std::vector<DsiGrid> partial(threads, grid);
  std::vector<SweepStats> partial_stats(threads);
  for (auto& g : partial) g.SetZero();
  const std::size_t chunk = (events.size() + threads - 1) / threads;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < threads; ++w) {
    const std::size_t begin = std::min(events.size(), w * chunk);
    const std::size_t end = std::min(events.size(), begin + chunk);
    workers.emplace_back([&, w, begin, end] {
      SweepChunk(partial[w], events.subspan(begin, end - begin), camera,
                 trajectory, body_from_cam, options, partial_stats[w]);
    });
  }
  for (auto& t : workers) t.join();
  for (std::size_t w = 0; w < threads; ++w) {
    grid.Add(partial[w]);
    stats += partial_stats[w];
  }
  return stats;
}

DsiProjections MaxProjections(const DsiGrid& grid) {
  const int w = grid.width(), h = grid.height(), nz = grid.num_planes();
  DsiProjections p{Image<float>(w, h), Image<float>(w, nz), Image<float>(nz, h)};
  for (int k = 0; k < nz; ++k) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const float v = grid.at(x, y, k);
        p.front(x, y) = std::max(p.front(x, y), v);
        p.top(x, k) = std::max(p.top(x, k), v);
        p.side(k, y) = std::max(p.side(k, y), v);
      }
    }
  }
  return p;
}

namespace {

template <typename T>
void PutLe(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T GetLe(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw Error(ErrorKind::kParse, "truncated DSI dump");
  }
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void WriteDsiDump(std::ostream& out, const DsiGrid& grid) {
  PutLe<std::uint32_t>(out, grid.width());
  PutLe<std::uint32_t>(out, grid.height());
  PutLe<std::uint32_t>(out, grid.num_planes());
  PutLe<double>(out, grid.z_min());
  PutLe<double>(out, grid.z_max());
  for (float v : grid.values()) PutLe<float>(out, v);
}

void WriteDsiDumpFile(const std::string& path, const DsiGrid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  WriteDsiDump(out, grid);
}

DsiDump ReadDsiDump(std::istream& in) {
  DsiDump d;
  d.width = static_cast<int>(GetLe<std::uint32_t>(in));
  d.height = static_cast<int>(GetLe<std::uint32_t>(in));
  d.num_planes = static_cast<int>(GetLe<std::uint32_t>(in));
  d.z_min = GetLe<double>(in);
  d.z_max = GetLe<double>(in);
  const std::size_t n = static_cast<std::size_t>(d.width) * d.height * d.num_planes;
  d.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.values[i] = GetLe<float>(in);
  return d;
}

}  // namespace evfuse
