#include "evfuse/depth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "evfuse/error.hpp"

namespace evfuse {
namespace {

constexpr float kNaN = std::numeric_limits<float>::quiet_NaN();

int Reflect101(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

}  // namespace

std::size_t DepthResult::MaskCount() const {
  std::size_t n = 0;
  for (auto m : mask.data()) n += m != 0;
  return n;
}

DepthResult ExtractDepthConfidence(const DsiGrid& grid, bool subvoxel_refinement) {
  const int w = grid.width(), h = grid.height(), nz = grid.num_planes();
  DepthResult r;
  r.depth = Image<float>(w, h, kNaN);
  r.confidence = Image<float>(w, h, 0.0f);
  r.mask = Image<std::uint8_t>(w, h, 0);
  r.z_min = grid.z_min();
  r.z_max = grid.z_max();

  std::vector<int> best(static_cast<std::size_t>(w) * h, 0);
  // Planes are ordered near to far, so a strict comparison keeps the
  // nearest plane on ties.
  std::vector<float>& conf = r.confidence.data();
  for (int k = 0; k < nz; ++k) {
    const auto plane = grid.plane(k);
    for (std::size_t i = 0; i < plane.size(); ++i) {
      if (plane[i] > conf[i]) {
        conf[i] = plane[i];
        best[i] = k;
      }
    }
  }

  const bool inverse = grid.sampling() == DepthSampling::kInverseDepth;
  const auto& depths = grid.depths();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (!(conf[i] > 0.0f)) continue;
      const int k = best[i];
      double z = depths[k];
      if (subvoxel_refinement && k > 0 && k + 1 < nz) {
        const double fm = grid.at(x, y, k - 1), f0 = grid.at(x, y, k),
                     fp = grid.at(x, y, k + 1);
        const double denom = fm - 2.0 * f0 + fp;
        if (denom < 0.0) {
          const double offset = std::clamp(0.5 * (fm - fp) / denom, -0.5, 0.5);
          const int k2 = offset < 0 ? k - 1 : k + 1;
          const double a = std::abs(offset);
          if (inverse) {
            z = 1.0 / ((1.0 - a) / depths[k] + a / depths[k2]);
          } else {
            z = (1.0 - a) * depths[k] + a * depths[k2];
          }
        }
      }
      r.depth(x, y) = static_cast<float>(z);
    }
  }
  return r;
}

RobustMaxAccumulator::RobustMaxAccumulator(double percentile)
    : percentile_(percentile) {
  if (!(percentile >= 0.0 && percentile <= 100.0)) {
    throw Error(ErrorKind::kConfig, "percentile must be in [0, 100]");
  }
}

void RobustMaxAccumulator::Add(double packet_max) { maxima_.push_back(packet_max); }

void RobustMaxAccumulator::AddMap(const Image<float>& confidence) {
  float m = 0.0f;
  for (float v : confidence.data()) m = std::max(m, v);
  Add(m);
}

double RobustMaxAccumulator::Value() const {
  if (maxima_.empty()) return 0.0;
  std::vector<double> sorted = maxima_;
  std::sort(sorted.begin(), sorted.end());
  const double pos = percentile_ / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Image<float> NormalizeConfidence(const Image<float>& confidence, double robust_max) {
  Image<float> out(confidence.width(), confidence.height(), 0.0f);
  if (!(robust_max > 0.0)) return out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = 255.0 * confidence.data()[i] / robust_max;
    out.data()[i] = static_cast<float>(std::clamp(v, 0.0, 255.0));
  }
  return out;
}

double AgtSigma(int kernel_size) {
  return 0.3 * ((kernel_size - 1) * 0.5 - 1.0) + 0.8;
}

Image<std::uint8_t> AgtMask(const Image<float>& c, const AgtOptions& options) {
  const int k = options.kernel_size;
  if (k < 1 || k % 2 == 0) throw Error(ErrorKind::kConfig, "AGT kernel size must be odd");
  const int w = c.width(), h = c.height();
  const int r = k / 2;
  const double sigma = AgtSigma(k);
  std::vector<double> kernel(k);
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    const double d = i - r;
    kernel[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += kernel[i];
  }
  for (double& v : kernel) v /= sum;

  Image<double> horizontal(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += kernel[i] * c(Reflect101(x + i - r, w), y);
      horizontal(x, y) = acc;
    }
  }
  Image<std::uint8_t> mask(w, h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double mean = 0.0;
      for (int i = 0; i < k; ++i) mean += kernel[i] * horizontal(x, Reflect101(y + i - r, h));
      const double v = c(x, y);
      mask(x, y) = (v > mean + options.offset && v > 0.0) ? 1 : 0;
    }
  }
  return mask;
}

DepthResult ApplyMask(DepthResult result, const Image<std::uint8_t>& mask) {
  if (mask.width() != result.depth.width() || mask.height() != result.depth.height()) {
    throw Error(ErrorKind::kAlignment, "mask size differs from depth map");
  }
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const float z = result.depth.data()[i];
    result.mask.data()[i] = (mask.data()[i] != 0 && std::isfinite(z)) ? 1 : 0;
  }
  return result;
}

DepthResult MedianFilter(const DepthResult& in, int kernel_size, int min_neighbors) {
  if (kernel_size < 1 || kernel_size % 2 == 0) {
    throw Error(ErrorKind::kConfig, "median kernel size must be odd");
  }
  DepthResult out = in;
  const int w = in.depth.width(), h = in.depth.height(), r = kernel_size / 2;
  std::vector<float> window;
  window.reserve(static_cast<std::size_t>(kernel_size) * kernel_size);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!in.Has(x, y)) continue;
      window.clear();
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (in.mask.Contains(xx, yy) && in.Has(xx, yy)) window.push_back(in.depth(xx, yy));
        }
      }
      if (static_cast<int>(window.size()) - 1 < min_neighbors) {
        out.mask(x, y) = 0;
        out.depth(x, y) = kNaN;
        continue;
      }
      auto mid = window.begin() + (window.size() - 1) / 2;
      std::nth_element(window.begin(), mid, window.end());
      out.depth(x, y) = *mid;
    }
  }
  return out;
}

DepthResult MorphFill(const DepthResult& in) {
  DepthResult out = in;
  const int w = in.depth.width(), h = in.depth.height();
  constexpr int kDx[4] = {1, -1, 0, 0};
  constexpr int kDy[4] = {0, 0, 1, -1};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!in.Has(x, y)) continue;
      const float z = in.depth(x, y);
      for (int n = 0; n < 4; ++n) {
        const int xx = x + kDx[n], yy = y + kDy[n];
        if (!in.mask.Contains(xx, yy) || in.Has(xx, yy)) continue;
        if (!out.Has(xx, yy) || z < out.depth(xx, yy)) {
          out.depth(xx, yy) = z;
          out.mask(xx, yy) = 1;
        }
      }
    }
  }
  return out;
}

std::vector<Eigen::Vector3d> ToPointCloud(const DepthResult& result,
                                          const ReferenceView& ref) {
  std::vector<Eigen::Vector3d> cloud;
  cloud.reserve(result.MaskCount());
  for (int y = 0; y < result.depth.height(); ++y) {
    for (int x = 0; x < result.depth.width(); ++x) {
      if (!result.Has(x, y)) continue;
      const double z = result.depth(x, y);
      const Eigen::Vector2d n = ref.camera.PixelToNormalized({double(x), double(y)});
      cloud.push_back(ref.world_from_ref * Eigen::Vector3d(n.x() * z, n.y() * z, z));
    }
  }
  return cloud;
}

DepthResult PostProcess(const DepthResult& dense, double robust_max,
                        const PostProcessOptions& options) {
  const Image<float> normalized = NormalizeConfidence(dense.confidence, robust_max);
  DepthResult r = ApplyMask(dense, AgtMask(normalized, options.agt));
  if (options.median) r = MedianFilter(r, options.median_kernel);
  if (options.morph_fill) r = MorphFill(r);
  for (std::size_t i = 0; i < r.mask.size(); ++i) {
    if (r.mask.data()[i] == 0) r.depth.data()[i] = std::numeric_limits<float>::quiet_NaN();
  }
  return r;
}

}  // namespace evfuse
