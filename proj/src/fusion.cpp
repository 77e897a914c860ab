#include "evfuse/fusion.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <random>
#include <thread>

#include "evfuse/error.hpp"
#include "parallel.hpp"

namespace evfuse {
namespace {

// Callers guarantee n >= 1 and non-negative inputs.
inline double Mean(FusionFunction fn, const double* v, int n) {
  if (n == 1) return v[0];
  switch (fn) {
    case FusionFunction::kMin: {
      double m = v[0];
      for (int i = 1; i < n; ++i) m = std::min(m, v[i]);
      return m;
    }
    case FusionFunction::kMax: {
      double m = v[0];
      for (int i = 1; i < n; ++i) m = std::max(m, v[i]);
      return m;
    }
    case FusionFunction::kArithmetic: {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += v[i];
      return s / n;
    }
    case FusionFunction::kRms: {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += v[i] * v[i];
      return std::sqrt(s / n);
    }
    case FusionFunction::kGeometric: {
      for (int i = 0; i < n; ++i) {
        if (v[i] == 0.0) return 0.0;
      }
      if (n == 2) return std::sqrt(v[0] * v[1]);
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += std::log(v[i]);
      return std::exp(s / n);
    }
    case FusionFunction::kHarmonic: {
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        if (v[i] == 0.0) return 0.0;
        s += 1.0 / v[i];
      }
      return n / s;
    }
  }
  return 0.0;
}

std::string Lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

const char* FusionFunctionName(FusionFunction fn) {
  switch (fn) {
    case FusionFunction::kMin: return "min";
    case FusionFunction::kHarmonic: return "H";
    case FusionFunction::kGeometric: return "G";
    case FusionFunction::kArithmetic: return "A";
    case FusionFunction::kRms: return "RMS";
    case FusionFunction::kMax: return "max";
  }
  return "?";
}

FusionFunction ParseFusionFunction(const std::string& name) {
  const std::string n = Lower(name);
  if (n == "min") return FusionFunction::kMin;
  if (n == "h" || n == "harmonic") return FusionFunction::kHarmonic;
  if (n == "g" || n == "geometric") return FusionFunction::kGeometric;
  if (n == "a" || n == "arithmetic") return FusionFunction::kArithmetic;
  if (n == "rms" || n == "quadratic") return FusionFunction::kRms;
  if (n == "max") return FusionFunction::kMax;
  throw Error(ErrorKind::kConfig, "unknown fusion function '" + name + "'");
}

double FuseValue(FusionFunction fn, std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::kConfig, "fusion of zero values");
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::kDomain, "fusion inputs must be finite and non-negative");
    }
  }
  return Mean(fn, values.data(), static_cast<int>(values.size()));
}

DsiGrid FuseGrids(FusionFunction fn, std::span<const DsiGrid* const> grids,
                  int threads) {
  if (grids.empty()) throw Error(ErrorKind::kConfig, "no grids to fuse");
  for (std::size_t i = 1; i < grids.size(); ++i) grids[0]->CheckSameLayout(*grids[i]);
  DsiGrid out = *grids[0];
  const int n = static_cast<int>(grids.size());
  if (n == 1) return out;
  std::span<float> dst = out.values();
  detail::ParallelRange(dst.size(), threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> buf(n);
    for (std::size_t v = begin; v < end; ++v) {
      for (int g = 0; g < n; ++g) buf[g] = grids[g]->values()[v];
      dst[v] = static_cast<float>(Mean(fn, buf.data(), n));
    }
  });
  return out;
}

DsiGrid FuseGrids(FusionFunction fn, std::span<const DsiGrid> grids, int threads) {
  std::vector<const DsiGrid*> ptrs;
  for (const auto& g : grids) ptrs.push_back(&g);
  return FuseGrids(fn, std::span<const DsiGrid* const>(ptrs), threads);
}

FusionScheme ParseSchemeString(const std::string& text) {
  struct Term {
    FusionFunction fn;
    char axis;
  };
  auto parse_term = [&](std::string tok) {
    tok.erase(std::remove_if(tok.begin(), tok.end(),
                             [](unsigned char c) { return std::isspace(c); }),
              tok.end());
    if (tok.size() < 2) throw Error(ErrorKind::kConfig, "bad scheme term in '" + text + "'");
    const char axis = static_cast<char>(std::tolower(static_cast<unsigned char>(tok.back())));
    if (axis != 'c' && axis != 't') {
      throw Error(ErrorKind::kConfig, "scheme term needs axis suffix c or t: '" + tok + "'");
    }
    tok.pop_back();
    if (!tok.empty() && tok.back() == '_') tok.pop_back();
    return Term{ParseFusionFunction(tok), axis};
  };

  FusionScheme scheme;
  const auto star = text.find('*');
  if (star == std::string::npos) {
    const Term t = parse_term(text);
    if (t.axis == 'c') scheme.camera_fn = t.fn; else scheme.time_fn = t.fn;
    scheme.order = t.axis == 'c' ? FusionOrder::kTimeFirst : FusionOrder::kCameraFirst;
    return scheme;
  }
  const Term outer = parse_term(text.substr(0, star));
  const Term inner = parse_term(text.substr(star + 1));
  if (outer.axis == inner.axis) {
    throw Error(ErrorKind::kConfig, "scheme '" + text + "' must fuse both axes");
  }
  if (inner.axis == 't') {
    scheme.time_fn = inner.fn;
    scheme.camera_fn = outer.fn;
    scheme.order = FusionOrder::kTimeFirst;
  } else {
    scheme.camera_fn = inner.fn;
    scheme.time_fn = outer.fn;
    scheme.order = FusionOrder::kCameraFirst;
  }
  return scheme;
}

std::string SchemeString(const FusionScheme& s) {
  const std::string c = std::string(FusionFunctionName(s.camera_fn)) + "c";
  const std::string t = std::string(FusionFunctionName(s.time_fn)) + "t";
  return s.order == FusionOrder::kTimeFirst ? c + "*" + t : t + "*" + c;
}

SubintervalSplit ParseSplit(const std::string& text) {
  const std::string n = Lower(text);
  if (n == "equal_time" || n == "time") return SubintervalSplit::kEqualTime;
  if (n == "equal_count" || n == "count") return SubintervalSplit::kEqualCount;
  throw Error(ErrorKind::kConfig, "unknown split '" + text + "'");
}

const char* SplitName(SubintervalSplit split) {
  return split == SubintervalSplit::kEqualTime ? "equal_time" : "equal_count";
}

std::vector<int> ShufflePairing(int n, ShuffleMode mode, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorKind::kConfig, "shuffling needs at least 2 sub-intervals");
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  switch (mode) {
    case ShuffleMode::kOff:
      break;
    case ShuffleMode::kCyclic:
      for (int i = 0; i < n; ++i) perm[i] = (i + 1) % n;
      break;
    case ShuffleMode::kSeeded: {
      // Fisher-Yates with rejection sampling; mt19937_64 output is fully
      // specified, so the permutation is portable.
      std::mt19937_64 rng(seed);
      for (int i = n - 1; i > 0; --i) {
        const std::uint64_t range = static_cast<std::uint64_t>(i) + 1;
        const std::uint64_t limit = rng.max() - rng.max() % range;
        std::uint64_t r;
        do {
          r = rng();
        } while (r >= limit);
        std::swap(perm[i], perm[static_cast<int>(r % range)]);
      }
      break;
    }
  }
  return perm;
}

std::vector<std::pair<std::size_t, std::size_t>> SplitSubintervals(
    std::span<const Event> events, int num_subintervals, SubintervalSplit split) {
  if (num_subintervals < 1) throw Error(ErrorKind::kConfig, "need at least one sub-interval");
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  const std::size_t n = events.size();
  const auto ns = static_cast<std::size_t>(num_subintervals);
  if (split == SubintervalSplit::kEqualCount || n == 0) {
    for (std::size_t i = 0; i < ns; ++i) ranges.emplace_back(i * n / ns, (i + 1) * n / ns);
    return ranges;
  }
  const double t0 = events.front().t;
  const double t1 = events.back().t;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < ns; ++i) {
    std::size_t end = n;
    if (i + 1 < ns) {
      const double boundary = t0 + (t1 - t0) * static_cast<double>(i + 1) / ns;
      end = static_cast<std::size_t>(
          std::lower_bound(events.begin() + begin, events.end(), boundary,
                           [](const Event& e, double t) { return e.t < t; }) -
          events.begin());
    }
    ranges.emplace_back(begin, end);
    begin = end;
  }
  return ranges;
}

DsiGrid FuseCameraTime(const FusionScheme& scheme,
                       const std::vector<std::vector<DsiGrid>>& grids, int threads) {
  DsiGrid out;
  FuseCameraTime(scheme, grids, out, threads);
  return out;
}

void FuseCameraTime(const FusionScheme& scheme, const std::vector<std::vector<DsiGrid>>& grids,
                    DsiGrid& out, int threads) {
  const int nc = static_cast<int>(grids.size());
  if (nc == 0) throw Error(ErrorKind::kConfig, "no camera grids");
  const int ns = static_cast<int>(grids[0].size());
  if (ns == 0) throw Error(ErrorKind::kConfig, "no sub-interval grids");
  for (const auto& cam : grids) {
    if (static_cast<int>(cam.size()) != ns) {
      throw Error(ErrorKind::kAlignment, "cameras have different sub-interval counts");
    }
    for (const auto& g : cam) grids[0][0].CheckSameLayout(g);
  }

  std::vector<int> perm(ns);
  for (int i = 0; i < ns; ++i) perm[i] = i;
  if (scheme.shuffle != ShuffleMode::kOff) perm = ShufflePairing(ns, scheme.shuffle, scheme.seed);

  // Flattened pointers: src[c * ns + i] is camera c, sub-interval i, with the
  // shuffle already applied to non-reference cameras.
  std::vector<const float*> src(static_cast<std::size_t>(nc) * ns);
  for (int c = 0; c < nc; ++c) {
    for (int i = 0; i < ns; ++i) {
      const int j = c == 0 ? i : perm[i];
      src[c * ns + i] = grids[c][j].values().data();
    }
  }

  const DsiGrid& first = grids[0][0];
  if (!out.SameLayout(first)) {
    out = DsiGrid(first.ref(), first.num_planes(), first.z_min(), first.z_max(), first.sampling());
  }
  std::span<float> dst = out.values();
  const bool camera_first = scheme.order == FusionOrder::kCameraFirst;
  detail::ParallelRange(dst.size(), threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> inner(std::max(nc, ns));
    std::vector<double> outer(std::max(nc, ns));
    for (std::size_t v = begin; v < end; ++v) {
      if (camera_first) {
        for (int i = 0; i < ns; ++i) {
          for (int c = 0; c < nc; ++c) inner[c] = src[c * ns + i][v];
          outer[i] = Mean(scheme.camera_fn, inner.data(), nc);
        }
        dst[v] = static_cast<float>(Mean(scheme.time_fn, outer.data(), ns));
      } else {
        for (int c = 0; c < nc; ++c) {
          const float* const* row = &src[c * ns];
          for (int i = 0; i < ns; ++i) inner[i] = row[i][v];
          outer[c] = Mean(scheme.time_fn, inner.data(), ns);
        }
        dst[v] = static_cast<float>(Mean(scheme.camera_fn, outer.data(), nc));
      }
    }
  });
}

SchemeResult ApplyScheme(const FusionScheme& scheme, const SchemeInputs& inputs) {
  using Clock = std::chrono::steady_clock;
  if (inputs.cameras.empty()) throw Error(ErrorKind::kConfig, "no cameras");
  if (inputs.trajectory == nullptr) throw Error(ErrorKind::kConfig, "no trajectory");
  if (scheme.num_subintervals < 1) throw Error(ErrorKind::kConfig, "N_s must be >= 1");
  if (scheme.shuffle != ShuffleMode::kOff && scheme.num_subintervals < 2) {
    throw Error(ErrorKind::kConfig, "shuffling needs at least 2 sub-intervals");
  }

  SchemeResult result;
  const DsiGrid empty(inputs.ref, inputs.grid.num_planes, inputs.grid.z_min,
                      inputs.grid.z_max, inputs.grid.sampling);
  std::vector<std::vector<DsiGrid>> grids(inputs.cameras.size());
  const auto t_dsi = Clock::now();
  for (std::size_t c = 0; c < inputs.cameras.size(); ++c) {
    const CameraEvents& cam = inputs.cameras[c];
    if (cam.camera == nullptr) throw Error(ErrorKind::kConfig, "camera without model");
    SweepStats stats;
    const auto ranges = SplitSubintervals(cam.events, scheme.num_subintervals, scheme.split);
    for (std::size_t i = 0; i < ranges.size(); ++i) {
      DsiGrid g = empty;
      const auto [begin, end] = ranges[i];
      if (begin == end) {
        ++result.empty_grids;
        result.warnings.push_back("camera " + std::to_string(c) + " sub-interval " +
                                  std::to_string(i) + " has no events");
      } else {
        stats += SweepEvents(g, cam.events.subspan(begin, end - begin), *cam.camera,
                             *inputs.trajectory, cam.cam_from_body, inputs.sweep);
      }
      grids[c].push_back(std::move(g));
      ++result.grids_built;
    }
    result.camera_stats.push_back(stats);
  }
  result.dsi_seconds = std::chrono::duration<double>(Clock::now() - t_dsi).count();

  const auto t_fuse = Clock::now();
  result.fused = FuseCameraTime(scheme, grids, inputs.fusion_threads);
  result.fusion_seconds = std::chrono::duration<double>(Clock::now() - t_fuse).count();
  return result;
}

}  // namespace evfuse
