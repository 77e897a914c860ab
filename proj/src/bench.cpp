#include "evfuse/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "evfuse/depth.hpp"
#include "evfuse/dsi.hpp"
#include "evfuse/error.hpp"
#include "evfuse/fusion.hpp"
#include "evfuse/simulator.hpp"

namespace evfuse {
namespace {

using Clock = std::chrono::steady_clock;

Timing Summarize(std::vector<double> samples) {
  Timing t;
  t.repetitions = static_cast<int>(samples.size());
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= samples.size();
  double var = 0.0;
  for (double s : samples) var += (s - mean) * (s - mean);
  var /= samples.size();
  t.cv = mean > 0.0 ? std::sqrt(var) / mean : 0.0;
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  t.median_seconds = n % 2 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
  return t;
}

}  // namespace

ScalingFit FitLogLog(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorKind::kConfig, "log-log fit needs >= 2 paired samples");
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw Error(ErrorKind::kDomain, "log of non-positive");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
  }
  const double cov = sxy - sx * sy / n;
  const double vx = sxx - sx * sx / n;
  const double vy = syy - sy * sy / n;
  ScalingFit fit;
  if (vx <= 0.0) throw Error(ErrorKind::kDomain, "log-log fit needs distinct x values");
  fit.slope = cov / vx;
  fit.intercept = (sy - fit.slope * sx) / n;
  fit.r2 = vy > 0.0 ? cov * cov / (vx * vy) : 1.0;
  return fit;
}

Timing TimeStage(const std::function<void()>& setup, const std::function<void()>& stage,
                 int repetitions, int max_repetitions, double cv_budget) {
  std::vector<double> samples;
  auto run = [&](int n) {
    for (int i = 0; i < n; ++i) {
      if (setup) setup();
      const auto t0 = Clock::now();
      stage();
      samples.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
    }
  };
  run(std::max(1, repetitions));
  Timing t = Summarize(samples);
  while (t.cv > cv_budget && static_cast<int>(samples.size()) < max_repetitions) {
    run(std::min(static_cast<int>(samples.size()), max_repetitions - static_cast<int>(samples.size())));
    t = Summarize(samples);
  }
  return t;
}

std::vector<Timing> TimeInterleaved(std::span<const Stage> stages, int repetitions,
                                    int max_repetitions, double cv_budget) {
  std::vector<std::vector<double>> samples(stages.size());
  std::vector<Timing> out(stages.size());
  auto round = [&] {
    for (std::size_t k = 0; k < stages.size(); ++k) {
      if (stages[k].setup) stages[k].setup();
      const auto t0 = Clock::now();
      stages[k].run();
      samples[k].push_back(std::chrono::duration<double>(Clock::now() - t0).count());
    }
  };
  const int first = std::max(1, repetitions);
  for (int r = 0; r < first; ++r) round();
  for (int r = first;; ++r) {
    bool settled = true;
    for (std::size_t k = 0; k < stages.size(); ++k) {
      out[k] = Summarize(samples[k]);
      settled = settled && out[k].cv <= cv_budget;
    }
    if (settled || r >= max_repetitions) break;
    round();
  }
  return out;
}

BenchReport RunBench(const BenchOptions& o) {
  if (o.event_counts.size() < 2 || o.plane_counts.size() < 2) {
    throw Error(ErrorKind::kConfig, "bench needs at least two sizes per sweep");
  }
  std::size_t needed = std::max(o.fixed_events,
                                *std::max_element(o.event_counts.begin(), o.event_counts.end()));

  // Enough segments that one second of motion yields the largest packet.
  RigConfig rig = DefaultDeskRig(2);
  GeometricOptions gen;
  gen.samples_per_edge = 100;
  int segments = std::max<int>(8, static_cast<int>(needed / (gen.samples_per_edge * 40)) + 4);
  std::vector<EventStream> streams;
  for (int attempt = 0; attempt < 6; ++attempt) {
    streams = GenerateEventsGeometric(PlanarEdgeScene(2.0, segments, o.seed), rig, gen);
    if (streams[0].size() >= needed && streams[1].size() >= needed) break;
    segments *= 2;
  }
  if (streams[0].size() < needed || streams[1].size() < needed) {
    throw Error(ErrorKind::kConfig, "simulator produced too few events for the bench");
  }

  const UndistortionMap map0(rig.cameras[0].model), map1(rig.cameras[1].model);
  const ReferenceView ref{rig.cameras[0].WorldFromCamera(rig.trajectory.Interpolate(0.5)),
                          rig.cameras[0].model.Pinhole()};
  auto prefix = [&](int cam, std::size_t n) {
    return std::span<const Event>(streams[cam].events).first(n);
  };

  BenchReport report;
  auto add = [&](const std::string& sweep, double x, const Timing& t) {
    report.rows.push_back({sweep, x, t});
    return t.median_seconds;
  };

  // DSI creation vs N_e.
  std::vector<DsiGrid> per_size_grids;
  std::vector<Stage> stages;
  per_size_grids.reserve(o.event_counts.size());
  for (std::size_t ne : o.event_counts) {
    DsiGrid& grid = per_size_grids.emplace_back(ref, o.fixed_planes, 1.0, 4.0);
    stages.push_back({[&grid] { grid.SetZero(); },
                      [&, ne] { SweepEvents(grid, prefix(0, ne), map0, rig.trajectory,
                                            rig.cameras[0].cam_from_rig); }});
  }
  std::vector<double> xs, ys;
  auto timings = TimeInterleaved(stages, o.repetitions, o.max_repetitions, o.cv_budget);
  for (std::size_t i = 0; i < timings.size(); ++i) {
    const double ne = static_cast<double>(o.event_counts[i]);
    xs.push_back(ne);
    ys.push_back(add("events", ne, timings[i]));
  }
  report.dsi_vs_events = FitLogLog(xs, ys);

  // DSI creation vs N_Z.
  {
    std::vector<DsiGrid> grids;
    grids.reserve(o.plane_counts.size());
    stages.clear();
    for (int nz : o.plane_counts) {
      DsiGrid& grid = grids.emplace_back(ref, nz, 1.0, 4.0);
      stages.push_back({[&grid] { grid.SetZero(); },
                        [&] { SweepEvents(grid, prefix(0, o.fixed_events), map0, rig.trajectory,
                                          rig.cameras[0].cam_from_rig); }});
    }
    timings = TimeInterleaved(stages, o.repetitions, o.max_repetitions, o.cv_budget);
    xs.clear();
    ys.clear();
    for (std::size_t i = 0; i < timings.size(); ++i) {
      xs.push_back(o.plane_counts[i]);
      ys.push_back(add("planes", o.plane_counts[i], timings[i]));
    }
    report.dsi_vs_planes = FitLogLog(xs, ys);
  }

  // DSI creation, one camera vs two, same events per camera.
  {
    const UndistortionMap* maps[] = {&map0, &map1};
    std::vector<std::vector<DsiGrid>> grids(2);
    stages.clear();
    for (int nc = 1; nc <= 2; ++nc) {
      auto& set = grids[nc - 1];
      set.assign(nc, DsiGrid(ref, o.fixed_planes, 1.0, 4.0));
      stages.push_back({[&set] { for (auto& g : set) g.SetZero(); },
                        [&, nc] {
                          for (int c = 0; c < nc; ++c) {
                            SweepEvents(set[c], prefix(c, o.fixed_events), *maps[c],
                                        rig.trajectory, rig.cameras[c].cam_from_rig);
                          }
                        }});
    }
    timings = TimeInterleaved(stages, o.repetitions, o.max_repetitions, o.cv_budget);
    const double mono = add("cameras", 1, timings[0]);
    const double stereo = add("cameras", 2, timings[1]);
    report.stereo_mono_dsi_ratio = stereo / mono;
  }

  // Fusion vs N_s (two cameras, H across cameras after A across time).
  {
    const UndistortionMap* maps[] = {&map0, &map1};
    std::vector<std::vector<std::vector<DsiGrid>>> per_ns;
    std::vector<FusionScheme> schemes;
    for (int ns : o.subinterval_counts) {
      auto& grids = per_ns.emplace_back(2);
      for (int c = 0; c < 2; ++c) {
        const auto events = prefix(c, o.fixed_events);
        for (const auto& [b, e] : SplitSubintervals(events, ns, SubintervalSplit::kEqualCount)) {
          DsiGrid g(ref, o.fixed_planes, 1.0, 4.0);
          SweepEvents(g, events.subspan(b, e - b), *maps[c], rig.trajectory,
                      rig.cameras[c].cam_from_rig);
          grids[c].push_back(std::move(g));
        }
      }
      FusionScheme scheme = ParseSchemeString("Hc*At");
      scheme.num_subintervals = ns;
      schemes.push_back(scheme);
    }
    std::vector<DsiGrid> outputs(per_ns.size(), DsiGrid(ref, o.fixed_planes, 1.0, 4.0));
    stages.clear();
    for (std::size_t i = 0; i < per_ns.size(); ++i) {
      stages.push_back({{}, [&, i] { FuseCameraTime(schemes[i], per_ns[i], outputs[i]); }});
    }
    timings = TimeInterleaved(stages, o.repetitions, o.max_repetitions, o.cv_budget);
    xs.clear();
    ys.clear();
    double ns_time[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < timings.size(); ++i) {
      const int ns = o.subinterval_counts[i];
      xs.push_back(ns);
      ys.push_back(add("subintervals", ns, timings[i]));
      if (ns == 1) ns_time[0] = ys.back();
      if (ns == 2) ns_time[1] = ys.back();
    }
    if (xs.size() >= 2) report.fusion_vs_subintervals = FitLogLog(xs, ys);
    if (ns_time[0] > 0.0 && ns_time[1] > 0.0) {
      report.fusion_ns2_ns1_ratio = ns_time[1] / ns_time[0];
    }
  }

  // Arg max and AGT on grids holding different numbers of events.
  double argmax_min = 1e300, argmax_max = 0.0, agt_min = 1e300, agt_max = 0.0;
  for (std::size_t i = 0; i < per_size_grids.size(); ++i) {
    const double ne = static_cast<double>(o.event_counts[i]);
    DepthResult dense;
    const auto ta = TimeStage({}, [&] { dense = ExtractDepthConfidence(per_size_grids[i]); },
                              o.repetitions, o.max_repetitions, o.cv_budget);
    const double a = add("argmax", ne, ta);
    float peak = 0.0f;
    for (float v : dense.confidence.data()) peak = std::max(peak, v);
    const Image<float> normalized = NormalizeConfidence(dense.confidence, peak);
    const auto tg = TimeStage({}, [&] { AgtMask(normalized); }, o.repetitions,
                              o.max_repetitions, o.cv_budget);
    const double g = add("agt", ne, tg);
    argmax_min = std::min(argmax_min, a);
    argmax_max = std::max(argmax_max, a);
    agt_min = std::min(agt_min, g);
    agt_max = std::max(agt_max, g);
  }
  report.argmax_spread = argmax_max / argmax_min;
  report.agt_spread = agt_max / agt_min;
  return report;
}

void WriteBenchCsv(std::ostream& out, const BenchReport& report) {
  out << "sweep,x,median_seconds,cv,repetitions\n";
  char line[160];
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof(line), "%s,%.6g,%.9f,%.4f,%d\n", r.sweep.c_str(), r.x,
                  r.timing.median_seconds, r.timing.cv, r.timing.repetitions);
    out << line;
  }
}

void WriteBenchSummary(std::ostream& out, const BenchReport& r) {
  char line[200];
  auto fit = [&](const char* name, const ScalingFit& f) {
    std::snprintf(line, sizeof(line), "%-28s slope %.3f  R^2 %.4f\n", name, f.slope, f.r2);
    out << line;
  };
  fit("dsi vs events", r.dsi_vs_events);
  fit("dsi vs planes", r.dsi_vs_planes);
  fit("fusion vs subintervals", r.fusion_vs_subintervals);
  std::snprintf(line, sizeof(line),
                "stereo/mono dsi ratio        %.3f\nfusion ns2/ns1 ratio         %.3f\n"
                "argmax spread over N_e       %.3f\nagt spread over N_e          %.3f\n",
                r.stereo_mono_dsi_ratio, r.fusion_ns2_ns1_ratio, r.argmax_spread, r.agt_spread);
  out << line;
}

}  // namespace evfuse
