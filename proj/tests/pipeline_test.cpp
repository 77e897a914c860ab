#include "evfuse/pipeline.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "evfuse/eval.hpp"
#include "evfuse/simulator.hpp"
#include "test_support.hpp"

namespace evfuse {
namespace {

using testing::KindOf;

struct Simulated {
  PipelineInputs inputs;
  Scene scene;
};

Simulated DeskStereo(int cameras, double duration) {
  Simulated s;
  s.scene = PlanarEdgeScene(2.0, 24, 7);
  RigConfig rig = DefaultDeskRig(cameras, 0.2, duration);
  GeometricOptions opts;
  opts.duration = duration;
  s.inputs.streams = GenerateEventsGeometric(s.scene, rig, opts);
  s.inputs.calibration = rig.ToCalibration();
  s.inputs.trajectory = rig.trajectory;
  return s;
}

PipelineOptions SmallOptions() {
  PipelineOptions o;
  o.packets = ByDuration{0.25};
  o.grid = {48, 1.0, 4.0, DepthSampling::kInverseDepth};
  return o;
}

MetricsReport Score(const Simulated& sim, const PipelineResult& result) {
  std::vector<MetricsReport> reports;
  for (const PacketOutput& p : result.packets) {
    const Image<float> gt = RenderGtDepth(sim.scene, p.ref);
    reports.push_back(DepthErrors(p.filtered, gt, 100.0, {}, true));
  }
  return AggregateReports(reports);
}

TEST(Pipeline, SingleCameraIgnoresCameraFunction) {
  const Simulated sim = DeskStereo(1, 0.5);
  PipelineOptions a = SmallOptions();
  a.scheme = ParseSchemeString("Hc*At");
  a.scheme.num_subintervals = 2;
  a.keep_grids = true;
  PipelineOptions b = a;
  b.scheme = ParseSchemeString("maxc*At");
  b.scheme.num_subintervals = 2;
  const PipelineResult ra = RunPipeline(sim.inputs, a);
  const PipelineResult rb = RunPipeline(sim.inputs, b);
  ASSERT_EQ(ra.packets.size(), rb.packets.size());
  for (std::size_t i = 0; i < ra.packets.size(); ++i) {
    const auto va = ra.packets[i].fused->values();
    const auto vb = rb.packets[i].fused->values();
    ASSERT_TRUE(std::equal(va.begin(), va.end(), vb.begin()));
  }
}

TEST(Pipeline, ThreeCamerasBuildOneGridPerCameraAndSubinterval) {
  const Simulated sim = DeskStereo(3, 0.5);
  PipelineOptions o = SmallOptions();
  o.scheme.num_subintervals = 2;
  const PipelineResult r = RunPipeline(sim.inputs, o);
  ASSERT_FALSE(r.packets.empty());
  for (const PacketOutput& p : r.packets) {
    EXPECT_EQ(p.grids_built, 6u);
    EXPECT_EQ(p.event_counts.size(), 3u);
  }
  EXPECT_GT(r.robust_max, 0.0);
}

TEST(Pipeline, StereoIsNoWorseThanMono) {
  const Simulated stereo = DeskStereo(2, 1.0);
  Simulated mono = stereo;
  mono.inputs.streams.resize(1);
  mono.inputs.calibration.cameras.resize(1);
  PipelineOptions o = SmallOptions();
  o.packets = ByDuration{1.0};
  const MetricsReport s = Score(stereo, RunPipeline(stereo.inputs, o));
  const MetricsReport m = Score(mono, RunPipeline(mono.inputs, o));
  ASSERT_GT(s.n_points, 100u);
  ASSERT_GT(m.n_points, 100u);
  EXPECT_LE(s.median_abs_err, m.median_abs_err);
}

TEST(Pipeline, ThreadCountDoesNotChangeOutput) {
  const Simulated sim = DeskStereo(2, 0.5);
  PipelineOptions one = SmallOptions();
  PipelineOptions three = one;
  three.threads = 3;
  const PipelineResult a = RunPipeline(sim.inputs, one);
  const PipelineResult b = RunPipeline(sim.inputs, three);
  ASSERT_EQ(a.packets.size(), b.packets.size());
  EXPECT_NEAR(a.robust_max, b.robust_max, 1e-4 * a.robust_max);
  for (std::size_t i = 0; i < a.packets.size(); ++i) {
    const DepthResult& da = a.packets[i].filtered;
    const DepthResult& db = b.packets[i].filtered;
    std::size_t differing = 0;
    for (std::size_t k = 0; k < da.mask.size(); ++k) {
      differing += (da.mask.data()[k] != 0) != (db.mask.data()[k] != 0);
    }
    // Float summation order can flip a pixel sitting exactly at the threshold.
    EXPECT_LE(differing, da.MaskCount() / 100 + 1) << "packet " << i;
  }
}

TEST(Pipeline, CallbackOrderAndSinglePacket) {
  const Simulated sim = DeskStereo(2, 0.5);
  PipelineOptions o = SmallOptions();
  std::vector<std::size_t> seen;
  const PipelineResult all =
      RunPipeline(sim.inputs, o, [&](const PacketOutput& p) { seen.push_back(p.index); });
  ASSERT_EQ(seen.size(), all.packets.size());
  for (std::size_t i = 0; i < seen.size(); ++i) EXPECT_EQ(seen[i], i);

  o.only_packet = 1;
  const PipelineResult one = RunPipeline(sim.inputs, o);
  ASSERT_EQ(one.packets.size(), 1u);
  EXPECT_EQ(one.packets[0].index, 1u);
  EXPECT_EQ(one.packets[0].dense.confidence.data(), all.packets[1].dense.confidence.data());
}

TEST(Pipeline, RejectsMismatchedInputs) {
  Simulated sim = DeskStereo(2, 0.5);
  sim.inputs.streams.pop_back();
  EXPECT_EQ(KindOf([&] { RunPipeline(sim.inputs, SmallOptions()); }), ErrorKind::kConfig);
}

}  // namespace
}  // namespace evfuse
