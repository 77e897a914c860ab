#include "evfuse/fusion.hpp"

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "evfuse/error.hpp"
#include "test_support.hpp"

namespace evfuse {
namespace {

using testing::KindOf;
using testing::Rng;

double Fuse(FusionFunction fn, std::initializer_list<double> v) {
  return FuseValue(fn, std::span<const double>(v.begin(), v.size()));
}

TEST(FuseValue, KnownValues) {
  EXPECT_NEAR(Fuse(FusionFunction::kHarmonic, {4, 1}), 1.6, 1e-15);
  EXPECT_NEAR(Fuse(FusionFunction::kGeometric, {4, 1}), 2.0, 1e-15);
  EXPECT_NEAR(Fuse(FusionFunction::kArithmetic, {4, 1}), 2.5, 1e-15);
  EXPECT_NEAR(Fuse(FusionFunction::kRms, {4, 1}), std::sqrt(8.5), 1e-15);
  EXPECT_NEAR(Fuse(FusionFunction::kRms, {4, 1}), 2.9155, 1e-4);
  EXPECT_EQ(Fuse(FusionFunction::kMin, {4, 1}), 1.0);
  EXPECT_EQ(Fuse(FusionFunction::kMax, {4, 1}), 4.0);
}

TEST(FuseValue, ZerosAndDomain) {
  EXPECT_EQ(Fuse(FusionFunction::kHarmonic, {3, 0}), 0.0);
  EXPECT_EQ(Fuse(FusionFunction::kGeometric, {3, 0}), 0.0);
  EXPECT_EQ(Fuse(FusionFunction::kHarmonic, {0, 0}), 0.0);
  for (FusionFunction fn : kAllFusionFunctions) {
    EXPECT_EQ(KindOf([&] { Fuse(fn, {1, -1}); }), ErrorKind::kDomain);
    EXPECT_EQ(KindOf([&] { Fuse(fn, {1, NAN}); }), ErrorKind::kDomain);
    EXPECT_EQ(KindOf([&] { FuseValue(fn, {}); }), ErrorKind::kConfig);
  }
}

TEST(FuseValue, IdempotentOnEqualInputsProperty) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.Uniform(0.0, 100.0);
    for (FusionFunction fn : kAllFusionFunctions) {
      EXPECT_NEAR(Fuse(fn, {u, u}), u, 1e-12 * std::max(1.0, u)) << FusionFunctionName(fn);
    }
  }
}

TEST(FuseValue, OrderedSymmetricAndHomogeneousProperty) {
  Rng rng(2);
  for (int i = 0; i < 2000; ++i) {
    const int n = rng.Int(1, 6);
    std::vector<double> v(n);
    for (double& x : v) x = rng.Coin(0.1) ? 0.0 : rng.Uniform(0.0, 50.0);
    const double lambda = rng.Uniform(0.01, 20.0);
    std::vector<double> scaled = v;
    for (double& x : scaled) x *= lambda;
    std::vector<double> shuffled = v;
    std::shuffle(shuffled.begin(), shuffled.end(), rng.engine());

    double prev = -1.0;
    for (FusionFunction fn : kAllFusionFunctions) {
      const double m = FuseValue(fn, v);
      const double tol = 1e-12 * std::max(1.0, m);
      EXPECT_GE(m, prev - tol) << FusionFunctionName(fn);
      EXPECT_NEAR(FuseValue(fn, shuffled), m, tol);
      EXPECT_NEAR(FuseValue(fn, scaled), lambda * m, 1e-11 * std::max(1.0, lambda * m));
      prev = m;
    }
  }
}

TEST(FusionNames, ParseAndPrint) {
  for (FusionFunction fn : kAllFusionFunctions) {
    EXPECT_EQ(ParseFusionFunction(FusionFunctionName(fn)), fn);
  }
  EXPECT_EQ(ParseFusionFunction("harmonic"), FusionFunction::kHarmonic);
  EXPECT_EQ(KindOf([] { ParseFusionFunction("median"); }), ErrorKind::kConfig);
}

TEST(SchemeString, CompositionReadsRightToLeft) {
  const FusionScheme hc_at = ParseSchemeString("Hc*At");
  EXPECT_EQ(hc_at.camera_fn, FusionFunction::kHarmonic);
  EXPECT_EQ(hc_at.time_fn, FusionFunction::kArithmetic);
  EXPECT_EQ(hc_at.order, FusionOrder::kTimeFirst);
  const FusionScheme at_hc = ParseSchemeString("At*Hc");
  EXPECT_EQ(at_hc.order, FusionOrder::kCameraFirst);
  EXPECT_EQ(at_hc.camera_fn, FusionFunction::kHarmonic);
  const FusionScheme spaced = ParseSchemeString(" rms_c * min_t ");
  EXPECT_EQ(spaced.camera_fn, FusionFunction::kRms);
  EXPECT_EQ(spaced.time_fn, FusionFunction::kMin);
  EXPECT_EQ(ParseSchemeString("Gc").camera_fn, FusionFunction::kGeometric);
  for (const char* s : {"Hc*At", "At*Hc", "RMSc*maxt", "mint*Gc"}) {
    EXPECT_EQ(SchemeString(ParseSchemeString(s)), s);
  }
  for (const char* bad : {"Hc*Ac", "H", "Hx*At", "Qc*At", ""}) {
    EXPECT_EQ(KindOf([&] { ParseSchemeString(bad); }), ErrorKind::kConfig) << bad;
  }
  EXPECT_EQ(ParseSplit("time"), SubintervalSplit::kEqualTime);
  EXPECT_EQ(ParseSplit("equal_count"), SubintervalSplit::kEqualCount);
  EXPECT_EQ(KindOf([] { ParseSplit("random"); }), ErrorKind::kConfig);
}

TEST(ShufflePairing, CyclicAndSeeded) {
  EXPECT_EQ(ShufflePairing(2, ShuffleMode::kCyclic), (std::vector<int>{1, 0}));
  EXPECT_EQ(ShufflePairing(4, ShuffleMode::kCyclic), (std::vector<int>{1, 2, 3, 0}));
  EXPECT_EQ(ShufflePairing(3, ShuffleMode::kOff), (std::vector<int>{0, 1, 2}));
  const auto a = ShufflePairing(10, ShuffleMode::kSeeded, 42);
  EXPECT_EQ(a, ShufflePairing(10, ShuffleMode::kSeeded, 42));
  std::vector<int> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 10; ++i) EXPECT_EQ(sorted[i], i);
  EXPECT_EQ(KindOf([] { ShufflePairing(1, ShuffleMode::kCyclic); }), ErrorKind::kConfig);
}

TEST(SplitSubintervals, CountAndTime) {
  std::vector<Event> ev;
  for (double t : {0.0, 0.1, 0.2, 0.3, 0.9, 1.0}) ev.push_back({0, 0, t, 1});
  const auto count = SplitSubintervals(ev, 3, SubintervalSplit::kEqualCount);
  EXPECT_EQ(count, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 2}, {2, 4}, {4, 6}}));
  const auto time = SplitSubintervals(ev, 2, SubintervalSplit::kEqualTime);
  EXPECT_EQ(time, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 4}, {4, 6}}));
  EXPECT_EQ(KindOf([&] { SplitSubintervals(ev, 0, SubintervalSplit::kEqualCount); }),
            ErrorKind::kConfig);
}

ReferenceView TinyRef() {
  return {Pose::Identity(), CameraModel(10, 10, 2.0, 1.5, 5, 4)};
}

DsiGrid RandomGrid(Rng& rng, double zero_fraction = 0.2) {
  DsiGrid g(TinyRef(), 3, 1.0, 3.0);
  for (float& v : g.values()) {
    v = rng.Coin(zero_fraction) ? 0.0f : static_cast<float>(rng.Uniform(0.0, 10.0));
  }
  return g;
}

TEST(FuseGrids, IdempotentAndHarmonicAnnihilates) {
  Rng rng(6);
  const DsiGrid g = RandomGrid(rng);
  const std::vector<DsiGrid> twice{g, g};
  for (FusionFunction fn : kAllFusionFunctions) {
    const DsiGrid f = FuseGrids(fn, std::span<const DsiGrid>(twice));
    for (std::size_t i = 0; i < g.voxel_count(); ++i) {
      ASSERT_NEAR(f.values()[i], g.values()[i], 1e-5);
    }
  }
  const DsiGrid other = RandomGrid(rng, 0.0);
  const std::vector<DsiGrid> pair{g, other};
  const DsiGrid h = FuseGrids(FusionFunction::kHarmonic, std::span<const DsiGrid>(pair));
  for (std::size_t i = 0; i < g.voxel_count(); ++i) {
    if (g.values()[i] == 0.0f) {
      EXPECT_EQ(h.values()[i], 0.0f);
    }
  }
  const std::vector<DsiGrid> mismatched{g, DsiGrid(TinyRef(), 4, 1.0, 3.0)};
  EXPECT_EQ(KindOf([&] { FuseGrids(FusionFunction::kArithmetic,
                                   std::span<const DsiGrid>(mismatched)); }),
            ErrorKind::kAlignment);
}

std::vector<std::vector<DsiGrid>> RandomCameraTime(Rng& rng, int nc, int ns) {
  std::vector<std::vector<DsiGrid>> grids(nc);
  for (auto& cam : grids)
    for (int i = 0; i < ns; ++i) cam.push_back(RandomGrid(rng));
  return grids;
}

TEST(FuseCameraTime, SameFunctionOnBothAxesCommutesProperty) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto grids = RandomCameraTime(rng, rng.Int(1, 3), rng.Int(1, 5));
    for (FusionFunction fn : kAllFusionFunctions) {
      FusionScheme a{fn, fn, FusionOrder::kTimeFirst};
      FusionScheme b{fn, fn, FusionOrder::kCameraFirst};
      const DsiGrid x = FuseCameraTime(a, grids);
      const DsiGrid y = FuseCameraTime(b, grids);
      for (std::size_t i = 0; i < x.voxel_count(); ++i) {
        ASSERT_NEAR(x.values()[i], y.values()[i], 1e-4 * std::max(1.0f, x.values()[i]))
            << FusionFunctionName(fn);
      }
    }
  }
}

TEST(FuseCameraTime, MixedSchemesDiffer) {
  // Camera 0 sees only the first sub-interval, camera 1 only the second.
  std::vector<std::vector<DsiGrid>> grids(2);
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < 2; ++i) {
      DsiGrid g(TinyRef(), 3, 1.0, 3.0);
      g.at(1, 1, 1) = c == i ? 1.0f : 0.0f;
      grids[c].push_back(g);
    }
  }
  const DsiGrid time_first = FuseCameraTime(ParseSchemeString("Hc*At"), grids);
  const DsiGrid camera_first = FuseCameraTime(ParseSchemeString("At*Hc"), grids);
  EXPECT_FLOAT_EQ(time_first.at(1, 1, 1), 0.5f);
  EXPECT_EQ(camera_first.at(1, 1, 1), 0.0f);

  FusionScheme shuffled = ParseSchemeString("At*Hc");
  shuffled.shuffle = ShuffleMode::kCyclic;
  // Cyclic pairing aligns the two hits in one of the two sub-intervals.
  EXPECT_FLOAT_EQ(FuseCameraTime(shuffled, grids).at(1, 1, 1), 0.5f);
}

TEST(FuseCameraTime, ShapeErrors) {
  Rng rng(3);
  auto grids = RandomCameraTime(rng, 2, 2);
  grids[1].pop_back();
  EXPECT_EQ(KindOf([&] { FuseCameraTime(FusionScheme{}, grids); }), ErrorKind::kAlignment);
  EXPECT_EQ(KindOf([] { FuseCameraTime(FusionScheme{}, {}); }), ErrorKind::kConfig);
}

TEST(ApplyScheme, ArithmeticEqualsSummedSweep) {
  Rng rng(21);
  const ReferenceView ref{Pose::Identity(), CameraModel(30, 30, 14.5, 9.5, 30, 20)};
  const UndistortionMap cam(ref.camera);
  const Trajectory traj({{0.0, Pose::Identity()}, {1.0, Pose::FromTranslation({0.3, 0, 0})}});
  std::vector<std::vector<Event>> events(2);
  for (auto& stream : events) {
    double t = 0.0;
    for (int i = 0; i < 800; ++i) {
      t += rng.Uniform(0.0, 1.0 / 800);
      stream.push_back({static_cast<std::uint16_t>(rng.Int(0, 29)),
                        static_cast<std::uint16_t>(rng.Int(0, 19)), t, 1});
    }
  }
  SchemeInputs in;
  in.cameras = {{events[0], &cam, Pose::Identity()},
                {events[1], &cam, Pose::FromTranslation({-0.2, 0, 0})}};
  in.trajectory = &traj;
  in.ref = ref;
  in.grid = {8, 0.8, 5.0, DepthSampling::kInverseDepth};

  FusionScheme scheme = ParseSchemeString("Ac*At");
  scheme.num_subintervals = 4;
  const SchemeResult result = ApplyScheme(scheme, in);
  EXPECT_EQ(result.grids_built, 8u);

  DsiGrid summed(ref, 8, 0.8, 5.0);
  for (const auto& c : in.cameras) {
    SweepEvents(summed, c.events, cam, traj, c.cam_from_body);
  }
  for (std::size_t i = 0; i < summed.voxel_count(); ++i) {
    ASSERT_NEAR(result.fused.values()[i] * 8.0, summed.values()[i], 1e-4);
  }
}

TEST(ApplyScheme, ShuffleNeedsTwoSubintervals) {
  const Trajectory traj({{0.0, Pose::Identity()}, {1.0, Pose::Identity()}});
  SchemeInputs in;
  const UndistortionMap cam(TinyRef().camera);
  in.cameras = {{{}, &cam, Pose::Identity()}};
  in.trajectory = &traj;
  in.ref = TinyRef();
  FusionScheme scheme;
  scheme.shuffle = ShuffleMode::kCyclic;
  EXPECT_EQ(KindOf([&] { ApplyScheme(scheme, in); }), ErrorKind::kConfig);
  scheme.shuffle = ShuffleMode::kOff;
  const SchemeResult r = ApplyScheme(scheme, in);
  EXPECT_EQ(r.empty_grids, 1u);
  EXPECT_EQ(r.warnings.size(), 1u);
  EXPECT_EQ(r.fused.Mass(), 0.0);
}

}  // namespace
}  // namespace evfuse
