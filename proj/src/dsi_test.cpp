#include "evfuse/dsi.hpp"

#include <sstream>

#include <gtest/gtest.h>

#include "evfuse/error.hpp"
#include "test_support.hpp"

namespace evfuse {
namespace {

using testing::KindOf;
using testing::Rng;

ReferenceView SmallRef(int w = 8, int h = 6) {
  return {Pose::Identity(), CameraModel(10, 10, (w - 1) / 2.0, (h - 1) / 2.0, w, h)};
}

Trajectory Slide(double vx) {
  return Trajectory({{0.0, Pose::Identity()},
                     {1.0, Pose::FromTranslation({vx, 0.0, 0.0})}});
}

std::vector<Event> RandomEvents(Rng& rng, int n, int w, int h) {
  std::vector<Event> out(n);
  double t = 0.0;
  for (auto& e : out) {
    t += rng.Uniform(0.0, 1.0 / n);
    e = {static_cast<std::uint16_t>(rng.Int(0, w - 1)),
         static_cast<std::uint16_t>(rng.Int(0, h - 1)), t, rng.Coin() ? std::int8_t{1}
                                                                      : std::int8_t{-1}};
  }
  return out;
}

TEST(PlaneDepths, UniformInInverseDepth) {
  const auto two = PlaneDepths(2, 1.0, 4.0, DepthSampling::kInverseDepth);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[0], 1.0);
  EXPECT_EQ(two[1], 4.0);
  const auto three = PlaneDepths(3, 1.0, 4.0, DepthSampling::kInverseDepth);
  EXPECT_NEAR(three[1], 1.6, 1e-12);

  const auto many = PlaneDepths(100, 0.55, 6.25, DepthSampling::kInverseDepth);
  EXPECT_EQ(many.front(), 0.55);
  EXPECT_EQ(many.back(), 6.25);
  const double step = 1.0 / many[1] - 1.0 / many[0];
  for (std::size_t k = 1; k < many.size(); ++k) {
    EXPECT_GT(many[k], many[k - 1]);
    EXPECT_NEAR(1.0 / many[k] - 1.0 / many[k - 1], step, 1e-12);
  }
  const auto lin = PlaneDepths(5, 1.0, 3.0, DepthSampling::kLinear);
  EXPECT_NEAR(lin[2], 2.0, 1e-15);
}

TEST(PlaneDepths, RejectsBadRanges) {
  EXPECT_EQ(KindOf([] { PlaneDepths(1, 1, 2, DepthSampling::kInverseDepth); }), ErrorKind::kConfig);
  EXPECT_EQ(KindOf([] { PlaneDepths(4, 0, 2, DepthSampling::kInverseDepth); }), ErrorKind::kConfig);
  EXPECT_EQ(KindOf([] { PlaneDepths(4, 3, 2, DepthSampling::kInverseDepth); }), ErrorKind::kConfig);
  EXPECT_EQ(KindOf([] { DsiGrid(SmallRef(), 4, 2, 2); }), ErrorKind::kConfig);
}

TEST(BilinearVote, SplitsWeightByArea) {
  DsiGrid grid(SmallRef(), 2, 1.0, 2.0);
  EXPECT_EQ(grid.BilinearVote(1, 3.25, 4.75), 0.0f);
  EXPECT_FLOAT_EQ(grid.at(3, 4, 1), 0.1875f);
  EXPECT_FLOAT_EQ(grid.at(4, 4, 1), 0.0625f);
  EXPECT_FLOAT_EQ(grid.at(3, 5, 1), 0.5625f);
  EXPECT_FLOAT_EQ(grid.at(4, 5, 1), 0.1875f);
  EXPECT_DOUBLE_EQ(grid.Mass(), 1.0);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 8; ++x) EXPECT_EQ(grid.at(x, y, 0), 0.0f);
}

TEST(BilinearVote, IntegerPositionHitsOneVoxel) {
  DsiGrid grid(SmallRef(), 2, 1.0, 2.0);
  grid.BilinearVote(0, 2.0, 3.0, 2.5f);
  EXPECT_EQ(grid.at(2, 3, 0), 2.5f);
  EXPECT_DOUBLE_EQ(grid.Mass(), 2.5);
}

TEST(BilinearVote, BorderDropsOutsideNeighbours) {
  DsiGrid grid(SmallRef(), 2, 1.0, 2.0);
  // Right edge: x in (w-1, w) keeps only the left column.
  EXPECT_FLOAT_EQ(grid.BilinearVote(0, 7.25, 2.0), 0.25f);
  EXPECT_FLOAT_EQ(grid.at(7, 2, 0), 0.75f);
  // Upper-left outside corner.
  EXPECT_FLOAT_EQ(grid.BilinearVote(0, -0.5, -0.5), 0.75f);
  EXPECT_FLOAT_EQ(grid.at(0, 0, 0), 0.25f);
  // Entirely outside.
  EXPECT_EQ(grid.BilinearVote(0, -1.5, 2.0), 1.0f);
  EXPECT_EQ(grid.BilinearVote(0, 2.0, 6.0), 1.0f);
  EXPECT_DOUBLE_EQ(grid.Mass(), 1.0);
}

TEST(SweepEvents, SingleEventAtReferenceHitsEveryPlane) {
  const ReferenceView ref = SmallRef();
  DsiGrid grid(ref, 5, 1.0, 5.0);
  const Trajectory still({{0.0, Pose::Identity()}, {1.0, Pose::Identity()}});
  const std::vector<Event> ev{{3, 2, 0.5, 1}};
  const SweepStats stats = SweepEvents(grid, ev, UndistortionMap(ref.camera), still);
  EXPECT_EQ(stats.events_swept, 1u);
  for (int k = 0; k < 5; ++k) EXPECT_FLOAT_EQ(grid.at(3, 2, k), 1.0f) << k;
  EXPECT_NEAR(grid.Mass(), 5.0, 1e-6);
}

TEST(SweepEvents, MassIsConservedProperty) {
  Rng rng(3);
  const ReferenceView ref = SmallRef(40, 30);
  const UndistortionMap cam(ref.camera);
  for (int trial = 0; trial < 5; ++trial) {
    const int nz = rng.Int(2, 12);
    DsiGrid grid(ref, nz, 0.5, 6.0);
    const auto events = RandomEvents(rng, 1000, 40, 30);
    const SweepStats stats = SweepEvents(grid, events, cam, Slide(rng.Uniform(-0.3, 0.3)));
    EXPECT_EQ(stats.events_swept, 1000u);
    EXPECT_NEAR(grid.Mass() + stats.weight_dropped, 1000.0 * nz, 1e-3 * nz);
  }
}

TEST(SweepEvents, SkipsEventsOutsideTrajectory) {
  const ReferenceView ref = SmallRef();
  DsiGrid grid(ref, 3, 1.0, 3.0);
  const std::vector<Event> ev{{1, 1, -0.5, 1}, {1, 1, 0.5, 1}, {1, 1, 1.5, 1}};
  const auto stats = SweepEvents(grid, ev, UndistortionMap(ref.camera), Slide(0.0));
  EXPECT_EQ(stats.events_in, 3u);
  EXPECT_EQ(stats.events_swept, 1u);
  EXPECT_EQ(stats.events_skipped, 2u);
  SweepOptions clamp;
  clamp.clamp_trajectory = true;
  DsiGrid all(ref, 3, 1.0, 3.0);
  EXPECT_EQ(SweepEvents(all, ev, UndistortionMap(ref.camera), Slide(0.0), Pose(), clamp)
                .events_swept,
            3u);
  EXPECT_EQ(KindOf([&] { SweepEvents(grid, ev, UndistortionMap(ref.camera), Trajectory()); }),
            ErrorKind::kConfig);
}

TEST(SweepEvents, ThreadCountDoesNotChangeResult) {
  Rng rng(8);
  const ReferenceView ref = SmallRef(40, 30);
  const UndistortionMap cam(ref.camera);
  const auto events = RandomEvents(rng, 5000, 40, 30);
  DsiGrid one(ref, 10, 0.5, 5.0), four(ref, 10, 0.5, 5.0);
  SweepOptions opts;
  SweepEvents(one, events, cam, Slide(0.2), Pose(), opts);
  opts.threads = 4;
  SweepEvents(four, events, cam, Slide(0.2), Pose(), opts);
  for (std::size_t i = 0; i < one.voxel_count(); ++i) {
    ASSERT_NEAR(one.values()[i], four.values()[i], 1e-5) << i;
  }
}

TEST(SweepEvents, LinearInEventsAndWeight) {
  Rng rng(9);
  const ReferenceView ref = SmallRef(20, 16);
  const UndistortionMap cam(ref.camera);
  const auto events = RandomEvents(rng, 400, 20, 16);
  const std::span<const Event> all(events);
  DsiGrid split(ref, 6, 0.5, 5.0), whole(ref, 6, 0.5, 5.0), doubled(ref, 6, 0.5, 5.0);
  SweepEvents(split, all.first(150), cam, Slide(0.1));
  SweepEvents(split, all.subspan(150), cam, Slide(0.1));
  SweepEvents(whole, all, cam, Slide(0.1));
  SweepOptions heavy;
  heavy.weight = 2.0f;
  SweepEvents(doubled, all, cam, Slide(0.1), Pose(), heavy);
  for (std::size_t i = 0; i < whole.voxel_count(); ++i) {
    ASSERT_NEAR(split.values()[i], whole.values()[i], 1e-4);
    ASSERT_NEAR(doubled.values()[i], 2.0f * whole.values()[i], 1e-4);
  }
}

TEST(DsiGrid, AddRequiresSameLayout) {
  DsiGrid a(SmallRef(), 3, 1.0, 3.0), b(SmallRef(), 3, 1.0, 3.0), c(SmallRef(), 4, 1.0, 3.0);
  a.at(1, 1, 1) = 2.0f;
  b.at(1, 1, 1) = 3.0f;
  a.Add(b);
  EXPECT_EQ(a.at(1, 1, 1), 5.0f);
  EXPECT_EQ(KindOf([&] { a.Add(c); }), ErrorKind::kAlignment);
  EXPECT_FALSE(a.SameLayout(c));
  a.Scale(0.5f);
  EXPECT_EQ(a.at(1, 1, 1), 2.5f);
}

TEST(MaxProjections, TakesMaximaAlongEachAxis) {
  DsiGrid grid(SmallRef(4, 3), 5, 1.0, 5.0);
  grid.at(1, 2, 3) = 7.0f;
  grid.at(1, 0, 0) = 4.0f;
  grid.at(3, 2, 1) = 9.0f;
  const DsiProjections p = MaxProjections(grid);
  EXPECT_EQ(p.front.width(), 4);
  EXPECT_EQ(p.front.height(), 3);
  EXPECT_EQ(p.top.height(), 5);
  EXPECT_EQ(p.side.width(), 5);
  EXPECT_EQ(p.front(1, 2), 7.0f);
  EXPECT_EQ(p.front(1, 0), 4.0f);
  EXPECT_EQ(p.top(1, 3), 7.0f);
  EXPECT_EQ(p.top(3, 1), 9.0f);
  EXPECT_EQ(p.side(1, 2), 9.0f);
  EXPECT_EQ(p.side(0, 0), 4.0f);
  EXPECT_EQ(p.front(0, 0), 0.0f);
}

TEST(DsiDump, RoundTripAndTruncation) {
  Rng rng(4);
  DsiGrid grid(SmallRef(5, 4), 3, 0.7, 4.5);
  for (float& v : grid.values()) v = static_cast<float>(rng.Uniform(0, 10));
  std::stringstream ss;
  WriteDsiDump(ss, grid);
  EXPECT_EQ(ss.str().size(), 12u + 16u + 4u * grid.voxel_count());
  const DsiDump d = ReadDsiDump(ss);
  EXPECT_EQ(d.width, 5);
  EXPECT_EQ(d.height, 4);
  EXPECT_EQ(d.num_planes, 3);
  EXPECT_EQ(d.z_min, 0.7);
  EXPECT_EQ(d.z_max, 4.5);
  EXPECT_TRUE(std::equal(d.values.begin(), d.values.end(), grid.values().begin()));

  std::string bytes = ss.str();
  bytes.pop_back();
  std::istringstream cut(bytes);
  EXPECT_EQ(KindOf([&] { ReadDsiDump(cut); }), ErrorKind::kParse);
}

}  // namespace
}  // namespace evfuse
