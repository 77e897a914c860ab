#include <sstream>

#include <gtest/gtest.h>

#include "evfuse/error.hpp"
#include "evfuse/events.hpp"
#include "evfuse/trajectory_io.hpp"
#include "test_support.hpp"

namespace evfuse {
namespace {

EventStream Parse(const std::string& text, int w = 640, int h = 480,
                  EventParseOptions options = {}) {
  std::istringstream in(text);
  return ParseEventText(in, w, h, options);
}

using testing::KindOf;

TEST(ParseEventText, MapsFields) {
  const auto s = Parse("0.10 5 7 1\n");
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.events[0], (Event{5, 7, 0.10, +1}));
}

TEST(ParseEventText, ZeroPolarityBecomesNegative) {
  EXPECT_EQ(Parse("0.10 5 7 0\n").events[0].polarity, -1);
  EXPECT_EQ(Parse("0.10 5 7 -1\n").events[0].polarity, -1);
}

TEST(ParseEventText, OutOfBoundsReportsLine) {
  try {
    Parse("0.05 1 1 1\n0.10 700 7 1\n");
    FAIL();
  } catch (const LineError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kOutOfBounds);
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(ParseEventText, MalformedLines) {
  EXPECT_EQ(KindOf([] { Parse("0.1 5 7\n"); }), ErrorKind::kParse);
  EXPECT_EQ(KindOf([] { Parse("abc 5 7 1\n"); }), ErrorKind::kParse);
  EXPECT_EQ(KindOf([] { Parse("0.1 5 7 2\n"); }), ErrorKind::kParse);
  EXPECT_EQ(KindOf([] { Parse("0.1 5.5 7 1\n"); }), ErrorKind::kParse);
  EXPECT_EQ(KindOf([] { Parse("0.1 -5 7 1\n"); }), ErrorKind::kOutOfBounds);
}

TEST(ParseEventText, RegressionStrictByDefault) {
  EXPECT_EQ(KindOf([] { Parse("0.2 1 1 1\n0.1 2 2 1\n"); }), ErrorKind::kOrdering);
}

TEST(ParseEventText, RegressionWithinToleranceIsResorted) {
  EventParseOptions opts;
  opts.regression_tolerance = 0.05;
  const auto s = Parse("0.20 1 1 1\n0.18 2 2 1\n0.30 3 3 0\n", 640, 480, opts);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s.events[0].x, 2);
  EXPECT_EQ(s.events[1].x, 1);
  EXPECT_EQ(KindOf([&] { Parse("0.20 1 1 1\n0.10 2 2 1\n", 640, 480, opts); }),
            ErrorKind::kOrdering);
}

TEST(ParseEventText, SimultaneousEventsKeepFileOrder) {
  EventParseOptions opts;
  opts.regression_tolerance = 0.1;
  const auto s = Parse("0.5 9 0 1\n0.5 3 0 1\n0.45 1 0 1\n0.5 7 0 1\n", 640, 480, opts);
  ASSERT_EQ(s.size(), 4u);
  EXPECT_EQ(s.events[0].x, 1);
  EXPECT_EQ(s.events[1].x, 9);
  EXPECT_EQ(s.events[2].x, 3);
  EXPECT_EQ(s.events[3].x, 7);
}

TEST(ParseEventText, MicrosecondColumn) {
  EventParseOptions opts;
  opts.microsecond_timestamps = true;
  const auto s = Parse("1500000 5 7 1\n", 640, 480, opts);
  EXPECT_DOUBLE_EQ(s.events[0].t, 1.5);
}

TEST(ParseEventText, SkipsBlankLines) {
  EXPECT_EQ(Parse("\n0.1 1 1 1\n\n0.2 1 1 0\n").size(), 2u);
}

// Canonical text round trip and binary round trip on random streams.
TEST(EventTextProperty, CanonicalRoundTrip) {
  testing::Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Event> events;
    double t = rng.Uniform(0, 10);
    for (int i = 0; i < 200; ++i) {
      t += rng.Coin(0.1) ? 0.0 : rng.Uniform(0, 1e-3);
      events.push_back({static_cast<std::uint16_t>(rng.Int(0, 239)),
                        static_cast<std::uint16_t>(rng.Int(0, 179)), t,
                        static_cast<std::int8_t>(rng.Coin() ? 1 : -1)});
    }
    std::ostringstream text;
    WriteEventText(text, events);
    const auto parsed = Parse(text.str(), 240, 180);
    EXPECT_EQ(parsed.events, events);
    std::ostringstream again;
    WriteEventText(again, parsed.events);
    EXPECT_EQ(again.str(), text.str());
  }
}

TEST(EventBinaryProperty, RoundTripAtMicrosecondResolution) {
  testing::Rng rng(12);
  std::vector<Event> events;
  std::int64_t us = 0;
  for (int i = 0; i < 500; ++i) {
    us += rng.Int(0, 300);
    events.push_back({static_cast<std::uint16_t>(rng.Int(0, 345)),
                      static_cast<std::uint16_t>(rng.Int(0, 259)), us * 1e-6,
                      static_cast<std::int8_t>(rng.Coin() ? 1 : -1)});
  }
  std::stringstream buf;
  WriteEventBinary(buf, events);
  EXPECT_EQ(buf.str().size(), events.size() * 13);
  const auto back = ReadEventBinary(buf, 346, 260, "cam");
  ASSERT_EQ(back.size(), events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    EXPECT_EQ(back.events[i].x, events[i].x);
    EXPECT_EQ(back.events[i].polarity, events[i].polarity);
    EXPECT_NEAR(back.events[i].t, events[i].t, 1e-12);
  }
}

TEST(ReadEventBinary, TruncatedRecord) {
  std::stringstream buf;
  const Event e{1, 2, 0.5, 1};
  WriteEventBinary(buf, std::span<const Event>(&e, 1));
  std::string data = buf.str();
  data.pop_back();
  std::istringstream in(data);
  EXPECT_EQ(KindOf([&] { ReadEventBinary(in, 10, 10); }), ErrorKind::kParse);
}

EventStream Stream(std::initializer_list<double> times) {
  EventStream s;
  s.width = 10;
  s.height = 10;
  for (double t : times) s.events.push_back({0, 0, t, 1});
  return s;
}

TEST(Packetize, ByCountSizes) {
  const auto s = Stream({0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  const auto packets = Packetize(s, ByCount{4});
  ASSERT_EQ(packets.size(), 3u);
  EXPECT_EQ(packets[0].events.size(), 4u);
  EXPECT_EQ(packets[1].events.size(), 4u);
  EXPECT_EQ(packets[2].events.size(), 2u);
}

TEST(Packetize, ByDurationBoundary) {
  const auto s = Stream({0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9});
  const auto packets = Packetize(s, ByDuration{0.5});
  ASSERT_EQ(packets.size(), 2u);
  EXPECT_DOUBLE_EQ(packets[0].t_end, 0.5);
  EXPECT_DOUBLE_EQ(packets[1].t_start, 0.5);
  EXPECT_EQ(packets[0].events.size(), 5u);
  EXPECT_EQ(packets[1].events.front().t, 0.5);
}

TEST(Packetize, EmptyWindowsAreSkipped) {
  const auto packets = Packetize(Stream({0.0, 0.05, 1.2}), ByDuration{0.5});
  ASSERT_EQ(packets.size(), 2u);
  EXPECT_DOUBLE_EQ(packets[1].t_start, 1.0);
  EXPECT_DOUBLE_EQ(packets[1].t_end, 1.5);
}

TEST(Packetize, EmptyStreamAndBadModes) {
  EXPECT_TRUE(Packetize(Stream({}), ByCount{3}).empty());
  EXPECT_TRUE(Packetize(Stream({}), ByDuration{0.1}).empty());
  EXPECT_EQ(KindOf([] { Packetize(Stream({0.0}), ByCount{0}); }), ErrorKind::kConfig);
  EXPECT_EQ(KindOf([] { Packetize(Stream({0.0}), ByDuration{0.0}); }), ErrorKind::kConfig);
}

// Packets partition the stream, stay within their bounds, and concatenate
// back to the original sequence.
TEST(PacketizeProperty, PartitionAndBounds) {
  testing::Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    EventStream s;
    s.width = s.height = 4;
    double t = 0.0;
    const int n = rng.Int(0, 300);
    for (int i = 0; i < n; ++i) {
      t += rng.Coin(0.2) ? rng.Uniform(0, 0.5) : rng.Uniform(0, 0.01);
      s.events.push_back({0, 0, t, 1});
    }
    const PacketMode mode = rng.Coin() ? PacketMode{ByCount{static_cast<std::size_t>(rng.Int(1, 40))}}
                                       : PacketMode{ByDuration{rng.Uniform(0.01, 0.7)}};
    std::vector<Event> joined;
    for (const auto& p : Packetize(s, mode)) {
      EXPECT_FALSE(p.events.empty());
      for (const auto& e : p.events) {
        EXPECT_LE(p.t_start, e.t);
        EXPECT_LE(e.t, p.t_end);
      }
      joined.insert(joined.end(), p.events.begin(), p.events.end());
    }
    EXPECT_EQ(joined, s.events);
  }
}

TEST(SliceByTime, HalfOpen) {
  const auto s = Stream({0.0, 0.1, 0.2, 0.3});
  const auto slice = SliceByTime(s.events, 0.1, 0.3);
  ASSERT_EQ(slice.size(), 2u);
  EXPECT_EQ(slice.front().t, 0.1);
  EXPECT_EQ(slice.back().t, 0.2);
}

Trajectory ParseTraj(const std::string& text) {
  std::istringstream in(text);
  return ParseTrajectoryText(in);
}

TEST(ParseTrajectoryText, IdentityLine) {
  const auto traj = ParseTraj("0 0 0 0 0 0 0 1\n");
  ASSERT_EQ(traj.size(), 1u);
  const Pose& p = traj.samples()[0].pose;
  EXPECT_EQ(p.translation, Eigen::Vector3d::Zero());
  EXPECT_DOUBLE_EQ(p.rotation.w(), 1.0);
}

TEST(ParseTrajectoryText, NonMonotoneTimestamps) {
  EXPECT_EQ(KindOf([] { ParseTraj("1.0 0 0 0 0 0 0 1\n0.5 0 0 0 0 0 0 1\n"); }),
            ErrorKind::kOrdering);
}

TEST(ParseTrajectoryText, QuaternionTolerance) {
  const auto traj = ParseTraj("0 0 0 0 0 0 0 1.0005\n");
  EXPECT_NEAR(traj.samples()[0].pose.rotation.norm(), 1.0, 1e-12);
  EXPECT_EQ(KindOf([] { ParseTraj("0 0 0 0 0 0 0 1.01\n"); }), ErrorKind::kParse);
  EXPECT_EQ(KindOf([] { ParseTraj("0 0 0 0 0 0 0 0\n"); }), ErrorKind::kParse);
  EXPECT_EQ(KindOf([] { ParseTraj("0 0 0 0 0 0 1\n"); }), ErrorKind::kParse);
}

TEST(TrajectoryText, RoundTrip) {
  testing::Rng rng(5);
  std::vector<PoseSample> samples;
  for (int i = 0; i < 20; ++i) samples.push_back({0.1 * i, rng.RandomPose(3.0, 5.0)});
  const Trajectory traj(samples);
  std::ostringstream out;
  WriteTrajectoryText(out, traj);
  const auto back = ParseTraj(out.str());
  ASSERT_EQ(back.size(), traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    EXPECT_EQ(back.samples()[i].t, traj.samples()[i].t);
    EXPECT_TRUE(back.samples()[i].pose.translation.isApprox(traj.samples()[i].pose.translation,
                                                            1e-15));
    EXPECT_NEAR(back.samples()[i].pose.rotation.angularDistance(traj.samples()[i].pose.rotation),
                0.0, 1e-12);
  }
}

}  // namespace
}  // namespace evfuse
