#include "evfuse/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "evfuse/error.hpp"
#include "test_support.hpp"

namespace evfuse {
namespace {

using testing::KindOf;
using testing::Rng;

// Straight-line reimplementation of the metric definitions in long double.
struct Oracle {
  long double mean = 0, median = 0, silog = 0, log_rmse = 0, rel = 0;
  std::array<long double, 3> delta{};
};

Oracle ComputeOracle(const std::vector<double>& est, const std::vector<double>& gt) {
  Oracle o;
  const std::size_t n = est.size();
  std::vector<long double> err;
  long double d_sum = 0, d2_sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const long double e = std::fabs(static_cast<long double>(est[i]) - gt[i]);
    err.push_back(e);
    o.mean += e / n;
    o.rel += 100.0L * e / gt[i] / n;
    const long double d = std::log(static_cast<long double>(est[i]) / gt[i]);
    d_sum += d;
    d2_sum += d * d;
    const long double ratio = std::max<long double>(est[i] / static_cast<long double>(gt[i]),
                                                    gt[i] / static_cast<long double>(est[i]));
    if (ratio < 1.25L) o.delta[0] += 100.0L / n;
    if (ratio < 1.5625L) o.delta[1] += 100.0L / n;
    if (ratio < 1.953125L) o.delta[2] += 100.0L / n;
  }
  std::sort(err.begin(), err.end());
  o.median = n % 2 ? err[n / 2] : 0.5L * (err[n / 2 - 1] + err[n / 2]);
  o.silog = 100.0L * (d2_sum / n - (d_sum / n) * (d_sum / n));
  o.log_rmse = 100.0L * std::sqrt(d2_sum / n);
  return o;
}

void ExpectMatchesOracle(const std::vector<double>& est, const std::vector<double>& gt) {
  const MetricsReport r = DepthErrorsFromPairs(est, gt);
  const Oracle o = ComputeOracle(est, gt);
  EXPECT_EQ(r.n_points, est.size());
  EXPECT_NEAR(r.mean_abs_err, static_cast<double>(o.mean), 1e-12);
  EXPECT_NEAR(r.median_abs_err, static_cast<double>(o.median), 1e-12);
  EXPECT_NEAR(r.silog, static_cast<double>(o.silog), 1e-9);
  EXPECT_NEAR(r.log_rmse, static_cast<double>(o.log_rmse), 1e-9);
  EXPECT_NEAR(r.aerr_rel, static_cast<double>(o.rel), 1e-9);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(r.delta_acc[k], static_cast<double>(o.delta[k]), 1e-9);
}

TEST(DepthErrors, ToyCase) {
  const std::vector<double> est{1.1, 2.0, 3.0}, gt{1.0, 2.0, 4.0};
  const MetricsReport r = DepthErrorsFromPairs(est, gt);
  EXPECT_NEAR(r.mean_abs_err, 0.36667, 1e-5);
  EXPECT_NEAR(r.median_abs_err, 0.1, 1e-12);
  ExpectMatchesOracle(est, gt);
}

TEST(DepthErrors, UniformScaleError) {
  std::vector<double> gt{0.8, 1.5, 2.0, 3.3, 5.0}, est;
  for (double g : gt) est.push_back(1.2 * g);
  const MetricsReport r = DepthErrorsFromPairs(est, gt);
  EXPECT_NEAR(r.delta_acc[0], 100.0, 1e-12);
  EXPECT_NEAR(r.aerr_rel, 20.0, 1e-9);
  EXPECT_NEAR(r.silog, 0.0, 1e-9);
  EXPECT_NEAR(r.log_rmse, 100.0 * std::log(1.2), 1e-9);
}

TEST(DepthErrors, BadPixNeedsBothThresholds) {
  // 0.4 m on 10 m is 4 %: not bad. 0.4 m on 2 m is 20 %: bad.
  const std::vector<double> est{10.4, 2.4, 2.1}, gt{10.0, 2.0, 2.0};
  EXPECT_NEAR(DepthErrorsFromPairs(est, gt).bad_pix, 100.0 / 3.0, 1e-12);
}

TEST(DepthErrors, MatchesOracleProperty) {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.Int(1, 60);
    std::vector<double> est(n), gt(n);
    for (int i = 0; i < n; ++i) {
      gt[i] = rng.Uniform(0.3, 10.0);
      est[i] = gt[i] * rng.Uniform(0.5, 2.2);
    }
    ExpectMatchesOracle(est, gt);
  }
}

TEST(DepthErrors, ScaleInvarianceAndDeltaSymmetryProperty) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.Int(2, 40);
    std::vector<double> est(n), gt(n), scaled(n);
    const double lambda = rng.Uniform(0.2, 5.0);
    for (int i = 0; i < n; ++i) {
      gt[i] = rng.Uniform(0.5, 8.0);
      est[i] = gt[i] * rng.Uniform(0.6, 1.8);
      scaled[i] = lambda * est[i];
    }
    const MetricsReport a = DepthErrorsFromPairs(est, gt);
    EXPECT_NEAR(DepthErrorsFromPairs(scaled, gt).silog, a.silog, 1e-8);
    const MetricsReport swapped = DepthErrorsFromPairs(gt, est);
    for (int k = 0; k < 3; ++k) EXPECT_EQ(swapped.delta_acc[k], a.delta_acc[k]);
  }
}

TEST(DepthErrors, ImageMaskingAndNoOverlap) {
  DepthResult est;
  est.depth = Image<float>(3, 1, 2.0f);
  est.mask = Image<std::uint8_t>(3, 1, 1);
  Image<float> gt(3, 1);
  gt(0, 0) = 2.5f;
  gt(1, 0) = std::numeric_limits<float>::quiet_NaN();
  gt(2, 0) = 30.0f;
  const MetricsReport r = DepthErrors(est, gt, 10.0);
  EXPECT_EQ(r.n_points, 1u);
  EXPECT_NEAR(r.mean_abs_err, 0.5, 1e-7);

  est.mask(0, 0) = 0;
  const MetricsReport none = DepthErrors(est, gt, 10.0);
  EXPECT_TRUE(none.no_overlap);
  EXPECT_EQ(none.n_points, 0u);
  EXPECT_EQ(KindOf([&] { DepthErrors(est, Image<float>(2, 1), 10.0); }), ErrorKind::kAlignment);
  const std::vector<double> zero{0.0}, one{1.0};
  EXPECT_EQ(KindOf([&] { DepthErrorsFromPairs(zero, one); }), ErrorKind::kDomain);
}

TEST(PrCurves, HalfCoverage) {
  DepthResult est;
  est.depth = Image<float>(4, 1, 2.0f);
  est.mask = Image<std::uint8_t>(4, 1, 0);
  est.mask(0, 0) = est.mask(1, 0) = 1;
  const Image<float> gt(4, 1, 2.0f);
  const std::vector<double> th{0.05};
  const auto curve = PrCurves(est, gt, th);
  ASSERT_EQ(curve.size(), 1u);
  EXPECT_DOUBLE_EQ(*curve[0].precision, 100.0);
  EXPECT_DOUBLE_EQ(curve[0].recall, 50.0);
  EXPECT_NEAR(curve[0].f1, 200.0 / 3.0, 1e-12);

  est.mask(0, 0) = est.mask(1, 0) = 0;
  EXPECT_FALSE(PrCurves(est, gt, th)[0].precision.has_value());
  const std::vector<double> bad{0.1, 0.1};
  EXPECT_EQ(KindOf([&] { PrCurves(est, gt, bad); }), ErrorKind::kConfig);
}

TEST(PrCurves, MonotoneInThresholdProperty) {
  Rng rng(17);
  const std::vector<double> th{0.01, 0.05, 0.1, 0.2, 0.5, 1.0};
  for (int trial = 0; trial < 50; ++trial) {
    DepthResult est;
    est.depth = Image<float>(10, 8);
    est.mask = Image<std::uint8_t>(10, 8, 0);
    Image<float> gt(10, 8);
    for (std::size_t i = 0; i < gt.size(); ++i) {
      gt.data()[i] = rng.Coin(0.8) ? static_cast<float>(rng.Uniform(1, 5)) : NAN;
      est.depth.data()[i] = static_cast<float>(rng.Uniform(1, 5));
      est.mask.data()[i] = rng.Coin(0.5);
    }
    const auto curve = PrCurves(est, gt, th);
    for (std::size_t k = 1; k < curve.size(); ++k) {
      EXPECT_GE(curve[k].recall, curve[k - 1].recall);
      EXPECT_GE(curve[k].precision.value_or(0), curve[k - 1].precision.value_or(0));
    }
  }
}

TEST(AggregateReports, PointWeighted) {
  MetricsReport a, b;
  a.n_points = 1'000'000;
  a.mean_abs_err = 10.0;
  a.median_abs_err = 1.0;
  b.n_points = 3'000'000;
  b.mean_abs_err = 20.0;
  b.median_abs_err = 2.0;
  const std::vector<MetricsReport> both{a, b};
  const MetricsReport agg = AggregateReports(both);
  EXPECT_EQ(agg.n_points, 4'000'000u);
  EXPECT_NEAR(agg.mean_abs_err, 17.5, 1e-12);
  EXPECT_TRUE(agg.median_approximate);
  EXPECT_EQ(agg.median_abs_err, 2.0);
}

TEST(AggregateReports, PooledMedianEqualsConcatenation) {
  const std::vector<double> e1{1.0, 2.0, 3.3}, g1{1.2, 2.5, 3.0};
  const std::vector<double> e2{4.0, 1.0}, g2{4.1, 1.9};
  const std::vector<MetricsReport> parts{DepthErrorsFromPairs(e1, g1, {}, true),
                                         DepthErrorsFromPairs(e2, g2, {}, true)};
  const MetricsReport agg = AggregateReports(parts);
  const MetricsReport all = DepthErrorsFromPairs(std::vector<double>{1.0, 2.0, 3.3, 4.0, 1.0},
                                                 std::vector<double>{1.2, 2.5, 3.0, 4.1, 1.9});
  EXPECT_FALSE(agg.median_approximate);
  EXPECT_NEAR(agg.median_abs_err, all.median_abs_err, 1e-12);
  EXPECT_NEAR(agg.mean_abs_err, all.mean_abs_err, 1e-12);
  // Scale-invariant error is averaged per packet, not re-pooled.
  EXPECT_NEAR(agg.silog, (3 * parts[0].silog + 2 * parts[1].silog) / 5, 1e-9);
}

TEST(NearestSnapshot, WithinSkew) {
  std::vector<GtSnapshot> snaps(3);
  snaps[0].t = 0.0;
  snaps[1].t = 0.1;
  snaps[2].t = 0.2;
  EXPECT_EQ(NearestSnapshot(snaps, 0.14), 1u);
  EXPECT_EQ(NearestSnapshot(snaps, 0.19), 2u);
  EXPECT_FALSE(NearestSnapshot(snaps, 0.5).has_value());
  EXPECT_FALSE(NearestSnapshot({}, 0.0).has_value());
}

TEST(Reports, TextOutputs) {
  const std::vector<double> e{1.0}, g{1.5};
  const std::vector<MetricsReport> reports{DepthErrorsFromPairs(e, g)};
  const std::vector<std::string> names{"packet_0000"};
  std::ostringstream table;
  WriteReportTable(table, names, reports);
  EXPECT_NE(table.str().find("packet_0000"), std::string::npos);
  const std::string json = ReportToJson(reports[0]);
  EXPECT_NE(json.find("\"n_points\""), std::string::npos);
  std::ostringstream csv;
  PrPoint p;
  p.threshold = 0.1;
  p.recall = 10;
  const std::vector<PrPoint> curve{p};
  WritePrCsv(csv, curve);
  EXPECT_NE(csv.str().find("0.1"), std::string::npos);
}

}  // namespace
}  // namespace evfuse
