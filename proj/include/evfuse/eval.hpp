#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "evfuse/depth.hpp"
#include "evfuse/image.hpp"

namespace evfuse {

struct MetricsReport {
  double mean_abs_err = 0.0;    // m
  double median_abs_err = 0.0;  // m
  double bad_pix = 0.0;         // %
  double silog = 0.0;           // x100
  double aerr_rel = 0.0;        // %
  double log_rmse = 0.0;        // x100
  std::array<double, 3> delta_acc{};  // % below 1.25, 1.25^2, 1.25^3
  std::size_t n_points = 0;
  bool no_overlap = false;
  bool median_approximate = false;
  // Absolute errors, kept when requested so medians can be pooled.
  std::vector<double> abs_errors;
};

struct BadPixThresholds {
  double abs_m = 0.3;
  double rel = 0.05;
};

// Pixels with an estimate (mask set), a finite positive GT, and GT <= max_depth.
// gt uses NaN or non-positive values for "absent".
MetricsReport DepthErrors(const DepthResult& est, const Image<float>& gt, double max_depth,
                          const BadPixThresholds& bad_pix = {}, bool keep_errors = false);

// Same metrics over paired samples; the building block of DepthErrors.
MetricsReport DepthErrorsFromPairs(std::span<const double> est, std::span<const double> gt,
                                   const BadPixThresholds& bad_pix = {},
                                   bool keep_errors = false);

struct PrPoint {
  double threshold = 0.0;
  std::optional<double> precision;  // absent when there is no estimate with GT
  double recall = 0.0;
  double f1 = 0.0;
};

// Per-pixel matching. Thresholds must be strictly increasing and positive.
std::vector<PrPoint> PrCurves(const DepthResult& est, const Image<float>& gt,
                              std::span<const double> thresholds);

// Point-weighted aggregation. The median is pooled from retained errors when
// every input kept them, else a weighted median of medians (flagged).
MetricsReport AggregateReports(std::span<const MetricsReport> reports);

std::string ReportToJson(const MetricsReport& report);
void WriteReportTable(std::ostream& out, std::span<const std::string> names,
                      std::span<const MetricsReport> reports);
void WritePrCsv(std::ostream& out, std::span<const PrPoint> curve);

struct GtSnapshot {
  double t = 0.0;
  Image<float> depth;
};

// Index of the snapshot nearest to t, or nullopt when the skew exceeds
// max_skew seconds.
std::optional<std::size_t> NearestSnapshot(std::span<const GtSnapshot> snapshots, double t,
                                           double max_skew = 0.05);

}  // namespace evfuse
