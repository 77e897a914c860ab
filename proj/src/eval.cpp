#include "evfuse/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <numeric>

#include <json.hpp>

#include "evfuse/error.hpp"

namespace evfuse {
namespace {

bool GtPresent(float z) { return std::isfinite(z) && z > 0.0f; }

double Median(std::vector<double> values) {
  const std::size_t n = values.size();
  std::nth_element(values.begin(), values.begin() + n / 2, values.end());
  const double upper = values[n / 2];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + n / 2);
  return 0.5 * (lower + upper);
}

MetricsReport NoOverlap() {
  MetricsReport report;
  report.no_overlap = true;
  return report;
}

}  // namespace

MetricsReport DepthErrorsFromPairs(std::span<const double> est, std::span<const double> gt,
                                   const BadPixThresholds& bad_pix, bool keep_errors) {
  if (est.size() != gt.size()) throw Error(ErrorKind::kConfig, "sample count mismatch");
  const std::size_t n = est.size();
  if (n == 0) return NoOverlap();

  std::vector<double> errors(n);
  double sum_e = 0.0, sum_rel = 0.0, sum_d = 0.0, sum_d2 = 0.0;
  std::size_t bad = 0;
  std::array<std::size_t, 3> within{};
  for (std::size_t i = 0; i < n; ++i) {
    if (!(est[i] > 0.0) || !(gt[i] > 0.0)) {
      throw Error(ErrorKind::kDomain, "depth samples must be positive");
    }
    const double e = std::abs(est[i] - gt[i]);
    errors[i] = e;
    sum_e += e;
    sum_rel += e / gt[i];
    const double d = std::log(est[i]) - std::log(gt[i]);
    sum_d += d;
    sum_d2 += d * d;
    if (e > bad_pix.abs_m && e / gt[i] > bad_pix.rel) ++bad;
    const double ratio = std::max(est[i] / gt[i], gt[i] / est[i]);
    double limit = 1.25;
    for (int k = 0; k < 3; ++k, limit *= 1.25) {
      if (ratio < limit) ++within[k];
    }
  }

  const double nd = static_cast<double>(n);
  MetricsReport r;
  r.n_points = n;
  r.mean_abs_err = sum_e / nd;
  r.median_abs_err = Median(errors);
  r.bad_pix = 100.0 * bad / nd;
  const double mean_d = sum_d / nd;
  r.silog = 100.0 * std::max(0.0, sum_d2 / nd - mean_d * mean_d);
  r.log_rmse = 100.0 * std::sqrt(sum_d2 / nd);
  r.aerr_rel = 100.0 * sum_rel / nd;
  for (int k = 0; k < 3; ++k) r.delta_acc[k] = 100.0 * within[k] / nd;
  if (keep_errors) r.abs_errors = std::move(errors);
  return r;
}

MetricsReport DepthErrors(const DepthResult& est, const Image<float>& gt, double max_depth,
                          const BadPixThresholds& bad_pix, bool keep_errors) {
  if (est.depth.width() != gt.width() || est.depth.height() != gt.height()) {
    throw Error(ErrorKind::kAlignment, "estimate and ground truth sizes differ");
  }
  std::vector<double> e, g;
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      const float z = gt(x, y);
      if (!est.Has(x, y) || !GtPresent(z) || z > max_depth) continue;
      e.push_back(est.depth(x, y));
      g.push_back(z);
    }
  }
  return DepthErrorsFromPairs(e, g, bad_pix, keep_errors);
}

std::vector<PrPoint> PrCurves(const DepthResult& est, const Image<float>& gt,
                              std::span<const double> thresholds) {
  if (est.depth.width() != gt.width() || est.depth.height() != gt.height()) {
    throw Error(ErrorKind::kAlignment, "estimate and ground truth sizes differ");
  }
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0.0) || (i > 0 && !(thresholds[i] > thresholds[i - 1]))) {
      throw Error(ErrorKind::kConfig, "thresholds must be positive and strictly increasing");
    }
  }
  std::vector<double> matched_errors;
  std::size_t gt_count = 0;
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      if (!GtPresent(gt(x, y))) continue;
      ++gt_count;
      if (est.Has(x, y)) matched_errors.push_back(std::abs(est.depth(x, y) - gt(x, y)));
    }
  }
  std::sort(matched_errors.begin(), matched_errors.end());

  std::vector<PrPoint> curve;
  curve.reserve(thresholds.size());
  for (double th : thresholds) {
    const auto within = static_cast<double>(
        std::upper_bound(matched_errors.begin(), matched_errors.end(), th) -
        matched_errors.begin());
    PrPoint p;
    p.threshold = th;
    if (!matched_errors.empty()) p.precision = 100.0 * within / matched_errors.size();
    p.recall = gt_count > 0 ? 100.0 * within / gt_count : 0.0;
    const double prec = p.precision.value_or(0.0);
    p.f1 = prec + p.recall > 0.0 ? 2.0 * prec * p.recall / (prec + p.recall) : 0.0;
    curve.push_back(p);
  }
  return curve;
}

MetricsReport AggregateReports(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw Error(ErrorKind::kConfig, "no reports to aggregate");
  std::size_t total = 0;
  bool pooled = true;
  for (const auto& r : reports) {
    if (r.no_overlap) continue;
    total += r.n_points;
    if (r.abs_errors.size() != r.n_points) pooled = false;
  }
  if (total == 0) return NoOverlap();

  MetricsReport out;
  out.n_points = total;
  for (const auto& r : reports) {
    if (r.no_overlap || r.n_points == 0) continue;
    const double w = static_cast<double>(r.n_points) / total;
    out.mean_abs_err += w * r.mean_abs_err;
    out.bad_pix += w * r.bad_pix;
    out.silog += w * r.silog;
    out.aerr_rel += w * r.aerr_rel;
    out.log_rmse += w * r.log_rmse;
    for (int k = 0; k < 3; ++k) out.delta_acc[k] += w * r.delta_acc[k];
  }

  if (pooled) {
    std::vector<double> all;
    all.reserve(total);
    for (const auto& r : reports) {
      if (!r.no_overlap) all.insert(all.end(), r.abs_errors.begin(), r.abs_errors.end());
    }
    out.median_abs_err = Median(all);
    out.abs_errors = std::move(all);
  } else {
    std::vector<std::pair<double, std::size_t>> medians;
    for (const auto& r : reports) {
      if (!r.no_overlap && r.n_points > 0) medians.emplace_back(r.median_abs_err, r.n_points);
    }
    std::sort(medians.begin(), medians.end());
    std::size_t acc = 0;
    for (const auto& [m, n] : medians) {
      acc += n;
      if (2 * acc >= total) {
        out.median_abs_err = m;
        break;
      }
    }
    out.median_approximate = medians.size() > 1;
  }
  return out;
}

std::string ReportToJson(const MetricsReport& r) {
  nlohmann::ordered_json j;
  if (r.no_overlap) {
    j["no_overlap"] = true;
    j["n_points"] = 0;
    return j.dump(2);
  }
  j["n_points"] = r.n_points;
  j["mean_abs_err_m"] = r.mean_abs_err;
  j["median_abs_err_m"] = r.median_abs_err;
  j["median_approximate"] = r.median_approximate;
  j["bad_pix_pct"] = r.bad_pix;
  j["silog_x100"] = r.silog;
  j["aerr_rel_pct"] = r.aerr_rel;
  j["log_rmse_x100"] = r.log_rmse;
  j["delta_acc_pct"] = r.delta_acc;
  return j.dump(2);
}

void WriteReportTable(std::ostream& out, std::span<const std::string> names,
                      std::span<const MetricsReport> reports) {
  if (names.size() != reports.size()) throw Error(ErrorKind::kConfig, "name count mismatch");
  std::size_t name_width = 4;
  for (const auto& n : names) name_width = std::max(name_width, n.size());
  const char* headers[] = {"Mean[m]", "Median[m]", "bad-pix%", "SILog", "AErrR%",
                           "logRMSE", "d<1.25", "d<1.25^2", "d<1.25^3", "points"};
  out << std::left << std::setw(static_cast<int>(name_width)) << "name";
  for (const char* h : headers) out << "  " << std::right << std::setw(9) << h;
  out << '\n';
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    out << std::left << std::setw(static_cast<int>(name_width)) << names[i];
    if (r.no_overlap) {
      out << "  no overlap\n";
      continue;
    }
    const double cols[] = {r.mean_abs_err, r.median_abs_err, r.bad_pix, r.silog,
                           r.aerr_rel,     r.log_rmse,       r.delta_acc[0],
                           r.delta_acc[1], r.delta_acc[2]};
    for (double v : cols) out << "  " << std::right << std::setw(9) << std::fixed
                              << std::setprecision(3) << v;
    out << "  " << std::right << std::setw(9) << r.n_points << '\n';
  }
  out.unsetf(std::ios::floatfield);
}

void WritePrCsv(std::ostream& out, std::span<const PrPoint> curve) {
  out << "threshold_m,precision_pct,recall_pct,f1_pct\n";
  char line[128];
  for (const auto& p : curve) {
    if (p.precision) {
      std::snprintf(line, sizeof(line), "%.6g,%.6f,%.6f,%.6f\n", p.threshold, *p.precision,
                    p.recall, p.f1);
    } else {
      std::snprintf(line, sizeof(line), "%.6g,,%.6f,%.6f\n", p.threshold, p.recall, p.f1);
    }
    out << line;
  }
}

std::optional<std::size_t> NearestSnapshot(std::span<const GtSnapshot> snapshots, double t,
                                           double max_skew) {
  std::optional<std::size_t> best;
  double best_skew = max_skew;
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    const double skew = std::abs(snapshots[i].t - t);
    if (skew <= best_skew) {
      if (!best || skew < best_skew) {
        best = i;
        best_skew = skew;
      }
    }
  }
  return best;
}

}  // namespace evfuse
