#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace evfuse {

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Least-squares line through (log x, log y).
ScalingFit FitLogLog(std::span<const double> x, std::span<const double> y);

struct Timing {
  double median_seconds = 0.0;
  double cv = 0.0;  // coefficient of variation over repetitions
  int repetitions = 0;
};

// Runs `stage` (preceded each time by the untimed `setup`) until the CV of
// the timings is within cv_budget or max_repetitions is reached.
Timing TimeStage(const std::function<void()>& setup, const std::function<void()>& stage,
                 int repetitions, int max_repetitions, double cv_budget);

struct Stage {
  std::function<void()> setup;  // untimed, may be empty
  std::function<void()> run;
};

// Times several stages in rounds, one run of each stage per round, so slow
// drift in machine speed lands on all of them alike. Rounds are added until
// every stage meets cv_budget or max_repetitions rounds have run.
std::vector<Timing> TimeInterleaved(std::span<const Stage> stages, int repetitions,
                                    int max_repetitions, double cv_budget);

struct BenchOptions {
  std::vector<std::size_t> event_counts{25000, 50000, 100000, 200000};
  std::vector<int> plane_counts{25, 50, 100, 200};
  std::size_t fixed_events = 50000;  // for the N_Z and camera sweeps
  int fixed_planes = 100;            // for the N_e and fusion sweeps
  std::vector<int> subinterval_counts{1, 2, 4, 8};
  int repetitions = 3;
  int max_repetitions = 12;
  double cv_budget = 0.1;
  std::uint64_t seed = 7;
};

struct BenchRow {
  std::string sweep;  // "events", "planes", "cameras", "subintervals", "argmax", "agt"
  double x = 0.0;
  Timing timing;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  ScalingFit dsi_vs_events;
  ScalingFit dsi_vs_planes;
  ScalingFit fusion_vs_subintervals;
  double stereo_mono_dsi_ratio = 0.0;
  double fusion_ns2_ns1_ratio = 0.0;
  double argmax_spread = 0.0;  // max / min timing across event counts
  double agt_spread = 0.0;
};

// Builds simulator streams and times DSI creation, fusion, arg max and AGT.
BenchReport RunBench(const BenchOptions& options = {});

void WriteBenchCsv(std::ostream& out, const BenchReport& report);
void WriteBenchSummary(std::ostream& out, const BenchReport& report);

}  // namespace evfuse
