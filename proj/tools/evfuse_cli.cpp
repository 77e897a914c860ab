#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

using evfuse::cli::ReconstructOverrides;

void AddOverrideFlags(CLI::App& cmd, ReconstructOverrides& ov) {
  cmd.add_option("--zmin", ov.z_min, "nearest depth plane [m]");
  cmd.add_option("--zmax", ov.z_max, "farthest depth plane [m]");
  cmd.add_option("--nz", ov.nz, "number of depth planes");
  cmd.add_option("--scheme", ov.scheme, "fusion scheme, e.g. Hc*At or At*Hc");
  cmd.add_option("--ns", ov.ns, "time sub-intervals per packet");
  cmd.add_option("--split", ov.split, "sub-interval split: count or time");
  cmd.add_option("--shuffle", ov.shuffle, "sub-interval shuffling: off, cyclic or seeded");
  cmd.add_option("--seed", ov.seed, "seed for seeded shuffling");
  auto* count = cmd.add_option("--packet-count", ov.packet_count, "events per packet");
  auto* duration = cmd.add_option("--packet-duration", ov.packet_duration, "packet length [s]");
  count->excludes(duration);
  cmd.add_option("--threads", ov.threads, "worker threads");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-camera event-based depth reconstruction"};
  app.require_subcommand(1);

  ReconstructOverrides rec_ov;
  std::string rec_config;
  bool dump_dsi = false;
  auto* rec = app.add_subcommand("reconstruct", "build, fuse and threshold DSIs per packet");
  rec->add_option("--config", rec_config, "pipeline config JSON")->required();
  rec->add_option("--out", rec_ov.out, "output directory");
  rec->add_flag("--dump-dsi", dump_dsi, "also write each fused DSI as dsi.bin");
  AddOverrideFlags(*rec, rec_ov);

  std::string sim_scene, sim_out = "sim";
  bool sim_binary = false;
  auto* sim = app.add_subcommand("simulate", "generate events, trajectory and calibration");
  sim->add_option("--scene", sim_scene, "simulation JSON")->required();
  sim->add_option("--out", sim_out, "output directory");
  sim->add_flag("--binary", sim_binary, "write binary event files");

  evfuse::cli::EvaluateOptions eval_opts;
  auto* eval = app.add_subcommand("evaluate", "compare a reconstruction with ground truth");
  eval->add_option("--run", eval_opts.run_dir, "reconstruct output directory")->required();
  auto* eval_scene = eval->add_option("--scene", eval_opts.scene_path, "simulation JSON");
  auto* eval_gt = eval->add_option("--gt", eval_opts.gt_list_path, "list of 't depth.pfm' lines");
  eval_scene->excludes(eval_gt);
  eval->add_option("--out", eval_opts.out_dir, "metrics directory (default: the run)");

  evfuse::cli::ProjectDsiOptions proj_opts;
  auto* proj = app.add_subcommand("project-dsi", "front/top/side max projections of a DSI");
  auto* proj_config = proj->add_option("--config", proj_opts.config_path, "pipeline config JSON");
  auto* proj_dsi = proj->add_option("--dsi", proj_opts.dsi_path, "dsi.bin from reconstruct");
  proj_config->excludes(proj_dsi);
  proj->add_option("--packet", proj_opts.packet, "packet index");
  proj->add_option("--out", proj_opts.out_dir, "output directory");
  AddOverrideFlags(*proj, proj_opts.overrides);

  evfuse::BenchOptions bench_opts;
  std::string bench_out = "bench";
  bool bench_quick = false;
  auto* bench = app.add_subcommand("bench", "stage timings and scaling fits");
  bench->add_option("--out", bench_out, "output directory");
  bench->add_option("--reps", bench_opts.repetitions, "initial repetitions per point");
  bench->add_option("--cv", bench_opts.cv_budget, "coefficient-of-variation budget");
  bench->add_flag("--quick", bench_quick, "smaller sweep sizes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*rec) {
      const auto s = evfuse::cli::Reconstruct(rec_config, rec_ov, dump_dsi);
      std::printf("%zu packets, %zu points, manifest %s\n", s.packets, s.points,
                  s.manifest_path.c_str());
    } else if (*sim) {
      evfuse::cli::Simulate(sim_scene, sim_out, sim_binary);
      std::printf("simulation written to %s\n", sim_out.c_str());
    } else if (*eval) {
      const auto s = evfuse::cli::Evaluate(eval_opts);
      std::printf("%zu packets evaluated, %zu skipped, median abs error %.4f m over %zu points\n",
                  s.packets_evaluated, s.packets_skipped, s.aggregate.median_abs_err,
                  s.aggregate.n_points);
    } else if (*proj) {
      evfuse::cli::ProjectDsi(proj_opts);
      std::printf("projections written to %s\n", proj_opts.out_dir.c_str());
    } else if (*bench) {
      if (bench_quick) {
        bench_opts.event_counts = {10000, 20000, 40000, 80000};
        bench_opts.plane_counts = {25, 50, 100, 200};
        bench_opts.fixed_events = 20000;
        bench_opts.fixed_planes = 50;
      }
      const auto report = evfuse::cli::Bench(bench_out, bench_opts);
      evfuse::WriteBenchSummary(std::cout, report);
    }
  } catch (const evfuse::Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", evfuse::ErrorKindName(e.kind()), e.what());
    return evfuse::cli::ExitCodeFor(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
