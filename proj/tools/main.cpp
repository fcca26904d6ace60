// Experiment driver for the cloud-edge transcoding simulator.
//
//   dtx run        one scheduler end to end, metrics + summary CSVs
//   dtx compare    several schedulers on identical arrival traces
//   dtx train-twe  fit the workload estimation model, emit error report
//   dtx gen-trace  export an arrival trace for replay
//
// Exit codes: 0 success, 2 configuration error, 3 non-finite training loss.

#include <CLI11.hpp>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "dtx/config.hpp"
#include "dtx/errors.hpp"
#include "dtx/runner.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::string scheduler;
  long seed = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_scheduler) {
  cmd->add_option("--config", args.config_path, "Configuration file (key=value sections)");
  cmd->add_option("--out", args.out_dir, "Output directory (overrides [run] out)");
  cmd->add_option("--seed", args.seed, "Seed override");
  if (with_scheduler)
    cmd->add_option("--scheduler", args.scheduler,
                    "Scheduler override: rr|pf|ummkp|ddqn|dt-ddqn");
}

dtx::cfg::ExperimentConfig load_config(const CommonArgs& args) {
  dtx::cfg::ExperimentConfig c = args.config_path.empty()
                                     ? dtx::cfg::ExperimentConfig{}
                                     : dtx::cfg::ExperimentConfig::from_file(args.config_path);
  if (!args.out_dir.empty()) c.out_dir = args.out_dir;
  if (args.seed >= 0) c.seed = static_cast<std::uint64_t>(args.seed);
  if (!args.scheduler.empty()) {
    if (!dtx::cfg::known_scheduler(args.scheduler))
      throw dtx::ConfigError("--scheduler", 0, "unknown scheduler '" + args.scheduler + "'");
    c.scheduler = args.scheduler;
  }
  c.validate();
  return c;
}

void print_summary_header() {
  std::printf("%-10s %10s %10s %12s %10s %14s\n", "scheduler", "mean_w", "mean_delay",
              "mean_reward", "final_z", "queue_var");
}

void print_summary(const dtx::runner::Summary& s) {
  std::printf("%-10s %10.4f %10.4f %12.4f %10.4f %14.6f\n", s.scheduler.c_str(), s.mean_w,
              s.mean_delay, s.mean_reward, s.final_z, s.queue_mean_variance);
}

std::vector<std::string> split_names(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"digital-twin assisted cloud-edge transcoding simulator"};
  app.require_subcommand(1);

  CommonArgs run_args, cmp_args, twe_args, trace_args;
  std::string trace_replay, schedulers_csv = "rr,pf,ummkp,ddqn,dt-ddqn";
  std::string records_csv, frames_file, checkpoint;

  auto* cmd_run = app.add_subcommand("run", "Run one scheduler and write reports");
  add_common(cmd_run, run_args, true);
  cmd_run->add_option("--trace", trace_replay, "Replay arrivals from a trace CSV");
  cmd_run->add_option("--checkpoint", checkpoint, "Load a trained agent checkpoint");

  auto* cmd_cmp = app.add_subcommand("compare", "Run several schedulers on one trace");
  add_common(cmd_cmp, cmp_args, false);
  cmd_cmp->add_option("--schedulers", schedulers_csv, "Comma-separated scheduler names");

  auto* cmd_twe = app.add_subcommand("train-twe", "Fit the workload estimation model");
  add_common(cmd_twe, twe_args, false);
  cmd_twe->add_option("--records", records_csv, "Fit from a records CSV instead of synthetic data");

  auto* cmd_trace = app.add_subcommand("gen-trace", "Write an arrival trace CSV");
  add_common(cmd_trace, trace_args, false);
  cmd_trace->add_option("--frames-file", frames_file,
                        "Raw frame file (header 'w h n' + 8-bit luma) supplying SI/TI");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) {
      auto c = load_config(run_args);
      if (!trace_replay.empty()) c.trace_path = trace_replay;
      if (!checkpoint.empty()) c.checkpoint_path = checkpoint;
      const auto report = dtx::runner::run(c);
      print_summary_header();
      print_summary(report.summary);
      std::printf("metrics: %s\n", report.metrics_csv.c_str());
      if (!report.training_csv.empty())
        std::printf("training: %s\n", report.training_csv.c_str());
      std::printf("summary: %s\n", report.summary_csv.c_str());
    } else if (cmd_cmp->parsed()) {
      const auto c = load_config(cmp_args);
      const auto names = split_names(schedulers_csv);
      const auto report = dtx::runner::compare(c, names);
      print_summary_header();
      for (const auto& s : report.summaries) print_summary(s);
      std::printf("comparison: %s\n", report.compare_csv.c_str());
      std::printf("summary: %s\n", report.summary_csv.c_str());
    } else if (cmd_twe->parsed()) {
      const auto c = load_config(twe_args);
      const auto report = dtx::runner::train_twe(c, records_csv);
      std::printf("train records: %ld  test records: %ld\n", report.n_train, report.n_test);
      std::printf("final train mse: %.6g\n", report.train_mse);
      std::printf("test mse (vs targets): %.6g\n", report.test_mse);
      if (records_csv.empty())
        std::printf("test mse (vs noiseless truth): %.6g\n", report.test_mse_vs_truth);
      std::printf("lambda: %.6g\n", report.lambda);
      std::printf("model: %s\n", report.model_path.c_str());
    } else if (cmd_trace->parsed()) {
      const auto c = load_config(trace_args);
      const auto path = dtx::runner::gen_trace(c, frames_file);
      std::printf("trace: %s\n", path.c_str());
    }
  } catch (const dtx::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const dtx::NonfiniteLoss& e) {
    std::fprintf(stderr, "training diverged: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
