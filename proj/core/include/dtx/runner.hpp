#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "dtx/config.hpp"
#include "dtx/env.hpp"

namespace dtx::runner {

/// Aggregate statistics over one or more runs of a scheduler. mean_w is
/// request-weighted (total satisfied over total requested); queue length
/// moments are taken over the physical lengths of every recorded slot.
struct Summary {
  std::string scheduler;
  long slots = 0;
  long total_requests = 0;
  double mean_w = 1.0;
  double mean_delay = 0.0;
  double mean_reward = 0.0;
  double final_z = 0.0;
  std::array<double, kNumQueues> mean_len{};
  std::array<double, kNumQueues> var_len{};
  double queue_mean_variance = 0.0;
};

Summary summarize_runs(const std::string& scheduler,
                       const std::vector<std::vector<sim::SlotRecord>>& runs);

struct RunReport {
  std::string out_dir;
  std::string metrics_csv;
  std::string training_csv;  // empty for non-learning schedulers
  std::string trace_csv;
  std::string summary_csv;
  std::string checkpoint;  // empty for non-learning schedulers
  Summary summary;
};

/// One scheduler end to end: builds the estimator (fitting the workload model
/// for dt-ddqn, the universal mean otherwise), trains when the scheduler
/// learns, runs the metrics episode, and writes every artefact under out_dir.
RunReport run(const cfg::ExperimentConfig& config);

struct CompareReport {
  std::string out_dir;
  std::string compare_csv;
  std::string summary_csv;
  std::vector<Summary> summaries;
  /// Per scheduler, per eval run, per slot.
  std::vector<std::vector<std::vector<sim::SlotRecord>>> records;
};

/// Runs every named scheduler against the identical arrival traces and plant
/// noise (shared seed); learning schedulers are trained first on disjoint
/// training episodes.
CompareReport compare(const cfg::ExperimentConfig& config,
                      const std::vector<std::string>& schedulers);

struct TweReport {
  std::string model_path;
  std::string histogram_csv;
  std::string curve_csv;
  long n_train = 0;
  long n_test = 0;
  double train_mse = 0.0;          // normalised, final epoch
  double test_mse = 0.0;           // normalised, against held-out noisy targets
  double test_mse_vs_truth = 0.0;  // normalised, against the noiseless generator
  double lambda = 0.0;
};

/// Generates synthetic training data (or loads a records CSV), fits the
/// workload model, and writes checkpoint + error histogram + MSE curve.
TweReport train_twe(const cfg::ExperimentConfig& config, const std::string& records_csv = "");

/// Writes an arrival trace for the configured scenario; when frames_file is
/// set, SI/TI come from that raw frame file instead of the synthetic pool.
std::string gen_trace(const cfg::ExperimentConfig& config, const std::string& frames_file = "");

/// Synthetic training records drawn from the configured arrival pool and the
/// queue configurations, priced by the noisy ground truth.
std::vector<twe::TrainingRecord> synth_records(const cfg::ExperimentConfig& config, long count);

}  // namespace dtx::runner
