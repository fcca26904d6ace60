#pragma once

#include <string>
#include <vector>

#include "dtx/dqn.hpp"
#include "dtx/env.hpp"
#include "dtx/plant.hpp"
#include "dtx/twe.hpp"

namespace dtx::cfg {

/// Flat key=value configuration with [sections]. Unknown sections or keys are
/// rejected with the offending line number. All values carry defaults, so an
/// absent file or empty section is valid.
struct ExperimentConfig {
  // [run]
  std::uint64_t seed = 42;
  std::string scheduler = "dt-ddqn";
  long episodes = 300;  // RL training episodes
  long slots = 100;     // slots per episode
  std::string out_dir = "out";
  std::string trace_path;       // replay arrivals from a trace CSV when set
  std::string checkpoint_path;  // load the agent instead of training when set
  long eval_runs = 20;

  // [sim]
  sim::EnvCfg env;

  // [arrivals]
  plant::ArrivalCfg arrivals;

  // [twe]
  long twe_samples = 9970;
  double twe_split = 0.8;
  twe::TrainCfg twe_train;
  std::string twe_model_path;  // reuse a fitted model checkpoint when set

  // [rl]
  rl::AgentCfg agent;

  static ExperimentConfig from_file(const std::string& path);
  /// Parses the given text (for tests); `name` labels error messages.
  static ExperimentConfig from_string(const std::string& text, const std::string& name);

  /// Cross-field checks (ranges, probabilities, schedulers); throws ConfigError.
  void validate() const;
};

bool known_scheduler(const std::string& name);

}  // namespace dtx::cfg
