#pragma once

#include <memory>
#include <vector>

#include "dtx/lyapunov.hpp"
#include "dtx/plant.hpp"
#include "dtx/sched.hpp"
#include "dtx/twin.hpp"

namespace dtx::sim {

struct EnvCfg {
  QueueParams params;
  double d = 0.5;          // slot length, seconds
  double t_cap = 0.5;      // per-slot cloud-to-edge drain cap, seconds
  long t_max = 100;        // slots per episode
  double dbar = 1.8;
  double v_weight = 10.0;
  double sync_threshold = 0.2;  // twin/plant length bias triggering a sync
  plant::PlantCfg plant;
};

/// Everything recorded about one slot.
struct SlotRecord {
  long t = 0;
  double delay = 0.0;  // clamped-length service delay used by the controller
  double w = 1.0;      // satisfaction ratio; 1 by convention when no requests
  double z = 0.0;      // deficit after the slot's update
  double reward = 0.0;
  double rtt = 0.0;
  long satisfied = 0;
  long total_requests = 0;
  long num_gops = 0;
  int synced = 0;
  std::array<double, kNumQueues> twin_len{};
  std::array<double, kNumQueues> plant_len{};
};

struct EpisodeStats {
  double mean_w = 1.0;       // request-weighted over the episode
  double mean_delay = 0.0;
  double final_z = 0.0;
  double mean_loss = 0.0;
  double mean_reward = 0.0;
  long slots = 0;
};

EpisodeStats summarize(const std::vector<SlotRecord>& slots);

/// Discrete-time simulation: per slot, arrivals are priced by the estimator,
/// the scheduler places them, the twin and the plant advance under the same
/// flow dynamics (estimated vs actual workloads), the Lyapunov bookkeeping
/// runs on the clamped twin delay, and out-of-threshold twin lengths sync to
/// the plant.
class Environment {
 public:
  Environment(const EnvCfg& cfg, const twe::WorkloadEstimator& estimator,
              std::shared_ptr<plant::ArrivalSource> arrivals, Rng rng);

  void reset(long episode);
  bool done() const { return clock_.t >= cfg_.t_max; }
  long slot() const { return clock_.t; }

  /// Advances one slot with the given scheduler (decide + observe_slot).
  SlotRecord step(sched::Scheduler& scheduler);

  /// Full episode; calls scheduler.begin_episode.
  std::vector<SlotRecord> run_episode(sched::Scheduler& scheduler, long episode);

  const twin::TwinQueueState& twin() const { return twin_; }
  const plant::Plant& physical() const { return plant_; }
  plant::Plant& physical() { return plant_; }
  const objective::DeficitQueue& deficit() const { return deficit_; }
  const EnvCfg& cfg() const { return cfg_; }

  /// (Z_t, D_t) pairs of the current episode, for drift-bound checks.
  const std::vector<std::pair<double, double>>& zd_trajectory() const { return zd_; }

 private:
  EnvCfg cfg_;
  const twe::WorkloadEstimator& estimator_;
  std::shared_ptr<plant::ArrivalSource> arrivals_;
  plant::Plant plant_;
  twin::TwinQueueState twin_;
  objective::DeficitQueue deficit_;
  SlotClock clock_;
  std::vector<std::pair<double, double>> zd_;
};

}  // namespace dtx::sim
