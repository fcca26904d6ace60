#pragma once

#include <deque>
#include <memory>
#include <span>
#include <vector>

#include "dtx/frame.hpp"
#include "dtx/twin.hpp"

namespace dtx::plant {

/// Stochastic GoP arrival model. Content features are sampled from a pool of
/// synthetic profiles generated once through the real SI/TI pipeline; request
/// triples follow a per-quality mix. A scripted surge window can raise both
/// the high-quality share of requests and the arrival rate.
struct ArrivalCfg {
  double gops_per_slot = 4.0;
  bool poisson = true;  // false: fixed rounded count per slot
  double bits_lo = 4e6;
  double bits_hi = 1.2e7;
  double requests_mean = 20.0;  // mean total requests per GoP (always >= 1)
  double p_high = 0.5;
  double p_medium = 0.3;
  double p_low = 0.2;
  long surge_slot = -1;  // first surge slot, -1 disables
  long surge_len = 10;
  double surge_p_high = 0.85;
  double surge_rate_factor = 2.0;
  int pool_size = 64;
  features::SynthProfile pool_profile;
  double texture_lo = 0.2;
  double texture_hi = 3.0;
  double motion_lo = 0.0;
  double motion_hi = 3.0;
};

class ArrivalSource {
 public:
  virtual ~ArrivalSource() = default;
  virtual void reset(long episode) = 0;
  virtual std::vector<GoP> arrivals(long t) = 0;
};

class ArrivalProcess : public ArrivalSource {
 public:
  ArrivalProcess(const ArrivalCfg& cfg, Rng rng);

  void reset(long episode) override;
  std::vector<GoP> arrivals(long t) override;

  bool in_surge(long t) const;

  struct Profile {
    double si = 0, ti = 0;
    int num_frames = 0, width = 0, height = 0;
  };
  const std::vector<Profile>& pool() const { return pool_; }

 private:
  ArrivalCfg cfg_;
  Rng base_;
  std::vector<Profile> pool_;
  long episode_ = 0;
  long seq_ = 0;
};

/// Replays a fixed trace (one GoP list per slot); slots beyond the trace are
/// empty. reset() rewinds, episodes share the same trace.
class TraceSource : public ArrivalSource {
 public:
  explicit TraceSource(std::vector<std::vector<GoP>> slots) : slots_(std::move(slots)) {}
  void reset(long) override {}
  std::vector<GoP> arrivals(long t) override {
    if (t < 0 || static_cast<size_t>(t) >= slots_.size()) return {};
    return slots_[static_cast<size_t>(t)];
  }

 private:
  std::vector<std::vector<GoP>> slots_;
};

/// Trace CSV: slot,gop_id,b,si,ti,w1,w2,w3. Frame count and resolution of
/// replayed GoPs come from defaults supplied at load time.
void write_trace_csv(const std::string& path, const std::vector<std::vector<GoP>>& slots);
std::vector<std::vector<GoP>> read_trace_csv(const std::string& path, int num_frames,
                                             int width, int height);

struct PlantCfg {
  double noise_sigma = 0.05;     // lognormal sigma of the actual workloads
  double bias_threshold = 0.10;  // relative bias that triggers a training record
  double rtt_lo = 0.1;           // seconds
  double rtt_hi = 0.5;
};

struct DispatchEvent {
  long slot = 0;        // cloud completion slot
  long gop_id = 0;
  Queue from = Queue::CloudSlow;
  Queue to = Queue::EdgeMedium;
  long arrive_slot = 0;  // slot + ceil(rtt/d)
};

/// Ground-truth side of the simulation. Queue lengths follow the same flow
/// dynamics as the twin but priced with the actual (noisy) workloads, so a
/// perfect estimator reproduces the plant exactly. A per-GoP ledger tracks
/// cloud completions for dispatch events, and workload records are captured
/// whenever the estimate misses the actual cost by more than the bias
/// threshold.
class Plant {
 public:
  Plant(const QueueParams& params, const PlantCfg& cfg, Rng rng);

  void reset(long episode);

  /// Deterministic actual per-bit workload for (GoP, queue); depends only on
  /// the plant seed, episode, gop id and queue, never on decision order.
  double actual_workload(const GoP& gop, Queue q) const;
  twin::WorkloadTable actual_table(std::span<const GoP> gops) const;

  /// Draws this slot's cloud-edge round-trip time.
  double begin_slot(long t);
  double rtt() const { return rtt_; }

  /// Enqueues decided GoPs at their actual cost, updates the flow statistics,
  /// pushes ledger entries and captures training records against `estimated`.
  void apply_decisions(std::span<const GoP> gops,
                       std::span<const TranscodeDecision> decisions,
                       const twin::WorkloadTable& actual,
                       const twin::WorkloadTable& estimated);

  /// Edge half of the slot (same flow equations as the twin).
  void step_edge(double d, double t_cap);

  /// Cloud service: subtract d, clamp at zero, complete ledger entries and
  /// emit dispatch events for their edge tags.
  void drain(double d);

  const twin::TwinQueueState& flow() const { return flow_; }
  const std::array<double, kNumQueues>& lengths() const { return flow_.length; }

  const std::vector<twe::TrainingRecord>& records() const { return records_; }
  std::vector<twe::TrainingRecord> take_records();
  const std::vector<DispatchEvent>& slot_events() const { return slot_events_; }
  long completed() const { return completed_; }

 private:
  struct LedgerItem {
    long gop_id = 0;
    double remaining = 0.0;
    bool to_medium = false;  // TQ1 -> TQ4
    bool to_fast = false;    // TQ1/TQ2 -> TQ5
  };

  QueueParams params_;
  PlantCfg cfg_;
  Rng base_;
  long episode_ = 0;
  long slot_ = 0;
  double rtt_ = 0.0;
  double d_ = 0.5;
  twin::TwinQueueState flow_;
  std::array<std::deque<LedgerItem>, 3> ledger_;
  std::vector<twe::TrainingRecord> records_;
  std::vector<DispatchEvent> slot_events_;
  long completed_ = 0;
};

}  // namespace dtx::plant
