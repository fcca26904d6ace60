#pragma once

#include <array>
#include <span>
#include <vector>

#include "dtx/params.hpp"
#include "dtx/twe.hpp"
#include "dtx/types.hpp"

namespace dtx::twin {

/// Per-GoP, per-queue workloads in flops per bit, aligned with a GoP span.
using WorkloadTable = std::vector<std::array<double, kNumQueues>>;

/// Aggregate virtual queue state. Lengths are seconds of pending work. The
/// share_* ratios track the fraction of a cloud queue's backlog tagged for an
/// edge queue; avg_w_* are bit-weighted running means of per-bit workloads of
/// the corresponding backlog; bits_* are the matching bit accumulators, which
/// grow on enqueue and decay in proportion to the fraction of the source
/// backlog drained each slot.
struct TwinQueueState {
  std::array<double, kNumQueues> length{};

  double share_q1_q4 = 0.0;  // fraction of TQ1 backlog headed to TQ4
  double share_q1_q5 = 0.0;  // fraction of TQ1 backlog headed to TQ5
  double share_q2_q5 = 0.0;  // fraction of TQ2 backlog headed to TQ5

  double avg_w_q1 = 0.0;     // mean flops/bit of TQ1 backlog
  double avg_w_q2 = 0.0;
  double avg_w_q1_q4 = 0.0;  // mean flops/bit, in TQ4 terms, of TQ1->TQ4 backlog
  double avg_w_q1_q5 = 0.0;
  double avg_w_q2_q5 = 0.0;

  double bits_q1 = 0.0;
  double bits_q2 = 0.0;
  double bits_q1_q4 = 0.0;
  double bits_q1_q5 = 0.0;
  double bits_q2_q5 = 0.0;

  double len(Queue q) const { return length[queue_index(q)]; }
};

/// Seconds the GoP adds to queue q: estimate * bits / service_rate(q).
double enqueue_time(const GoP& gop, Queue q, const twe::WorkloadEstimator& model,
                    const QueueParams& params);

/// Fills one WorkloadTable row per GoP with model estimates for all queues.
WorkloadTable build_workload_table(std::span<const GoP> gops,
                                   const twe::WorkloadEstimator& model,
                                   const QueueParams& params);

/// Edge half of a slot. Converts the tagged fraction of each cloud queue's
/// drainable backlog (capped at t_cap seconds) into edge-queue work, applies
/// the slot of edge service and clamps at zero. Also decays the bit
/// accumulators by the drained fraction of their source queue. Undefined
/// averages (zero) contribute no inflow. Call on the start-of-slot state,
/// before step_cloud.
TwinQueueState step_edge(const TwinQueueState& s, const QueueParams& params,
                         double d, double t_cap);

/// Cloud half of a slot: enqueues every decided GoP into the queues whose bit
/// is set, applies the slot of cloud service and clamps at zero, and updates
/// the share ratios, running-average workloads and bit accumulators from this
/// slot's arrivals. `omega` must hold one row per GoP (flops per bit).
/// Ratios/averages with zero denominators keep their previous value.
TwinQueueState step_cloud(const TwinQueueState& s, std::span<const GoP> gops,
                          std::span<const TranscodeDecision> decisions,
                          const WorkloadTable& omega, const QueueParams& params,
                          double d);

/// One full slot: step_edge on the start-of-slot state, then step_cloud.
TwinQueueState step_slot(const TwinQueueState& s, std::span<const GoP> gops,
                         std::span<const TranscodeDecision> decisions,
                         const WorkloadTable& omega, const QueueParams& params,
                         double d, double t_cap);

struct SyncResult {
  TwinQueueState state;
  std::vector<Queue> synced;
};

/// Overwrites every twin length whose absolute bias against the reported
/// physical length exceeds the threshold; returns which queues synced.
SyncResult sync(const TwinQueueState& s, const std::array<double, kNumQueues>& physical,
                double threshold);

}  // namespace dtx::twin
