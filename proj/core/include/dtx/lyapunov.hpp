#pragma once

#include <span>
#include <utility>

#include "dtx/params.hpp"
#include "dtx/twin.hpp"
#include "dtx/types.hpp"

namespace dtx::objective {

/// Virtual queue accumulating service-delay overshoot beyond the average
/// threshold dbar. v_weight trades satisfaction against the delay deficit in
/// the per-slot reward.
struct DeficitQueue {
  double z = 0.0;
  double dbar = 1.8;
  double v_weight = 10.0;
};

/// Mean cloud length + rtt + mean edge length, in seconds.
double service_delay(const std::array<double, kNumQueues>& lengths, double rtt);
double service_delay(const twin::TwinQueueState& s, double rtt);

/// Lengths clamped to the per-queue working bound, for the delay used by the
/// deficit/reward/drift analysis. Raw lengths stay available for metrics.
std::array<double, kNumQueues> clamp_lengths(const std::array<double, kNumQueues>& lengths,
                                             const QueueParams& params);

struct SatCount {
  long satisfied = 0;
  long total = 0;
  double ratio() const;  // throws NoRequests when total == 0
};

/// Requests covered by the slot's decisions. Each quality class of a GoP
/// counts at most once however many routes produce it.
SatCount satisfaction_count(std::span<const GoP> gops,
                            std::span<const TranscodeDecision> decisions);
double satisfaction(std::span<const GoP> gops,
                    std::span<const TranscodeDecision> decisions);

/// z <- max(0, z + delay - dbar).
DeficitQueue deficit_update(const DeficitQueue& q, double delay);

/// Constant bounding the quadratic drift term:
/// 0.5 * (mean cloud l_max + rtt_max + mean edge l_max - dbar)^2.
double gamma_bound(const QueueParams& params, double rtt_max, double dbar);

/// Largest delay representable under the working bounds.
double max_delay(const QueueParams& params, double rtt_max);

/// Delay interval on which gamma_bound actually dominates 0.5*(D-dbar)^2.
/// When dbar exceeds half the max delay the lower end is 2*dbar - max_delay,
/// otherwise zero.
struct DelayBox {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double delay) const { return delay >= lo && delay <= hi; }
};
DelayBox delay_validity_box(const QueueParams& params, double rtt_max, double dbar);

/// v_weight * satisfaction - z * (delay - dbar).
double reward(const DeficitQueue& q, double satisfaction_ratio, double delay);

/// Checks 0.5*Z_{t+1}^2 - 0.5*Z_t^2 <= Z_t*(D_t - dbar) + gamma on every
/// consecutive pair of a (Z, D) trajectory. Callers are responsible for the
/// precondition that every D_t lies inside the validity box.
bool check_drift_bound(std::span<const std::pair<double, double>> zd_trajectory,
                       double dbar, double gamma);

}  // namespace dtx::objective
