#include "dtx/lyapunov.hpp"

#include <algorithm>
#include <cmath>

#include "dtx/errors.hpp"

namespace dtx::objective {

double service_delay(const std::array<double, kNumQueues>& lengths, double rtt) {
  double cloud = 0.0;
  for (auto q : cloud_queues()) cloud += lengths[queue_index(q)];
  double edge = 0.0;
  for (auto q : edge_queues()) edge += lengths[queue_index(q)];
  return cloud / 3.0 + rtt + edge / 2.0;
}

double service_delay(const twin::TwinQueueState& s, double rtt) {
  return service_delay(s.length, rtt);
}

std::array<double, kNumQueues> clamp_lengths(const std::array<double, kNumQueues>& lengths,
                                             const QueueParams& params) {
  std::array<double, kNumQueues> out = lengths;
  for (auto q : all_queues()) {
    const int i = queue_index(q);
    out[i] = std::min(out[i], params.l_max[i]);
  }
  return out;
}

double SatCount::ratio() const {
  if (total == 0) throw NoRequests("satisfaction: no requests in slot");
  return static_cast<double>(satisfied) / static_cast<double>(total);
}

SatCount satisfaction_count(std::span<const GoP> gops,
                            std::span<const TranscodeDecision> decisions) {
  SatCount c;
  for (size_t k = 0; k < gops.size(); ++k) {
    const Requests& w = gops[k].requests;
    const TranscodeDecision x = decisions[k];
    c.total += w.total();
    if (x.satisfies(VideoQuality::High)) c.satisfied += w.high;
    if (x.satisfies(VideoQuality::Medium)) c.satisfied += w.medium;
    if (x.satisfies(VideoQuality::Low)) c.satisfied += w.low;
  }
  return c;
}

double satisfaction(std::span<const GoP> gops,
                    std::span<const TranscodeDecision> decisions) {
  return satisfaction_count(gops, decisions).ratio();
}

DeficitQueue deficit_update(const DeficitQueue& q, double delay) {
  DeficitQueue out = q;
  out.z = std::max(0.0, q.z + delay - q.dbar);
  return out;
}

double max_delay(const QueueParams& params, double rtt_max) {
  double cloud = 0.0;
  for (auto q : cloud_queues()) cloud += params.l_max[queue_index(q)];
  double edge = 0.0;
  for (auto q : edge_queues()) edge += params.l_max[queue_index(q)];
  return cloud / 3.0 + rtt_max + edge / 2.0;
}

double gamma_bound(const QueueParams& params, double rtt_max, double dbar) {
  const double dev = max_delay(params, rtt_max) - dbar;
  return 0.5 * dev * dev;
}

DelayBox delay_validity_box(const QueueParams& params, double rtt_max, double dbar) {
  const double hi = max_delay(params, rtt_max);
  return {std::max(0.0, 2.0 * dbar - hi), hi};
}

double reward(const DeficitQueue& q, double satisfaction_ratio, double delay) {
  return q.v_weight * satisfaction_ratio - q.z * (delay - q.dbar);
}

bool check_drift_bound(std::span<const std::pair<double, double>> zd, double dbar,
                       double gamma) {
  for (size_t t = 0; t + 1 < zd.size(); ++t) {
    const double z = zd[t].first;
    const double delay = zd[t].second;
    const double z_next = zd[t + 1].first;
    const double drift = 0.5 * z_next * z_next - 0.5 * z * z;
    const double bound = z * (delay - dbar) + gamma;
    if (drift > bound + 1e-9) return false;
  }
  return true;
}

}  // namespace dtx::objective
