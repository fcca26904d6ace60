#include "dtx/twin.hpp"

#include <algorithm>
#include <cmath>

namespace dtx::twin {

double enqueue_time(const GoP& gop, Queue q, const twe::WorkloadEstimator& model,
                    const QueueParams& params) {
  gop.validate();
  return model.estimate(twe::make_features(gop, q, params)) * gop.bits /
         params.service_rate(q);
}

WorkloadTable build_workload_table(std::span<const GoP> gops,
                                   const twe::WorkloadEstimator& model,
                                   const QueueParams& params) {
  WorkloadTable table(gops.size());
  for (size_t k = 0; k < gops.size(); ++k)
    for (auto q : all_queues())
      table[k][queue_index(q)] = model.estimate(twe::make_features(gops[k], q, params));
  return table;
}

namespace {

inline double seconds_for(const GoP& gop, Queue q, double omega, const QueueParams& p) {
  return omega * gop.bits / p.service_rate(q);
}

// Blend of a bit-weighted running mean: (new_mass + old_avg * old_bits) /
// (new_bits + old_bits). Keeps the previous average when both are zero.
inline double blend_avg(double old_avg, double old_bits, double new_mass, double new_bits) {
  const double den = new_bits + old_bits;
  if (den <= 0.0) return old_avg;
  return (new_mass + old_avg * old_bits) / den;
}

}  // namespace

TwinQueueState step_edge(const TwinQueueState& s, const QueueParams& params,
                         double d, double t_cap) {
  TwinQueueState out = s;

  const double drain1 = std::min(s.len(Queue::CloudSlow), t_cap);
  const double drain2 = std::min(s.len(Queue::CloudMedium), t_cap);

  const double rate1 = params.service_rate(Queue::CloudSlow);
  const double rate2 = params.service_rate(Queue::CloudMedium);
  const double rate4 = params.service_rate(Queue::EdgeMedium);
  const double rate5 = params.service_rate(Queue::EdgeFast);

  double in4 = 0.0;
  double in5 = 0.0;
  if (s.avg_w_q1 > 0.0) {
    in4 += s.share_q1_q4 * drain1 * s.avg_w_q1_q4 * rate1 / (s.avg_w_q1 * rate4);
    in5 += s.share_q1_q5 * drain1 * s.avg_w_q1_q5 * rate1 / (s.avg_w_q1 * rate5);
  }
  if (s.avg_w_q2 > 0.0)
    in5 += s.share_q2_q5 * drain2 * s.avg_w_q2_q5 * rate2 / (s.avg_w_q2 * rate5);

  out.length[queue_index(Queue::EdgeMedium)] =
      std::max(0.0, s.len(Queue::EdgeMedium) + in4 - d);
  out.length[queue_index(Queue::EdgeFast)] =
      std::max(0.0, s.len(Queue::EdgeFast) + in5 - d);

  // Drained backlog carries its share of accumulated bits away.
  const double keep1 = s.len(Queue::CloudSlow) > 0.0
                           ? 1.0 - drain1 / s.len(Queue::CloudSlow)
                           : 1.0;
  const double keep2 = s.len(Queue::CloudMedium) > 0.0
                           ? 1.0 - drain2 / s.len(Queue::CloudMedium)
                           : 1.0;
  out.bits_q1 = s.bits_q1 * keep1;
  out.bits_q1_q4 = s.bits_q1_q4 * keep1;
  out.bits_q1_q5 = s.bits_q1_q5 * keep1;
  out.bits_q2 = s.bits_q2 * keep2;
  out.bits_q2_q5 = s.bits_q2_q5 * keep2;
  return out;
}

TwinQueueState step_cloud(const TwinQueueState& s, std::span<const GoP> gops,
                          std::span<const TranscodeDecision> decisions,
                          const WorkloadTable& omega, const QueueParams& params,
                          double d) {
  TwinQueueState out = s;

  // Per-queue arrival seconds and the sums feeding the ratio/average updates.
  std::array<double, kNumQueues> arrivals{};
  std::array<double, kNumQueues> arrival_bits{};
  double tag14_sec = 0.0, tag15_sec = 0.0, tag25_sec = 0.0;
  double tag14_bits = 0.0, tag15_bits = 0.0, tag25_bits = 0.0;
  double tag14_mass = 0.0, tag15_mass = 0.0, tag25_mass = 0.0;  // omega * bits
  double q1_mass = 0.0, q2_mass = 0.0;

  for (size_t k = 0; k < gops.size(); ++k) {
    const GoP& g = gops[k];
    const TranscodeDecision x = decisions[k];
    const auto& w = omega[k];
    for (auto q : all_queues()) {
      if (!x.bit(q)) continue;
      const int i = queue_index(q);
      if (is_cloud(q)) arrivals[i] += seconds_for(g, q, w[i], params);
      arrival_bits[i] += g.bits;
    }
    const bool x1 = x.bit(Queue::CloudSlow), x2 = x.bit(Queue::CloudMedium),
               x4 = x.bit(Queue::EdgeMedium), x5 = x.bit(Queue::EdgeFast);
    if (x1) q1_mass += w[queue_index(Queue::CloudSlow)] * g.bits;
    if (x2) q2_mass += w[queue_index(Queue::CloudMedium)] * g.bits;
    if (x4)
      tag14_sec += seconds_for(g, Queue::CloudSlow, w[queue_index(Queue::CloudSlow)], params);
    if (x1 && x5)
      tag15_sec += seconds_for(g, Queue::CloudSlow, w[queue_index(Queue::CloudSlow)], params);
    if (x2 && x5)
      tag25_sec += seconds_for(g, Queue::CloudMedium, w[queue_index(Queue::CloudMedium)], params);
    if (x1 && x4) {
      tag14_bits += g.bits;
      tag14_mass += w[queue_index(Queue::EdgeMedium)] * g.bits;
    }
    if (x1 && x5) {
      tag15_bits += g.bits;
      tag15_mass += w[queue_index(Queue::EdgeFast)] * g.bits;
    }
    if (x2 && x5) {
      tag25_bits += g.bits;
      tag25_mass += w[queue_index(Queue::EdgeFast)] * g.bits;
    }
  }

  // Share ratios blend the old backlog's share with this slot's tagged
  // arrivals, both measured in seconds of source-queue work.
  const double l1 = s.len(Queue::CloudSlow);
  const double l2 = s.len(Queue::CloudMedium);
  const double den1 = l1 + arrivals[queue_index(Queue::CloudSlow)];
  const double den2 = l2 + arrivals[queue_index(Queue::CloudMedium)];
  if (den1 > 0.0) {
    out.share_q1_q4 = (s.share_q1_q4 * l1 + tag14_sec) / den1;
    out.share_q1_q5 = (s.share_q1_q5 * l1 + tag15_sec) / den1;
  }
  if (den2 > 0.0) out.share_q2_q5 = (s.share_q2_q5 * l2 + tag25_sec) / den2;

  out.avg_w_q1 = blend_avg(s.avg_w_q1, s.bits_q1, q1_mass,
                           arrival_bits[queue_index(Queue::CloudSlow)]);
  out.avg_w_q2 = blend_avg(s.avg_w_q2, s.bits_q2, q2_mass,
                           arrival_bits[queue_index(Queue::CloudMedium)]);
  out.avg_w_q1_q4 = blend_avg(s.avg_w_q1_q4, s.bits_q1_q4, tag14_mass, tag14_bits);
  out.avg_w_q1_q5 = blend_avg(s.avg_w_q1_q5, s.bits_q1_q5, tag15_mass, tag15_bits);
  out.avg_w_q2_q5 = blend_avg(s.avg_w_q2_q5, s.bits_q2_q5, tag25_mass, tag25_bits);

  out.bits_q1 = s.bits_q1 + arrival_bits[queue_index(Queue::CloudSlow)];
  out.bits_q2 = s.bits_q2 + arrival_bits[queue_index(Queue::CloudMedium)];
  out.bits_q1_q4 = s.bits_q1_q4 + tag14_bits;
  out.bits_q1_q5 = s.bits_q1_q5 + tag15_bits;
  out.bits_q2_q5 = s.bits_q2_q5 + tag25_bits;

  for (auto q : cloud_queues()) {
    const int i = queue_index(q);
    const double after = s.length[i] + arrivals[i];
    out.length[i] = std::max(0.0, after - d);
  }
  return out;
}

TwinQueueState step_slot(const TwinQueueState& s, std::span<const GoP> gops,
                         std::span<const TranscodeDecision> decisions,
                         const WorkloadTable& omega, const QueueParams& params,
                         double d, double t_cap) {
  return step_cloud(step_edge(s, params, d, t_cap), gops, decisions, omega, params, d);
}

SyncResult sync(const TwinQueueState& s, const std::array<double, kNumQueues>& physical,
                double threshold) {
  SyncResult res{s, {}};
  for (auto q : all_queues()) {
    const int i = queue_index(q);
    if (std::abs(s.length[i] - physical[i]) > threshold) {
      res.state.length[i] = physical[i];
      res.synced.push_back(q);
    }
  }
  return res;
}

}  // namespace dtx::twin
