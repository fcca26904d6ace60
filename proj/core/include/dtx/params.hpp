#pragma once

#include <array>

#include "dtx/types.hpp"

namespace dtx {

/// Static per-queue hardware description. f is in GHz, kappa is the
/// dimensionless computing-density scale; their product times 1e9 is the
/// queue's service rate in flops per second. l_max is the working queue-length
/// bound in seconds used by the delay analysis and the capacity-aware
/// schedulers.
struct QueueParams {
  std::array<double, kNumQueues> f_ghz{20.0, 16.0, 12.0, 10.0, 8.0};
  std::array<double, kNumQueues> kappa{6.0, 6.0, 6.0, 5.0, 5.0};
  std::array<double, kNumQueues> l_max{1.5, 1.5, 1.5, 1.5, 1.5};

  double f(Queue q) const { return f_ghz[queue_index(q)]; }
  double k(Queue q) const { return kappa[queue_index(q)]; }
  double lmax(Queue q) const { return l_max[queue_index(q)]; }
  /// flops per second available to queue q.
  double service_rate(Queue q) const { return f(q) * 1e9 * k(q); }
};

}  // namespace dtx
