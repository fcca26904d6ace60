#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dtx/params.hpp"
#include "dtx/twin.hpp"
#include "dtx/types.hpp"

namespace dtx::sched {

/// Everything a scheduler may look at when placing one slot's GoPs: the
/// virtual queue snapshot, the delay deficit, and per-(GoP, queue) workload
/// estimates both as flops/bit and as enqueue seconds.
struct SchedulerInput {
  long slot = 0;
  std::span<const GoP> gops;
  const twin::TwinQueueState* twin = nullptr;
  double deficit_z = 0.0;
  const twin::WorkloadTable* omega = nullptr;    // flops per bit
  const twin::WorkloadTable* seconds = nullptr;  // enqueue seconds
  const QueueParams* params = nullptr;
};

/// End-of-slot feedback for learning schedulers.
struct SlotFeedback {
  double reward = 0.0;
  bool done = false;
};

class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual std::string name() const = 0;
  /// One feasible decision per arrived GoP, in input order.
  virtual std::vector<TranscodeDecision> decide(const SchedulerInput& input) = 0;
  virtual void begin_episode(long /*episode*/) {}
  virtual void observe_slot(const SlotFeedback&) {}
};

/// Cycles through the 13 non-zero feasible decisions in canonical order with
/// a cursor that persists across GoPs and slots. Ignores requests, workloads
/// and queue caps.
class RoundRobin : public Scheduler {
 public:
  std::string name() const override { return "rr"; }
  std::vector<TranscodeDecision> decide(const SchedulerInput& input) override;

 private:
  size_t cursor_ = 0;
};

/// Priority scheduler: GoPs ranked by total requests per second of the
/// cheapest decision covering their largest request class, then greedily
/// given that cheapest decision subject to keeping every queue under l_max.
class ProportionalFair : public Scheduler {
 public:
  std::string name() const override { return "pf"; }
  std::vector<TranscodeDecision> decide(const SchedulerInput& input) override;
};

/// Greedy utility-per-weight multi-choice knapsack. Utility of a candidate
/// decision is the number of requests it satisfies, weight is the total
/// queue-seconds it adds; remaining capacity per queue is l_max - length.
/// GoPs whose candidates all violate capacity (or earn nothing) stay idle.
class UtilityKnapsack : public Scheduler {
 public:
  std::string name() const override { return "ummkp"; }
  std::vector<TranscodeDecision> decide(const SchedulerInput& input) override;
};

/// The non-learning benchmark factory; returns nullptr for unknown names.
std::unique_ptr<Scheduler> make_baseline(const std::string& name);

}  // namespace dtx::sched
