#include "dtx/sched.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dtx::sched {

namespace {

double decision_seconds(const TranscodeDecision& d, const std::array<double, kNumQueues>& sec) {
  double total = 0.0;
  for (auto q : all_queues())
    if (d.bit(q)) total += sec[queue_index(q)];
  return total;
}

VideoQuality largest_class(const Requests& w) {
  // Ties go to the higher quality.
  if (w.high >= w.medium && w.high >= w.low) return VideoQuality::High;
  if (w.medium >= w.low) return VideoQuality::Medium;
  return VideoQuality::Low;
}

long satisfied_requests(const TranscodeDecision& d, const Requests& w) {
  long s = 0;
  if (d.satisfies(VideoQuality::High)) s += w.high;
  if (d.satisfies(VideoQuality::Medium)) s += w.medium;
  if (d.satisfies(VideoQuality::Low)) s += w.low;
  return s;
}

bool fits(const TranscodeDecision& d, const std::array<double, kNumQueues>& sec,
          const std::array<double, kNumQueues>& load, const QueueParams& params) {
  for (auto q : all_queues()) {
    const int i = queue_index(q);
    if (d.bit(q) && load[i] + sec[i] > params.l_max[i]) return false;
  }
  return true;
}

void add_load(const TranscodeDecision& d, const std::array<double, kNumQueues>& sec,
              std::array<double, kNumQueues>& load) {
  for (auto q : all_queues())
    if (d.bit(q)) load[queue_index(q)] += sec[queue_index(q)];
}

}  // namespace

std::vector<TranscodeDecision> RoundRobin::decide(const SchedulerInput& input) {
  const auto& all = feasible_decisions();
  std::vector<TranscodeDecision> out;
  out.reserve(input.gops.size());
  for (size_t k = 0; k < input.gops.size(); ++k) {
    out.push_back(all[1 + cursor_ % (all.size() - 1)]);  // skip the all-zero entry
    ++cursor_;
  }
  return out;
}

std::vector<TranscodeDecision> ProportionalFair::decide(const SchedulerInput& input) {
  const size_t n = input.gops.size();
  std::vector<TranscodeDecision> out(n);
  if (n == 0) return out;

  const auto& all = feasible_decisions();
  std::vector<double> priority(n, 0.0);
  std::vector<VideoQuality> cls(n);
  for (size_t k = 0; k < n; ++k) {
    cls[k] = largest_class(input.gops[k].requests);
    double min_cost = std::numeric_limits<double>::infinity();
    for (const auto& d : all) {
      if (!d.satisfies(cls[k])) continue;
      min_cost = std::min(min_cost, decision_seconds(d, (*input.seconds)[k]));
    }
    priority[k] = min_cost > 0.0
                      ? static_cast<double>(input.gops[k].requests.total()) / min_cost
                      : 0.0;
  }

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (priority[a] != priority[b]) return priority[a] > priority[b];
    return input.gops[a].id < input.gops[b].id;
  });

  std::array<double, kNumQueues> load = input.twin->length;
  for (size_t k : order) {
    const auto& sec = (*input.seconds)[k];
    double best_cost = std::numeric_limits<double>::infinity();
    TranscodeDecision best;  // all-zero default when nothing fits
    for (const auto& d : all) {
      if (!d.any() || !d.satisfies(cls[k])) continue;
      if (!fits(d, sec, load, *input.params)) continue;
      const double cost = decision_seconds(d, sec);
      if (cost < best_cost) {
        best_cost = cost;
        best = d;
      }
    }
    out[k] = best;
    add_load(best, sec, load);
  }
  return out;
}

std::vector<TranscodeDecision> UtilityKnapsack::decide(const SchedulerInput& input) {
  const size_t n = input.gops.size();
  std::vector<TranscodeDecision> out(n);
  if (n == 0) return out;

  const auto& all = feasible_decisions();
  std::array<double, kNumQueues> load = input.twin->length;

  auto best_for = [&](size_t k) -> std::pair<TranscodeDecision, double> {
    const auto& sec = (*input.seconds)[k];
    const Requests& w = input.gops[k].requests;
    TranscodeDecision best;
    double best_score = 0.0;
    for (const auto& d : all) {
      if (!d.any()) continue;
      const long utility = satisfied_requests(d, w);
      if (utility <= 0) continue;
      if (!fits(d, sec, load, *input.params)) continue;
      const double weight = decision_seconds(d, sec);
      const double score = weight > 0.0 ? static_cast<double>(utility) / weight
                                        : std::numeric_limits<double>::infinity();
      if (score > best_score) {
        best_score = score;
        best = d;
      }
    }
    return {best, best_score};
  };

  std::vector<double> initial_score(n, 0.0);
  for (size_t k = 0; k < n; ++k) initial_score[k] = best_for(k).second;

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (initial_score[a] != initial_score[b]) return initial_score[a] > initial_score[b];
    return input.gops[a].id < input.gops[b].id;
  });

  for (size_t k : order) {
    auto [d, score] = best_for(k);
    out[k] = d;
    add_load(d, (*input.seconds)[k], load);
  }
  return out;
}

std::unique_ptr<Scheduler> make_baseline(const std::string& name) {
  if (name == "rr") return std::make_unique<RoundRobin>();
  if (name == "pf") return std::make_unique<ProportionalFair>();
  if (name == "ummkp") return std::make_unique<UtilityKnapsack>();
  return nullptr;
}

}  // namespace dtx::sched
