#include "dtx/env.hpp"

#include <cmath>

namespace dtx::sim {

EpisodeStats summarize(const std::vector<SlotRecord>& slots) {
  EpisodeStats st;
  st.slots = static_cast<long>(slots.size());
  if (slots.empty()) return st;
  long sat = 0, tot = 0;
  double dsum = 0.0, rsum = 0.0;
  for (const auto& s : slots) {
    sat += s.satisfied;
    tot += s.total_requests;
    dsum += s.delay;
    rsum += s.reward;
  }
  st.mean_w = tot > 0 ? static_cast<double>(sat) / static_cast<double>(tot) : 1.0;
  st.mean_delay = dsum / static_cast<double>(slots.size());
  st.mean_reward = rsum / static_cast<double>(slots.size());
  st.final_z = slots.back().z;
  return st;
}

Environment::Environment(const EnvCfg& cfg, const twe::WorkloadEstimator& estimator,
                         std::shared_ptr<plant::ArrivalSource> arrivals, Rng rng)
    : cfg_(cfg),
      estimator_(estimator),
      arrivals_(std::move(arrivals)),
      plant_(cfg.params, cfg.plant, rng.fork(0xB10C)) {
  clock_.d = cfg_.d;
  deficit_.dbar = cfg_.dbar;
  deficit_.v_weight = cfg_.v_weight;
  reset(0);
}

void Environment::reset(long episode) {
  twin_ = twin::TwinQueueState{};
  deficit_ = objective::DeficitQueue{0.0, cfg_.dbar, cfg_.v_weight};
  clock_ = SlotClock{0, cfg_.d};
  plant_.reset(episode);
  arrivals_->reset(episode);
  zd_.clear();
}

SlotRecord Environment::step(sched::Scheduler& scheduler) {
  const long t = clock_.t;
  SlotRecord rec;
  rec.t = t;
  rec.rtt = plant_.begin_slot(t);

  const std::vector<GoP> gops = arrivals_->arrivals(t);
  const twin::WorkloadTable estimated = twin::build_workload_table(gops, estimator_, cfg_.params);
  const twin::WorkloadTable actual = plant_.actual_table(gops);

  twin::WorkloadTable seconds(gops.size());
  for (size_t k = 0; k < gops.size(); ++k)
    for (auto q : all_queues()) {
      const int i = queue_index(q);
      seconds[k][i] = estimated[k][i] * gops[k].bits / cfg_.params.service_rate(q);
    }

  sched::SchedulerInput input;
  input.slot = t;
  input.gops = gops;
  input.twin = &twin_;
  input.deficit_z = deficit_.z;
  input.omega = &estimated;
  input.seconds = &seconds;
  input.params = &cfg_.params;
  const std::vector<TranscodeDecision> decisions = scheduler.decide(input);

  // Twin and plant advance under the same flow composition: the edge half on
  // the start-of-slot state, then the cloud enqueue + service.
  twin_ = twin::step_edge(twin_, cfg_.params, cfg_.d, cfg_.t_cap);
  twin_ = twin::step_cloud(twin_, gops, decisions, estimated, cfg_.params, cfg_.d);

  plant_.step_edge(cfg_.d, cfg_.t_cap);
  plant_.apply_decisions(gops, decisions, actual, estimated);
  plant_.drain(cfg_.d);

  // Slot metrics on the post-decision state; the controller's delay uses
  // lengths clamped to the working bounds.
  const auto clamped = objective::clamp_lengths(twin_.length, cfg_.params);
  rec.delay = objective::service_delay(clamped, rec.rtt);
  const auto sat = objective::satisfaction_count(gops, decisions);
  rec.satisfied = sat.satisfied;
  rec.total_requests = sat.total;
  rec.w = sat.total > 0 ? sat.ratio() : 1.0;
  rec.reward = objective::reward(deficit_, rec.w, rec.delay);
  zd_.emplace_back(deficit_.z, rec.delay);
  deficit_ = objective::deficit_update(deficit_, rec.delay);

  const auto synced = twin::sync(twin_, plant_.lengths(), cfg_.sync_threshold);
  twin_ = synced.state;
  rec.synced = static_cast<int>(synced.synced.size());

  rec.z = deficit_.z;
  rec.num_gops = static_cast<long>(gops.size());
  rec.twin_len = twin_.length;
  rec.plant_len = plant_.lengths();

  clock_.tick();
  sched::SlotFeedback fb;
  fb.reward = rec.reward;
  fb.done = done();
  scheduler.observe_slot(fb);
  return rec;
}

std::vector<SlotRecord> Environment::run_episode(sched::Scheduler& scheduler, long episode) {
  reset(episode);
  scheduler.begin_episode(episode);
  std::vector<SlotRecord> records;
  records.reserve(static_cast<size_t>(cfg_.t_max));
  while (!done()) records.push_back(step(scheduler));
  return records;
}

}  // namespace dtx::sim
