#include "dtx/plant.hpp"

#include <algorithm>
#include <cmath>

#include "dtx/csv.hpp"

namespace dtx::plant {

ArrivalProcess::ArrivalProcess(const ArrivalCfg& cfg, Rng rng) : cfg_(cfg), base_(rng) {
  Rng pool_rng = base_.fork(0xF001);
  pool_.reserve(static_cast<size_t>(cfg_.pool_size));
  for (int i = 0; i < cfg_.pool_size; ++i) {
    features::SynthProfile p = cfg_.pool_profile;
    p.texture = pool_rng.uniform(cfg_.texture_lo, cfg_.texture_hi);
    p.motion = pool_rng.uniform(cfg_.motion_lo, cfg_.motion_hi);
    auto [seq, gop] = features::synth_gop(pool_rng, p);
    pool_.push_back({gop.si, gop.ti, gop.num_frames, gop.width, gop.height});
  }
}

void ArrivalProcess::reset(long episode) {
  episode_ = episode;
  seq_ = 0;
}

bool ArrivalProcess::in_surge(long t) const {
  return cfg_.surge_slot >= 0 && t >= cfg_.surge_slot && t < cfg_.surge_slot + cfg_.surge_len;
}

std::vector<GoP> ArrivalProcess::arrivals(long t) {
  Rng rng = base_.fork(static_cast<std::uint64_t>(episode_ + 1))
                .fork(static_cast<std::uint64_t>(t) + 1);
  const bool surge = in_surge(t);
  const double rate = cfg_.gops_per_slot * (surge ? cfg_.surge_rate_factor : 1.0);
  const long k = cfg_.poisson ? rng.poisson(rate) : std::lround(rate);

  double ph = cfg_.p_high, pm = cfg_.p_medium, pl = cfg_.p_low;
  {
    const double sum = ph + pm + pl;
    ph /= sum;
    pm /= sum;
    pl /= sum;
  }
  if (surge) {
    // High share jumps; the remaining mass keeps the medium/low proportion.
    const double rest = pm + pl;
    ph = cfg_.surge_p_high;
    pm = (1.0 - ph) * (rest > 0.0 ? pm / rest : 0.5);
    pl = 1.0 - ph - pm;
  }

  std::vector<GoP> out;
  out.reserve(static_cast<size_t>(k));
  for (long j = 0; j < k; ++j) {
    const auto& prof = pool_[static_cast<size_t>(rng.uniform_int(0, cfg_.pool_size - 1))];
    GoP g;
    g.id = episode_ * 1000000L + seq_++;
    g.bits = rng.uniform(cfg_.bits_lo, cfg_.bits_hi);
    g.num_frames = prof.num_frames;
    g.width = prof.width;
    g.height = prof.height;
    g.si = prof.si;
    g.ti = prof.ti;
    const long total = 1 + rng.poisson(std::max(0.0, cfg_.requests_mean - 1.0));
    for (long r = 0; r < total; ++r) {
      const double u = rng.uniform01();
      if (u < ph)
        ++g.requests.high;
      else if (u < ph + pm)
        ++g.requests.medium;
      else
        ++g.requests.low;
    }
    out.push_back(g);
  }
  return out;
}

void write_trace_csv(const std::string& path, const std::vector<std::vector<GoP>>& slots) {
  csv::Writer w(path);
  w.row({"# dtx-trace v1"});
  w.header({"slot", "gop_id", "b", "si", "ti", "w1", "w2", "w3"});
  for (size_t t = 0; t < slots.size(); ++t) {
    for (const auto& g : slots[t]) {
      w.row({csv::num(static_cast<long>(t)), csv::num(g.id), csv::num(g.bits),
             csv::num(g.si), csv::num(g.ti), csv::num(g.requests.high),
             csv::num(g.requests.medium), csv::num(g.requests.low)});
    }
  }
}

std::vector<std::vector<GoP>> read_trace_csv(const std::string& path, int num_frames,
                                             int width, int height) {
  const auto table = csv::read(path);
  std::vector<std::vector<GoP>> slots;
  for (size_t r = 0; r < table.rows.size(); ++r) {
    const long t = static_cast<long>(table.value(r, 0));
    if (t < 0) throw std::runtime_error("trace: negative slot index");
    if (static_cast<size_t>(t) >= slots.size()) slots.resize(static_cast<size_t>(t) + 1);
    GoP g;
    g.id = static_cast<long>(table.value(r, 1));
    g.bits = table.value(r, 2);
    g.si = table.value(r, 3);
    g.ti = table.value(r, 4);
    g.requests.high = static_cast<long>(table.value(r, 5));
    g.requests.medium = static_cast<long>(table.value(r, 6));
    g.requests.low = static_cast<long>(table.value(r, 7));
    g.num_frames = num_frames;
    g.width = width;
    g.height = height;
    slots[static_cast<size_t>(t)].push_back(g);
  }
  return slots;
}

namespace {
double work_seconds(const GoP& g, Queue q, const std::array<double, kNumQueues>& omega,
                    const QueueParams& params) {
  return omega[queue_index(q)] * g.bits / params.service_rate(q);
}
}  // namespace

Plant::Plant(const QueueParams& params, const PlantCfg& cfg, Rng rng)
    : params_(params), cfg_(cfg), base_(rng) {}

void Plant::reset(long episode) {
  episode_ = episode;
  slot_ = 0;
  rtt_ = 0.0;
  flow_ = twin::TwinQueueState{};
  for (auto& q : ledger_) q.clear();
  slot_events_.clear();
  completed_ = 0;
}

double Plant::actual_workload(const GoP& gop, Queue q) const {
  // Counter-style draw keyed on (episode, gop, queue) so the value never
  // depends on scheduling order.
  Rng draw = base_.fork(hash_mix(static_cast<std::uint64_t>(episode_),
                                 hash_mix(static_cast<std::uint64_t>(gop.id),
                                          static_cast<std::uint64_t>(queue_index(q)))));
  return twe::ground_truth_workload(twe::make_features(gop, q, params_), draw,
                                    cfg_.noise_sigma);
}

twin::WorkloadTable Plant::actual_table(std::span<const GoP> gops) const {
  twin::WorkloadTable table(gops.size());
  for (size_t k = 0; k < gops.size(); ++k)
    for (auto q : all_queues())
      table[k][queue_index(q)] = actual_workload(gops[k], q);
  return table;
}

double Plant::begin_slot(long t) {
  slot_ = t;
  slot_events_.clear();
  Rng rng = base_.fork(0x0177).fork(static_cast<std::uint64_t>(episode_ + 1))
                .fork(static_cast<std::uint64_t>(t) + 1);
  rtt_ = rng.uniform(cfg_.rtt_lo, cfg_.rtt_hi);
  return rtt_;
}

void Plant::apply_decisions(std::span<const GoP> gops,
                            std::span<const TranscodeDecision> decisions,
                            const twin::WorkloadTable& actual,
                            const twin::WorkloadTable& estimated) {
  // Enqueue-only cloud step (d = 0) keeps the flow statistics arithmetic
  // identical to the twin's.
  flow_ = twin::step_cloud(flow_, gops, decisions, actual, params_, 0.0);

  for (size_t k = 0; k < gops.size(); ++k) {
    const GoP& g = gops[k];
    const TranscodeDecision x = decisions[k];
    for (auto q : all_queues()) {
      if (!x.bit(q)) continue;
      const int i = queue_index(q);
      const double a = actual[k][i];
      const double e = estimated[k][i];
      if (a > 0.0 && std::abs(a - e) / a > cfg_.bias_threshold)
        records_.push_back({twe::make_features(g, q, params_), a});
    }
    const bool x1 = x.bit(Queue::CloudSlow), x2 = x.bit(Queue::CloudMedium),
               x3 = x.bit(Queue::CloudFast), x5 = x.bit(Queue::EdgeFast);
    if (x1) {
      LedgerItem item;
      item.gop_id = g.id;
      item.remaining = work_seconds(g, Queue::CloudSlow, actual[k], params_);
      item.to_medium = x.bit(Queue::EdgeMedium);
      item.to_fast = x5;
      ledger_[0].push_back(item);
    }
    if (x2) {
      LedgerItem item;
      item.gop_id = g.id;
      item.remaining = work_seconds(g, Queue::CloudMedium, actual[k], params_);
      item.to_fast = x5;
      ledger_[1].push_back(item);
    }
    if (x3) {
      LedgerItem item;
      item.gop_id = g.id;
      item.remaining = work_seconds(g, Queue::CloudFast, actual[k], params_);
      ledger_[2].push_back(item);
    }
  }
}

void Plant::step_edge(double d, double t_cap) {
  d_ = d;
  flow_ = twin::step_edge(flow_, params_, d, t_cap);
}

void Plant::drain(double d) {
  for (auto q : cloud_queues()) {
    const int i = queue_index(q);
    flow_.length[i] = std::max(0.0, flow_.length[i] - d);

    double budget = d;
    auto& items = ledger_[i];
    while (budget > 0.0 && !items.empty()) {
      LedgerItem& front = items.front();
      const double used = std::min(front.remaining, budget);
      front.remaining -= used;
      budget -= used;
      if (front.remaining <= 1e-12) {
        const long arrive = slot_ + static_cast<long>(std::ceil(rtt_ / (d > 0.0 ? d : 1.0)));
        if (front.to_medium && q == Queue::CloudSlow)
          slot_events_.push_back({slot_, front.gop_id, q, Queue::EdgeMedium, arrive});
        if (front.to_fast && (q == Queue::CloudSlow || q == Queue::CloudMedium))
          slot_events_.push_back({slot_, front.gop_id, q, Queue::EdgeFast, arrive});
        ++completed_;
        items.pop_front();
      }
    }
  }
}

std::vector<twe::TrainingRecord> Plant::take_records() {
  std::vector<twe::TrainingRecord> out;
  out.swap(records_);
  return out;
}

}  // namespace dtx::plant
