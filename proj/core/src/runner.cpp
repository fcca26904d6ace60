#include "dtx/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "dtx/csv.hpp"
#include "dtx/errors.hpp"
#include "dtx/frame.hpp"

namespace dtx::runner {

namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kStreamTwe = 0xA11;
constexpr std::uint64_t kStreamEnv = 0xB22;
constexpr std::uint64_t kStreamAgent = 0xC33;
constexpr std::uint64_t kStreamTrace = 0xD44;
constexpr long kEvalEpisodeBase = 100000;

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

/// Wraps an arrival source and remembers what it produced, slot by slot.
class RecordingSource : public plant::ArrivalSource {
 public:
  explicit RecordingSource(std::shared_ptr<plant::ArrivalSource> inner)
      : inner_(std::move(inner)) {}
  void reset(long episode) override {
    inner_->reset(episode);
    slots_.clear();
  }
  std::vector<GoP> arrivals(long t) override {
    auto gops = inner_->arrivals(t);
    if (static_cast<size_t>(t) >= slots_.size()) slots_.resize(static_cast<size_t>(t) + 1);
    slots_[static_cast<size_t>(t)] = gops;
    return gops;
  }
  const std::vector<std::vector<GoP>>& slots() const { return slots_; }

 private:
  std::shared_ptr<plant::ArrivalSource> inner_;
  std::vector<std::vector<GoP>> slots_;
};

std::shared_ptr<plant::ArrivalSource> make_arrivals(const cfg::ExperimentConfig& c) {
  if (!c.trace_path.empty()) {
    return std::make_shared<plant::TraceSource>(plant::read_trace_csv(
        c.trace_path, c.arrivals.pool_profile.num_frames, c.arrivals.pool_profile.width,
        c.arrivals.pool_profile.height));
  }
  return std::make_shared<plant::ArrivalProcess>(c.arrivals, Rng(c.seed, kStreamTrace));
}

bool is_learning(const std::string& name) { return name == "ddqn" || name == "dt-ddqn"; }
bool uses_twin_model(const std::string& name) { return name == "dt-ddqn"; }

struct EstimatorBundle {
  std::unique_ptr<twe::WorkloadEstimator> estimator;
  double universal_mean = 0.0;
  bool fitted = false;
  twe::WorkloadModel model;
};

EstimatorBundle build_estimator(const cfg::ExperimentConfig& c, const std::string& scheduler) {
  EstimatorBundle b;
  const auto records = synth_records(c, c.twe_samples);
  double mean = 0.0;
  for (const auto& r : records) mean += r.workload;
  mean /= static_cast<double>(records.size());
  b.universal_mean = mean;

  if (uses_twin_model(scheduler)) {
    if (!c.twe_model_path.empty()) {
      b.model = twe::WorkloadModel::load(c.twe_model_path);
    } else {
      const long n_train = static_cast<long>(std::floor(c.twe_split * records.size()));
      std::vector<twe::TrainingRecord> train(records.begin(), records.begin() + n_train);
      b.model = twe::fit(train, c.twe_train);
    }
    b.fitted = true;
    b.estimator = std::make_unique<twe::WorkloadModel>(b.model);
  } else {
    b.estimator = std::make_unique<twe::MeanEstimator>(mean);
  }
  return b;
}

std::unique_ptr<sched::Scheduler> make_scheduler(const cfg::ExperimentConfig& c,
                                                 const std::string& name) {
  if (auto s = sched::make_baseline(name)) return s;
  if (is_learning(name)) {
    Rng rng(c.seed, hash_mix(kStreamAgent, std::hash<std::string>{}(name)));
    if (!c.checkpoint_path.empty())
      return std::make_unique<rl::DqnAgent>(
          rl::DqnAgent::load(c.checkpoint_path, name, c.episodes, rng));
    return std::make_unique<rl::DqnAgent>(c.agent, name, c.episodes, rng);
  }
  throw std::invalid_argument("unknown scheduler: " + name);
}

struct TrainingRow {
  long episode;
  double epsilon, mean_w, mean_delay, final_z, mean_loss, mean_reward;
};

std::vector<TrainingRow> train_agent(const cfg::ExperimentConfig& c, rl::DqnAgent& agent,
                                     sim::Environment& env) {
  std::vector<TrainingRow> rows;
  agent.set_training(true);
  for (long ep = 0; ep < c.episodes; ++ep) {
    const auto records = env.run_episode(agent, ep);
    const auto stats = sim::summarize(records);
    rows.push_back({ep, agent.epsilon(), stats.mean_w, stats.mean_delay, stats.final_z,
                    agent.mean_loss(), stats.mean_reward});
  }
  agent.set_training(false);
  return rows;
}

void write_metrics_csv(const std::string& path,
                       const std::vector<std::vector<sim::SlotRecord>>& runs) {
  csv::Writer w(path);
  w.row({"# dtx-metrics v1"});
  std::vector<std::string> cols = {"run",  "t",        "delay", "w",      "z",
                                   "reward", "rtt",    "gops",  "requests", "satisfied",
                                   "synced"};
  for (auto q : all_queues()) cols.push_back("L" + std::to_string(display_id(q)));
  for (auto q : all_queues()) cols.push_back("PL" + std::to_string(display_id(q)));
  w.header(cols);
  for (size_t r = 0; r < runs.size(); ++r) {
    for (const auto& s : runs[r]) {
      std::vector<std::string> cells = {
          csv::num(static_cast<long>(r)), csv::num(s.t),       csv::num(s.delay),
          csv::num(s.w),                  csv::num(s.z),       csv::num(s.reward),
          csv::num(s.rtt),                csv::num(s.num_gops), csv::num(s.total_requests),
          csv::num(s.satisfied),          csv::num(static_cast<long>(s.synced))};
      for (auto q : all_queues()) cells.push_back(csv::num(s.twin_len[queue_index(q)]));
      for (auto q : all_queues()) cells.push_back(csv::num(s.plant_len[queue_index(q)]));
      w.row(cells);
    }
  }
}

void write_training_csv(const std::string& path, const std::vector<TrainingRow>& rows) {
  csv::Writer w(path);
  w.row({"# dtx-training v1"});
  w.header({"episode", "epsilon", "mean_w", "mean_delay", "final_z", "mean_loss",
            "mean_reward"});
  for (const auto& r : rows)
    w.row({csv::num(r.episode), csv::num(r.epsilon), csv::num(r.mean_w),
           csv::num(r.mean_delay), csv::num(r.final_z), csv::num(r.mean_loss),
           csv::num(r.mean_reward)});
}

std::vector<std::string> summary_columns() {
  std::vector<std::string> cols = {"scheduler", "slots",       "total_requests",
                                   "mean_w",    "mean_delay",  "mean_reward",
                                   "final_z",   "queue_mean_variance"};
  for (auto q : all_queues()) cols.push_back("mean_L" + std::to_string(display_id(q)));
  for (auto q : all_queues()) cols.push_back("var_L" + std::to_string(display_id(q)));
  return cols;
}

std::vector<std::string> summary_cells(const Summary& s) {
  std::vector<std::string> cells = {s.scheduler,
                                    csv::num(s.slots),
                                    csv::num(s.total_requests),
                                    csv::num(s.mean_w),
                                    csv::num(s.mean_delay),
                                    csv::num(s.mean_reward),
                                    csv::num(s.final_z),
                                    csv::num(s.queue_mean_variance)};
  for (auto q : all_queues()) cells.push_back(csv::num(s.mean_len[queue_index(q)]));
  for (auto q : all_queues()) cells.push_back(csv::num(s.var_len[queue_index(q)]));
  return cells;
}

void write_summary_csv(const std::string& path, const std::vector<Summary>& summaries) {
  csv::Writer w(path);
  w.row({"# dtx-summary v1"});
  w.header(summary_columns());
  for (const auto& s : summaries) w.row(summary_cells(s));
}

}  // namespace

Summary summarize_runs(const std::string& scheduler,
                       const std::vector<std::vector<sim::SlotRecord>>& runs) {
  Summary s;
  s.scheduler = scheduler;
  long sat = 0;
  double dsum = 0.0, rsum = 0.0, zsum = 0.0;
  std::array<double, kNumQueues> len_sum{};
  std::array<double, kNumQueues> len_sq{};
  for (const auto& run : runs) {
    for (const auto& rec : run) {
      ++s.slots;
      sat += rec.satisfied;
      s.total_requests += rec.total_requests;
      dsum += rec.delay;
      rsum += rec.reward;
      for (auto q : all_queues()) {
        const int i = queue_index(q);
        len_sum[i] += rec.plant_len[i];
        len_sq[i] += rec.plant_len[i] * rec.plant_len[i];
      }
    }
    if (!run.empty()) zsum += run.back().z;
  }
  if (s.slots == 0) return s;
  const double n = static_cast<double>(s.slots);
  s.mean_w = s.total_requests > 0 ? static_cast<double>(sat) / s.total_requests : 1.0;
  s.mean_delay = dsum / n;
  s.mean_reward = rsum / n;
  s.final_z = runs.empty() ? 0.0 : zsum / static_cast<double>(runs.size());
  double mean_of_means = 0.0;
  for (auto q : all_queues()) {
    const int i = queue_index(q);
    s.mean_len[i] = len_sum[i] / n;
    s.var_len[i] = std::max(0.0, len_sq[i] / n - s.mean_len[i] * s.mean_len[i]);
    mean_of_means += s.mean_len[i];
  }
  mean_of_means /= kNumQueues;
  for (auto q : all_queues()) {
    const double d = s.mean_len[queue_index(q)] - mean_of_means;
    s.queue_mean_variance += d * d;
  }
  s.queue_mean_variance /= kNumQueues;
  return s;
}

std::vector<twe::TrainingRecord> synth_records(const cfg::ExperimentConfig& c, long count) {
  // Feature distribution mirrors the simulation: queue configurations from
  // the scenario, content features from the same synthetic pool.
  plant::ArrivalProcess pool_source(c.arrivals, Rng(c.seed, kStreamTrace));
  const auto& pool = pool_source.pool();
  Rng rng(c.seed, kStreamTwe);
  std::vector<twe::TrainingRecord> records;
  records.reserve(static_cast<size_t>(count));
  for (long i = 0; i < count; ++i) {
    const auto q = all_queues()[static_cast<size_t>(rng.uniform_int(0, kNumQueues - 1))];
    const auto& prof = pool[static_cast<size_t>(
        rng.uniform_int(0, static_cast<long>(pool.size()) - 1))];
    GoP g;
    g.id = i;
    g.bits = rng.uniform(c.arrivals.bits_lo, c.arrivals.bits_hi);
    g.num_frames = prof.num_frames;
    g.width = prof.width;
    g.height = prof.height;
    g.si = prof.si;
    g.ti = prof.ti;
    twe::TrainingRecord rec;
    rec.features = twe::make_features(g, q, c.env.params);
    rec.workload = twe::ground_truth_workload(rec.features, rng, c.env.plant.noise_sigma);
    records.push_back(rec);
  }
  return records;
}

RunReport run(const cfg::ExperimentConfig& config) {
  cfg::ExperimentConfig c = config;
  c.env.t_max = c.slots;
  fs::create_directories(c.out_dir);
  RunReport report;
  report.out_dir = c.out_dir;

  auto bundle = build_estimator(c, c.scheduler);
  auto inner = make_arrivals(c);
  auto recording = std::make_shared<RecordingSource>(inner);
  sim::Environment env(c.env, *bundle.estimator, recording, Rng(c.seed, kStreamEnv));

  auto scheduler = make_scheduler(c, c.scheduler);
  std::vector<TrainingRow> training;
  if (auto* agent = dynamic_cast<rl::DqnAgent*>(scheduler.get())) {
    if (c.checkpoint_path.empty()) training = train_agent(c, *agent, env);
    agent->set_training(false);
    report.checkpoint = join(c.out_dir, "agent.txt");
    agent->save(report.checkpoint);
  }

  const long metrics_episode = is_learning(c.scheduler) ? kEvalEpisodeBase : 0;
  const auto records = env.run_episode(*scheduler, metrics_episode);

  report.metrics_csv = join(c.out_dir, "metrics.csv");
  write_metrics_csv(report.metrics_csv, {records});
  report.trace_csv = join(c.out_dir, "trace.csv");
  plant::write_trace_csv(report.trace_csv, recording->slots());
  if (!training.empty()) {
    report.training_csv = join(c.out_dir, "training.csv");
    write_training_csv(report.training_csv, training);
  }
  if (bundle.fitted) bundle.model.save(join(c.out_dir, "model.txt"));
  if (!env.physical().records().empty())
    twe::write_records_csv(join(c.out_dir, "records.csv"), env.physical().records());

  report.summary = summarize_runs(c.scheduler, {records});
  report.summary_csv = join(c.out_dir, "summary.csv");
  write_summary_csv(report.summary_csv, {report.summary});
  return report;
}

CompareReport compare(const cfg::ExperimentConfig& config,
                      const std::vector<std::string>& schedulers) {
  if (schedulers.size() < 2)
    throw std::invalid_argument("compare needs at least two schedulers");
  cfg::ExperimentConfig c = config;
  c.env.t_max = c.slots;
  fs::create_directories(c.out_dir);
  CompareReport report;
  report.out_dir = c.out_dir;

  for (const auto& name : schedulers) {
    auto bundle = build_estimator(c, name);
    auto arrivals = make_arrivals(c);
    sim::Environment env(c.env, *bundle.estimator, arrivals, Rng(c.seed, kStreamEnv));
    auto scheduler = make_scheduler(c, name);
    if (auto* agent = dynamic_cast<rl::DqnAgent*>(scheduler.get())) {
      if (c.checkpoint_path.empty()) train_agent(c, *agent, env);
      agent->set_training(false);
    }
    std::vector<std::vector<sim::SlotRecord>> runs;
    for (long r = 0; r < c.eval_runs; ++r)
      runs.push_back(env.run_episode(*scheduler, kEvalEpisodeBase + r));
    report.summaries.push_back(summarize_runs(name, runs));
    report.records.push_back(std::move(runs));
  }

  // Shared-seed invariant: every scheduler saw identical arrivals.
  for (size_t s = 1; s < report.records.size(); ++s)
    for (size_t r = 0; r < report.records[s].size(); ++r)
      for (size_t t = 0; t < report.records[s][r].size(); ++t) {
        const auto& a = report.records[0][r][t];
        const auto& b = report.records[s][r][t];
        if (a.num_gops != b.num_gops || a.total_requests != b.total_requests)
          throw std::logic_error("compare: arrival traces diverged between schedulers");
      }

  report.compare_csv = join(c.out_dir, "compare.csv");
  {
    csv::Writer w(report.compare_csv);
    w.row({"# dtx-compare v1"});
    std::vector<std::string> cols = {"run", "t", "gops", "requests"};
    for (const auto& name : schedulers) {
      cols.push_back("W_" + name);
      cols.push_back("D_" + name);
    }
    w.header(cols);
    for (size_t r = 0; r < report.records[0].size(); ++r) {
      for (size_t t = 0; t < report.records[0][r].size(); ++t) {
        const auto& base = report.records[0][r][t];
        std::vector<std::string> cells = {csv::num(static_cast<long>(r)), csv::num(base.t),
                                          csv::num(base.num_gops),
                                          csv::num(base.total_requests)};
        for (size_t s = 0; s < schedulers.size(); ++s) {
          cells.push_back(csv::num(report.records[s][r][t].w));
          cells.push_back(csv::num(report.records[s][r][t].delay));
        }
        w.row(cells);
      }
    }
  }

  report.summary_csv = join(c.out_dir, "compare_summary.csv");
  write_summary_csv(report.summary_csv, report.summaries);
  return report;
}

TweReport train_twe(const cfg::ExperimentConfig& c, const std::string& records_csv) {
  fs::create_directories(c.out_dir);
  std::vector<twe::TrainingRecord> records =
      records_csv.empty() ? synth_records(c, c.twe_samples)
                          : twe::read_records_csv(records_csv);

  const long n_train = static_cast<long>(std::floor(c.twe_split * records.size()));
  std::vector<twe::TrainingRecord> train(records.begin(), records.begin() + n_train);
  std::vector<twe::TrainingRecord> test(records.begin() + n_train, records.end());

  const auto model = twe::fit(train, c.twe_train);

  TweReport rep;
  rep.n_train = n_train;
  rep.n_test = static_cast<long>(records.size()) - n_train;
  rep.train_mse = model.final_train_mse();
  rep.lambda = model.lambda();

  const auto err = twe::error_report(model, test);
  rep.test_mse = err.mse;
  if (records_csv.empty()) {
    // Synthetic data: also score against the noiseless generator.
    double acc = 0.0;
    for (const auto& r : test) {
      const double e = model.predict_normalised(r.features) -
                       model.normalise_target(twe::ground_truth_base(r.features));
      acc += e * e;
    }
    rep.test_mse_vs_truth = acc / static_cast<double>(test.size());
  }

  rep.model_path = join(c.out_dir, "model.txt");
  model.save(rep.model_path);

  rep.histogram_csv = join(c.out_dir, "error_histogram.csv");
  {
    csv::Writer w(rep.histogram_csv);
    w.row({"# dtx-histogram v1"});
    w.header({"bin_lo", "bin_hi", "count"});
    for (const auto& b : err.histogram)
      w.row({csv::num(b.lo), csv::num(b.hi), csv::num(b.count)});
  }

  rep.curve_csv = join(c.out_dir, "mse_curve.csv");
  {
    csv::Writer w(rep.curve_csv);
    w.row({"# dtx-msecurve v1"});
    w.header({"epoch", "train_mse"});
    const auto& hist = model.mse_history();
    for (size_t e = 0; e < hist.size(); ++e)
      w.row({csv::num(static_cast<long>(e)), csv::num(hist[e])});
  }
  return rep;
}

std::string gen_trace(const cfg::ExperimentConfig& c, const std::string& frames_file) {
  fs::create_directories(c.out_dir);
  cfg::ExperimentConfig local = c;
  std::shared_ptr<plant::ArrivalSource> source;
  if (!frames_file.empty()) {
    // Real frame ingestion: the whole pool takes this file's SI/TI.
    const auto seq = features::read_raw_frames(frames_file);
    const double si = features::spatial_information(seq);
    const double ti = features::temporal_information(seq);
    local.arrivals.pool_size = 1;
    local.arrivals.texture_lo = local.arrivals.texture_hi = 0.0;
    local.arrivals.motion_lo = local.arrivals.motion_hi = 0.0;
    auto process = std::make_shared<plant::ArrivalProcess>(local.arrivals,
                                                           Rng(local.seed, kStreamTrace));
    struct Override : plant::ArrivalSource {
      std::shared_ptr<plant::ArrivalProcess> inner;
      double si, ti;
      int frames, width, height;
      void reset(long e) override { inner->reset(e); }
      std::vector<GoP> arrivals(long t) override {
        auto gops = inner->arrivals(t);
        for (auto& g : gops) {
          g.si = si;
          g.ti = ti;
          g.num_frames = frames;
          g.width = width;
          g.height = height;
        }
        return gops;
      }
    };
    auto ov = std::make_shared<Override>();
    ov->inner = process;
    ov->si = si;
    ov->ti = ti;
    ov->frames = static_cast<int>(seq.size());
    ov->width = seq[0].width;
    ov->height = seq[0].height;
    source = ov;
  } else {
    source = make_arrivals(local);
  }

  source->reset(0);
  std::vector<std::vector<GoP>> slots;
  slots.reserve(static_cast<size_t>(local.slots));
  for (long t = 0; t < local.slots; ++t) slots.push_back(source->arrivals(t));
  const std::string path = join(local.out_dir, "trace.csv");
  plant::write_trace_csv(path, slots);
  return path;
}

}  // namespace dtx::runner
