#include <doctest.h>

#include <cmath>

#include "dtx/errors.hpp"
#include "dtx/twin.hpp"

using namespace dtx;
using namespace dtx::twin;

namespace {

// Fixed-value estimator for arithmetic cases.
class ConstEstimator : public twe::WorkloadEstimator {
 public:
  explicit ConstEstimator(double v) : v_(v) {}
  double estimate(const twe::FeatureVector&) const override { return v_; }

 private:
  double v_;
};

GoP simple_gop(long id, double bits) {
  GoP g;
  g.id = id;
  g.bits = bits;
  g.num_frames = 8;
  g.width = 160;
  g.height = 90;
  g.si = 10.0;
  g.ti = 5.0;
  return g;
}

QueueParams unit_params(double rate_flops) {
  QueueParams p;
  for (int i = 0; i < kNumQueues; ++i) {
    p.f_ghz[i] = rate_flops / 1e9;  // service_rate = f * 1e9 * kappa
    p.kappa[i] = 1.0;
  }
  return p;
}

// Straight-line restatement of the queue update formulas, kept independent
// of the implementation. States and decisions are generated randomly.
struct NaiveState {
  double l[5];
  double a1, a2, a3;            // share ratios
  double w1, w2, w14, w15, w25;  // averages
  double b1, b2, b14, b15, b25;  // bit accumulators
};

NaiveState to_naive(const TwinQueueState& s) {
  NaiveState n;
  for (int i = 0; i < 5; ++i) n.l[i] = s.length[i];
  n.a1 = s.share_q1_q4;
  n.a2 = s.share_q1_q5;
  n.a3 = s.share_q2_q5;
  n.w1 = s.avg_w_q1;
  n.w2 = s.avg_w_q2;
  n.w14 = s.avg_w_q1_q4;
  n.w15 = s.avg_w_q1_q5;
  n.w25 = s.avg_w_q2_q5;
  n.b1 = s.bits_q1;
  n.b2 = s.bits_q2;
  n.b14 = s.bits_q1_q4;
  n.b15 = s.bits_q1_q5;
  n.b25 = s.bits_q2_q5;
  return n;
}

NaiveState naive_edge(const NaiveState& s, const QueueParams& p, double d, double t_cap) {
  NaiveState out = s;
  const double r1 = p.f_ghz[0] * 1e9 * p.kappa[0];
  const double r2 = p.f_ghz[1] * 1e9 * p.kappa[1];
  const double r4 = p.f_ghz[3] * 1e9 * p.kappa[3];
  const double r5 = p.f_ghz[4] * 1e9 * p.kappa[4];
  const double u1 = std::min(s.l[0], t_cap);
  const double u2 = std::min(s.l[1], t_cap);
  double in4 = 0, in5 = 0;
  if (s.w1 > 0) {
    in4 = s.a1 * u1 * s.w14 * r1 / (s.w1 * r4);
    in5 += s.a2 * u1 * s.w15 * r1 / (s.w1 * r5);
  }
  if (s.w2 > 0) in5 += s.a3 * u2 * s.w25 * r2 / (s.w2 * r5);
  out.l[3] = std::max(0.0, s.l[3] + in4 - d);
  out.l[4] = std::max(0.0, s.l[4] + in5 - d);
  const double keep1 = s.l[0] > 0 ? 1.0 - u1 / s.l[0] : 1.0;
  const double keep2 = s.l[1] > 0 ? 1.0 - u2 / s.l[1] : 1.0;
  out.b1 = s.b1 * keep1;
  out.b14 = s.b14 * keep1;
  out.b15 = s.b15 * keep1;
  out.b2 = s.b2 * keep2;
  out.b25 = s.b25 * keep2;
  return out;
}

NaiveState naive_cloud(const NaiveState& s, const std::vector<GoP>& gops,
                       const std::vector<TranscodeDecision>& xs,
                       const WorkloadTable& om, const QueueParams& p, double d) {
  NaiveState out = s;
  double add[5] = {0, 0, 0, 0, 0};
  double bits_in[2] = {0, 0};
  double t14s = 0, t15s = 0, t25s = 0;
  double t14b = 0, t15b = 0, t25b = 0;
  double t14m = 0, t15m = 0, t25m = 0;
  double m1 = 0, m2 = 0;
  for (size_t k = 0; k < gops.size(); ++k) {
    const double b = gops[k].bits;
    const int x1 = xs[k].bit(Queue::CloudSlow), x2 = xs[k].bit(Queue::CloudMedium),
              x3 = xs[k].bit(Queue::CloudFast), x4 = xs[k].bit(Queue::EdgeMedium),
              x5 = xs[k].bit(Queue::EdgeFast);
    const double r[5] = {p.f_ghz[0] * 1e9 * p.kappa[0], p.f_ghz[1] * 1e9 * p.kappa[1],
                         p.f_ghz[2] * 1e9 * p.kappa[2], p.f_ghz[3] * 1e9 * p.kappa[3],
                         p.f_ghz[4] * 1e9 * p.kappa[4]};
    if (x1) {
      add[0] += om[k][0] * b / r[0];
      bits_in[0] += b;
      m1 += om[k][0] * b;
    }
    if (x2) {
      add[1] += om[k][1] * b / r[1];
      bits_in[1] += b;
      m2 += om[k][1] * b;
    }
    if (x3) add[2] += om[k][2] * b / r[2];
    if (x4) t14s += om[k][0] * b / r[0];
    if (x1 && x5) t15s += om[k][0] * b / r[0];
    if (x2 && x5) t25s += om[k][1] * b / r[1];
    if (x1 && x4) {
      t14b += b;
      t14m += om[k][3] * b;
    }
    if (x1 && x5) {
      t15b += b;
      t15m += om[k][4] * b;
    }
    if (x2 && x5) {
      t25b += b;
      t25m += om[k][4] * b;
    }
  }
  if (s.l[0] + add[0] > 0) {
    out.a1 = (s.a1 * s.l[0] + t14s) / (s.l[0] + add[0]);
    out.a2 = (s.a2 * s.l[0] + t15s) / (s.l[0] + add[0]);
  }
  if (s.l[1] + add[1] > 0) out.a3 = (s.a3 * s.l[1] + t25s) / (s.l[1] + add[1]);
  if (bits_in[0] + s.b1 > 0) out.w1 = (m1 + s.w1 * s.b1) / (bits_in[0] + s.b1);
  if (bits_in[1] + s.b2 > 0) out.w2 = (m2 + s.w2 * s.b2) / (bits_in[1] + s.b2);
  if (t14b + s.b14 > 0) out.w14 = (t14m + s.w14 * s.b14) / (t14b + s.b14);
  if (t15b + s.b15 > 0) out.w15 = (t15m + s.w15 * s.b15) / (t15b + s.b15);
  if (t25b + s.b25 > 0) out.w25 = (t25m + s.w25 * s.b25) / (t25b + s.b25);
  out.b1 = s.b1 + bits_in[0];
  out.b2 = s.b2 + bits_in[1];
  out.b14 = s.b14 + t14b;
  out.b15 = s.b15 + t15b;
  out.b25 = s.b25 + t25b;
  for (int i = 0; i < 3; ++i) out.l[i] = std::max(0.0, s.l[i] + add[i] - d);
  return out;
}

TwinQueueState random_state(Rng& rng) {
  TwinQueueState s;
  for (auto& l : s.length) l = rng.uniform(0.0, 2.0);
  s.share_q1_q4 = rng.uniform01();
  s.share_q1_q5 = rng.uniform01() * (1.0 - s.share_q1_q4);
  s.share_q2_q5 = rng.uniform01();
  s.avg_w_q1 = rng.uniform(500.0, 4000.0);
  s.avg_w_q2 = rng.uniform(500.0, 4000.0);
  s.avg_w_q1_q4 = rng.uniform(500.0, 4000.0);
  s.avg_w_q1_q5 = rng.uniform(500.0, 4000.0);
  s.avg_w_q2_q5 = rng.uniform(500.0, 4000.0);
  s.bits_q1 = rng.uniform(0.0, 5e7);
  s.bits_q2 = rng.uniform(0.0, 5e7);
  s.bits_q1_q4 = rng.uniform(0.0, s.bits_q1);
  s.bits_q1_q5 = rng.uniform(0.0, s.bits_q1);
  s.bits_q2_q5 = rng.uniform(0.0, s.bits_q2);
  return s;
}

void check_close(const TwinQueueState& got, const NaiveState& want, double tol) {
  for (int i = 0; i < 5; ++i) CHECK(got.length[i] == doctest::Approx(want.l[i]).epsilon(tol));
  CHECK(got.share_q1_q4 == doctest::Approx(want.a1).epsilon(tol));
  CHECK(got.share_q1_q5 == doctest::Approx(want.a2).epsilon(tol));
  CHECK(got.share_q2_q5 == doctest::Approx(want.a3).epsilon(tol));
  CHECK(got.avg_w_q1 == doctest::Approx(want.w1).epsilon(tol));
  CHECK(got.avg_w_q2 == doctest::Approx(want.w2).epsilon(tol));
  CHECK(got.avg_w_q1_q4 == doctest::Approx(want.w14).epsilon(tol));
  CHECK(got.avg_w_q1_q5 == doctest::Approx(want.w15).epsilon(tol));
  CHECK(got.avg_w_q2_q5 == doctest::Approx(want.w25).epsilon(tol));
}

}  // namespace

TEST_SUITE("twin") {
  TEST_CASE("enqueue time follows the workload formula") {
    // 2 flops/bit, 1e6 bits, 4e6 flops/s -> 0.5 s.
    const QueueParams p = unit_params(4e6);
    const ConstEstimator est(2.0);
    const GoP g = simple_gop(1, 1e6);
    CHECK(enqueue_time(g, Queue::CloudSlow, est, p) == doctest::Approx(0.5).epsilon(1e-12));

    // Doubling the service rate halves the time.
    const QueueParams p2 = unit_params(8e6);
    CHECK(enqueue_time(g, Queue::CloudSlow, est, p2) == doctest::Approx(0.25).epsilon(1e-12));

    GoP bad = g;
    bad.bits = 0.0;
    CHECK_THROWS_AS(enqueue_time(bad, Queue::CloudSlow, est, p), std::invalid_argument);
  }

  TEST_CASE("cloud step arithmetic") {
    const QueueParams p = unit_params(1e7);

    SUBCASE("empty queues and no arrivals stay at zero") {
      TwinQueueState s;
      const auto out = step_cloud(s, {}, {}, {}, p, 0.5);
      for (double l : out.length) CHECK(l == 0.0);
    }

    SUBCASE("enqueue then service") {
      TwinQueueState s;
      s.length[0] = 1.0;
      // 0.3 s of work: omega * bits / rate = 3 * 1e6 / 1e7.
      const GoP g = simple_gop(1, 1e6);
      const auto x = TranscodeDecision::from_bits(true, false, false, false, false);
      WorkloadTable om(1);
      om[0] = {3.0, 3.0, 3.0, 3.0, 3.0};
      const auto out = step_cloud(s, std::span(&g, 1), std::span(&x, 1), om, p, 0.5);
      CHECK(out.length[0] == doctest::Approx(0.8).epsilon(1e-12));
    }

    SUBCASE("path share jumps to one on an empty queue") {
      TwinQueueState s;  // l1 = 0
      const GoP g = simple_gop(1, 1e6);
      const auto x = TranscodeDecision::from_bits(true, false, false, true, false);
      WorkloadTable om(1);
      om[0] = {3.0, 3.0, 3.0, 3.0, 3.0};
      const auto out = step_cloud(s, std::span(&g, 1), std::span(&x, 1), om, p, 0.5);
      CHECK(out.share_q1_q4 == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("edge step arithmetic") {
    QueueParams p = unit_params(1e7);

    SUBCASE("no cloud backlog means pure decay") {
      TwinQueueState s;
      s.length[3] = 0.7;
      s.length[4] = 0.05;
      const auto out = step_edge(s, p, 0.5, 0.5);
      CHECK(out.length[3] == doctest::Approx(0.2).epsilon(1e-12));
      CHECK(out.length[4] == 0.0);
    }

    SUBCASE("unit conversion ratios transfer backlog") {
      // share 1, l1 = 0.4, cap 1, matched averages and rates, d = 0.1.
      TwinQueueState s;
      s.length[0] = 0.4;
      s.share_q1_q4 = 1.0;
      s.avg_w_q1 = 2000.0;
      s.avg_w_q1_q4 = 2000.0;
      const auto out = step_edge(s, p, 0.1, 1.0);
      CHECK(out.length[3] == doctest::Approx(0.3).epsilon(1e-12));
    }

    SUBCASE("zero share means zero inflow") {
      TwinQueueState s;
      s.length[0] = 1.5;
      s.avg_w_q1 = 2000.0;
      s.avg_w_q1_q4 = 2500.0;
      s.share_q1_q4 = 0.0;
      const auto out = step_edge(s, p, 0.5, 0.5);
      CHECK(out.length[3] == 0.0);
    }
  }

  TEST_CASE("sync overwrites only out-of-threshold queues") {
    TwinQueueState s;
    s.length = {1.0, 0.5, 0.2, 0.0, 0.3};

    SUBCASE("zero bias never syncs") {
      const auto res = sync(s, s.length, 0.1);
      CHECK(res.synced.empty());
    }

    SUBCASE("threshold contract") {
      std::array<double, kNumQueues> phys = s.length;
      phys[0] = 1.2;
      const auto res = sync(s, phys, 0.1);
      REQUIRE(res.synced.size() == 1);
      CHECK(res.synced[0] == Queue::CloudSlow);
      CHECK(res.state.length[0] == 1.2);
      CHECK(res.state.length[1] == 0.5);
    }

    SUBCASE("infinite threshold never syncs") {
      std::array<double, kNumQueues> phys{9, 9, 9, 9, 9};
      const auto res = sync(s, phys, std::numeric_limits<double>::infinity());
      CHECK(res.synced.empty());
    }
  }

  TEST_CASE("random slot updates match the naive evaluator") {
    Rng rng(71, 0);
    QueueParams p;
    const auto& feasible = feasible_decisions();
    for (int rep = 0; rep < 500; ++rep) {
      TwinQueueState s = random_state(rng);
      const long n = rng.uniform_int(0, 5);
      std::vector<GoP> gops;
      std::vector<TranscodeDecision> xs;
      WorkloadTable om;
      for (long k = 0; k < n; ++k) {
        gops.push_back(simple_gop(k, rng.uniform(1e6, 1e7)));
        xs.push_back(feasible[static_cast<size_t>(rng.uniform_int(0, 13))]);
        om.push_back({rng.uniform(500.0, 4000.0), rng.uniform(500.0, 4000.0),
                      rng.uniform(500.0, 4000.0), rng.uniform(500.0, 4000.0),
                      rng.uniform(500.0, 4000.0)});
      }
      const double d = rng.uniform(0.1, 0.8);
      const double cap = rng.uniform(0.1, 0.8);

      const auto edge_got = step_edge(s, p, d, cap);
      const auto edge_want = naive_edge(to_naive(s), p, d, cap);
      check_close(edge_got, edge_want, 1e-9);

      const auto cloud_got = step_cloud(edge_got, gops, xs, om, p, d);
      const auto cloud_want = naive_cloud(to_naive(edge_got), gops, xs, om, p, d);
      check_close(cloud_got, cloud_want, 1e-9);
    }
  }

  TEST_CASE("lengths never go negative and shares stay in the unit interval") {
    Rng rng(73, 0);
    QueueParams p;
    const ConstEstimator est(2000.0);
    const auto& feasible = feasible_decisions();
    TwinQueueState s;
    for (int t = 0; t < 2000; ++t) {
      const long n = rng.uniform_int(0, 4);
      std::vector<GoP> gops;
      std::vector<TranscodeDecision> xs;
      for (long k = 0; k < n; ++k) {
        gops.push_back(simple_gop(t * 10 + k, rng.uniform(1e6, 1.5e7)));
        xs.push_back(feasible[static_cast<size_t>(rng.uniform_int(0, 13))]);
      }
      const auto om = build_workload_table(gops, est, p);
      s = step_slot(s, gops, xs, om, p, 0.5, 0.5);
      for (double l : s.length) CHECK(l >= 0.0);
      CHECK(s.share_q1_q4 >= 0.0);
      CHECK(s.share_q1_q4 <= 1.0 + 1e-12);
      CHECK(s.share_q1_q5 >= 0.0);
      CHECK(s.share_q1_q5 <= 1.0 + 1e-12);
      CHECK(s.share_q2_q5 >= 0.0);
      CHECK(s.share_q2_q5 <= 1.0 + 1e-12);
    }
  }

  TEST_CASE("with no service the cloud backlog conserves enqueued work") {
    Rng rng(79, 0);
    QueueParams p;
    const ConstEstimator est(1500.0);
    const auto& feasible = feasible_decisions();
    TwinQueueState s;
    double expected = 0.0;
    for (int t = 0; t < 50; ++t) {
      const long n = rng.uniform_int(0, 4);
      std::vector<GoP> gops;
      std::vector<TranscodeDecision> xs;
      for (long k = 0; k < n; ++k) {
        gops.push_back(simple_gop(t * 10 + k, rng.uniform(1e6, 1e7)));
        xs.push_back(feasible[static_cast<size_t>(rng.uniform_int(0, 13))]);
      }
      const auto om = build_workload_table(gops, est, p);
      for (long k = 0; k < n; ++k)
        for (auto q : cloud_queues())
          if (xs[static_cast<size_t>(k)].bit(q))
            expected += om[static_cast<size_t>(k)][queue_index(q)] * gops[static_cast<size_t>(k)].bits /
                        p.service_rate(q);
      s = step_cloud(s, gops, xs, om, p, 0.0);  // no service, no edge transfer
      double total = 0.0;
      for (auto q : cloud_queues()) total += s.length[queue_index(q)];
      CHECK(total == doctest::Approx(expected).epsilon(1e-9));
    }
  }
}
