#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "dtx/errors.hpp"
#include "dtx/twe.hpp"

using namespace dtx;
using namespace dtx::twe;

namespace {

FeatureVector sample_features(Rng& rng) {
  FeatureVector v;
  v.preset = static_cast<double>(rng.uniform_int(0, 2));
  v.num_frames = static_cast<double>(rng.uniform_int(4, 32));
  v.resolution = rng.uniform(1e4, 2e6);
  v.si = rng.uniform(0.0, 40.0);
  v.processor = static_cast<double>(rng.uniform_int(0, 1));
  v.density = rng.uniform(1.0, 10.0);
  v.capability = rng.uniform(5.0, 20.0);
  v.ti = rng.uniform(0.0, 20.0);
  return v;
}

// Linear synthetic target used by the convergence oracle.
double linear_target(const FeatureVector& v) {
  const auto a = v.as_array();
  return 500.0 + 90.0 * a[0] + 3.0 * a[1] + 1e-4 * a[2] + 12.0 * a[3] + 40.0 * a[4] +
         6.0 * a[5] + 4.0 * a[6] + 9.0 * a[7];
}

std::vector<TrainingRecord> linear_records(long n, std::uint64_t seed) {
  Rng rng(seed, 0);
  std::vector<TrainingRecord> out;
  for (long i = 0; i < n; ++i) {
    TrainingRecord r;
    r.features = sample_features(rng);
    r.workload = linear_target(r.features);
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_SUITE("twe") {
  TEST_CASE("ground truth determinism and monotonicity") {
    FeatureVector v;
    v.preset = 0;
    v.num_frames = 30;
    v.resolution = 1280.0 * 720.0;
    v.si = 20;
    v.processor = 0;
    v.density = 5;
    v.capability = 10;
    v.ti = 10;

    Rng r1(1, 1), r2(1, 1);
    CHECK(ground_truth_workload(v, r1, 0.0) == ground_truth_workload(v, r2, 0.0));

    FeatureVector more_si = v;
    more_si.si = 25;
    CHECK(ground_truth_base(more_si) > ground_truth_base(v));
    FeatureVector more_ti = v;
    more_ti.ti = 15;
    CHECK(ground_truth_base(more_ti) > ground_truth_base(v));
    FeatureVector more_res = v;
    more_res.resolution *= 2.0;
    CHECK(ground_truth_base(more_res) > ground_truth_base(v));
    FeatureVector more_frames = v;
    more_frames.num_frames += 10;
    CHECK(ground_truth_base(more_frames) > ground_truth_base(v));

    FeatureVector fast = v;
    fast.preset = 2;  // fast preset costs least, slow costs most
    CHECK(ground_truth_base(v) > ground_truth_base(fast));

    Rng r3(9, 9);
    for (int i = 0; i < 50; ++i) {
      Rng noise_rng(100 + i, 0);
      CHECK(ground_truth_workload(sample_features(r3), noise_rng, 0.1) > 0.0);
    }
  }

  TEST_CASE("per-queue features follow the queue configuration") {
    GoP g;
    g.bits = 5e6;
    g.num_frames = 8;
    g.width = 160;
    g.height = 90;
    g.si = 12.5;
    g.ti = 3.5;
    QueueParams params;
    const auto f1 = make_features(g, Queue::CloudSlow, params);
    CHECK(f1.preset == 0);
    CHECK(f1.processor == 0);
    CHECK(f1.capability == params.f(Queue::CloudSlow));
    CHECK(f1.density == params.k(Queue::CloudSlow));
    CHECK(f1.resolution == 160.0 * 90.0);
    CHECK(f1.si == 12.5);
    CHECK(f1.ti == 3.5);
    const auto f5 = make_features(g, Queue::EdgeFast, params);
    CHECK(f5.preset == 2);
    CHECK(f5.processor == 1);
    CHECK(f5.capability == params.f(Queue::EdgeFast));
  }

  TEST_CASE("fit rejects tiny datasets") {
    CHECK_THROWS_AS(fit(linear_records(10, 3), TrainCfg{}), InsufficientData);
  }

  TEST_CASE("fit reaches small held-out error on noiseless linear data") {
    auto records = linear_records(500, 5);
    std::vector<TrainingRecord> train(records.begin(), records.begin() + 400);
    std::vector<TrainingRecord> test(records.begin() + 400, records.end());
    TrainCfg cfg;
    cfg.epochs = 1500;
    cfg.lr = 0.2;
    cfg.momentum = 0.9;
    cfg.fixed_lambda = true;
    cfg.lambda0 = 0.0;
    cfg.seed = 7;
    const auto model = fit(train, cfg);
    const auto rep = error_report(model, test);
    CHECK(rep.mse < 1e-4);
    CHECK(model.final_train_mse() < 1e-4);
  }

  TEST_CASE("training loss is non-increasing at a stable learning rate") {
    auto records = linear_records(200, 11);
    TrainCfg cfg;
    cfg.epochs = 400;
    cfg.lr = 0.01;
    cfg.momentum = 0.0;
    cfg.fixed_lambda = true;
    cfg.lambda0 = 0.0;
    const auto model = fit(records, cfg);
    const auto& hist = model.mse_history();
    for (size_t i = 1; i < hist.size(); ++i) CHECK(hist[i] <= hist[i - 1] + 1e-12);
  }

  TEST_CASE("duplicated records leave the full-batch fit unchanged") {
    auto records = linear_records(120, 13);
    auto doubled = records;
    doubled.insert(doubled.end(), records.begin(), records.end());
    TrainCfg cfg;
    cfg.epochs = 200;
    cfg.fixed_lambda = true;
    cfg.lambda0 = 1e-4;
    const auto m1 = fit(records, cfg);
    const auto m2 = fit(doubled, cfg);
    Rng rng(17, 0);
    for (int i = 0; i < 20; ++i) {
      const auto v = sample_features(rng);
      CHECK(m1.estimate(v) == doctest::Approx(m2.estimate(v)).epsilon(1e-9));
    }
  }

  TEST_CASE("estimate contract") {
    WorkloadModel unfitted;
    FeatureVector v = linear_records(1, 19)[0].features;
    CHECK_THROWS_AS(unfitted.estimate(v), ModelNotFitted);

    auto records = linear_records(300, 23);
    TrainCfg cfg;
    cfg.epochs = 1200;
    cfg.lr = 0.2;
    cfg.momentum = 0.9;
    cfg.fixed_lambda = true;
    cfg.lambda0 = 0.0;
    const auto model = fit(records, cfg);

    // Training points recovered within 1% on noiseless realisable data.
    for (int i = 0; i < 10; ++i) {
      const auto& r = records[static_cast<size_t>(i * 7)];
      CHECK(std::abs(model.estimate(r.features) - r.workload) / r.workload < 0.01);
    }
    // Determinism and the positive clamp.
    CHECK(model.estimate(v) == model.estimate(v));
    CHECK(model.estimate(v) > 0.0);
    CHECK(model.estimate(v) <= model.clamp_max());
  }

  TEST_CASE("evidence-style lambda stays in bounds and regularises noise") {
    Rng rng(29, 0);
    auto records = linear_records(300, 31);
    for (auto& r : records) r.workload *= std::exp(0.05 * rng.normal());
    TrainCfg cfg;
    cfg.epochs = 300;
    cfg.lambda_every = 25;
    const auto model = fit(records, cfg);
    CHECK(model.lambda() >= 1e-8);
    CHECK(model.lambda() <= 1.0);
    CHECK(std::isfinite(model.final_train_mse()));
  }

  TEST_CASE("error report histogram") {
    auto records = linear_records(200, 37);
    TrainCfg cfg;
    cfg.epochs = 1500;
    cfg.lr = 0.2;
    cfg.momentum = 0.9;
    cfg.fixed_lambda = true;
    cfg.lambda0 = 0.0;
    const auto model = fit(records, cfg);
    const auto rep = error_report(model, records);
    REQUIRE(rep.histogram.size() == 20);
    long total = 0;
    bool zero_covered = false;
    for (const auto& b : rep.histogram) {
      total += b.count;
      if (b.lo <= 0.0 && 0.0 <= b.hi && b.count > 0) zero_covered = true;
    }
    CHECK(total == 200);
    CHECK(zero_covered);
    CHECK(rep.mse < 1e-4);
  }

  TEST_CASE("mean-predictor error equals the target variance") {
    // All records share one feature vector, so the best fit is the mean and
    // the normalised test error approaches the unit target variance.
    Rng rng(41, 0);
    const auto v = sample_features(rng);
    std::vector<TrainingRecord> records;
    for (int i = 0; i < 200; ++i)
      records.push_back({v, 1000.0 + 200.0 * rng.normal()});
    TrainCfg cfg;
    cfg.epochs = 600;
    cfg.lr = 0.02;
    cfg.fixed_lambda = true;
    cfg.lambda0 = 1e-6;
    const auto model = fit(records, cfg);
    const auto rep = error_report(model, records);
    CHECK(rep.mse == doctest::Approx(1.0).epsilon(0.05));
  }

  TEST_CASE("model checkpoint round trip") {
    auto records = linear_records(150, 43);
    TrainCfg cfg;
    cfg.epochs = 300;
    const auto model = fit(records, cfg);
    const auto path = std::filesystem::temp_directory_path() / "dtx_model_test.txt";
    model.save(path.string());
    const auto loaded = WorkloadModel::load(path.string());
    Rng rng(47, 0);
    for (int i = 0; i < 25; ++i) {
      const auto v = sample_features(rng);
      CHECK(loaded.estimate(v) == model.estimate(v));
    }
    CHECK(loaded.clamp_max() == model.clamp_max());
    std::filesystem::remove(path);
  }

  TEST_CASE("records csv round trip") {
    const auto records = linear_records(30, 53);
    const auto path = std::filesystem::temp_directory_path() / "dtx_records_test.csv";
    write_records_csv(path.string(), records);
    const auto back = read_records_csv(path.string());
    REQUIRE(back.size() == records.size());
    for (size_t i = 0; i < back.size(); ++i) {
      CHECK(back[i].workload == records[i].workload);
      CHECK(back[i].features.as_array() == records[i].features.as_array());
    }
    std::filesystem::remove(path);
  }

  TEST_CASE("regularised loss gradient matches finite differences") {
    // MSE + lambda*||w||^2 on a small 8-4-1 net, central differences.
    Rng rng(59, 0);
    auto net = nn::Mlp::make({8, 4, 1}, nn::Activation::Tanh, rng);
    const double lambda = 1e-3;
    const int n = 10;
    Eigen::MatrixXd x(8, n);
    Eigen::RowVectorXd y(n);
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < 8; ++i) x(i, k) = rng.uniform(-1.0, 1.0);
      y[k] = rng.uniform(-1.0, 1.0);
    }
    auto loss_of = [&](nn::Mlp& m) {
      double acc = (m.forward_batch(x).row(0) - y).squaredNorm() / n;
      for (const auto& layer : m.layers())
        acc += lambda * (layer.w.squaredNorm() + layer.b.squaredNorm());
      return acc;
    };

    nn::Mlp::Tape tape;
    const Eigen::MatrixXd pred = net.forward_batch(x, &tape);
    auto grad = net.zero_grad();
    const Eigen::MatrixXd dy = (2.0 / n) * (pred.row(0) - y);
    net.backward(tape, dy, grad);
    for (size_t li = 0; li < grad.w.size(); ++li) {
      grad.w[li] += 2.0 * lambda * net.layers()[li].w;
      grad.b[li] += 2.0 * lambda * net.layers()[li].b;
    }
    std::vector<double> analytic;
    for (size_t li = 0; li < grad.w.size(); ++li) {
      analytic.insert(analytic.end(), grad.w[li].data(), grad.w[li].data() + grad.w[li].size());
      analytic.insert(analytic.end(), grad.b[li].data(), grad.b[li].data() + grad.b[li].size());
    }

    std::vector<double> flat;
    net.get_params(flat);
    nn::Mlp probe = net;
    const double eps = 1e-6;
    for (size_t p = 0; p < flat.size(); ++p) {
      auto plus = flat, minus = flat;
      plus[p] += eps;
      minus[p] -= eps;
      probe.set_params(plus);
      const double lp = loss_of(probe);
      probe.set_params(minus);
      const double lm = loss_of(probe);
      const double fd = (lp - lm) / (2 * eps);
      const double scale = std::max({1.0, std::abs(fd), std::abs(analytic[p])});
      CHECK(std::abs(analytic[p] - fd) / scale < 1e-4);
    }
  }
}
