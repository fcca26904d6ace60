#pragma once

#include <array>
#include <string>
#include <vector>

#include "dtx/nn.hpp"
#include "dtx/params.hpp"
#include "dtx/rng.hpp"
#include "dtx/types.hpp"

namespace dtx::twe {

inline constexpr int kNumFeatures = 8;

/// Model input: GoP content descriptors plus the target queue's transcoding
/// configuration. Order is fixed and mirrored in the records CSV schema.
struct FeatureVector {
  double preset = 0;        // 0 slow, 1 medium, 2 fast
  double num_frames = 0;
  double resolution = 0;    // total pixels
  double si = 0;
  double processor = 0;     // 0 cloud, 1 edge
  double density = 0;       // kappa
  double capability = 0;    // f, GHz
  double ti = 0;

  std::array<double, kNumFeatures> as_array() const {
    return {preset, num_frames, resolution, si, processor, density, capability, ti};
  }
  static FeatureVector from_array(const std::array<double, kNumFeatures>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7]};
  }
  static const std::array<const char*, kNumFeatures>& names();
};

FeatureVector make_features(const GoP& gop, Queue q, const QueueParams& params);

struct TrainingRecord {
  FeatureVector features;
  double workload = 0.0;  // flops per bit, > 0
};

/// Noise-free synthetic per-bit transcoding cost. Monotone increasing in si,
/// ti, resolution and frame count; slow presets cost the most; the edge
/// processor class carries a mild surcharge. See README for the closed form.
double ground_truth_base(const FeatureVector& v);

/// ground_truth_base times exp(noise_sigma * N(0,1)) drawn from rng.
double ground_truth_workload(const FeatureVector& v, Rng& rng, double noise_sigma);

/// Anything that can price a GoP for a queue, in flops per bit.
class WorkloadEstimator {
 public:
  virtual ~WorkloadEstimator() = default;
  virtual double estimate(const FeatureVector& v) const = 0;
};

/// The "universal" estimator: one constant for every GoP and queue.
class MeanEstimator : public WorkloadEstimator {
 public:
  explicit MeanEstimator(double value) : value_(value) {}
  double estimate(const FeatureVector&) const override { return value_; }

 private:
  double value_;
};

/// Oracle estimator used by exactness tests: the noiseless generator itself.
class GroundTruthEstimator : public WorkloadEstimator {
 public:
  double estimate(const FeatureVector& v) const override { return ground_truth_base(v); }
};

struct TrainCfg {
  int epochs = 1000;
  double lr = 0.2;
  double momentum = 0.9;
  int hidden = 16;
  double lambda0 = 1e-3;
  bool fixed_lambda = false;
  int lambda_every = 25;  // epochs between evidence-style re-estimations
  std::uint64_t seed = 1;
};

/// Regularised MLP regressor with frozen z-score normalisation of inputs and
/// target. estimate() clamps to (0, 10x the largest training target].
class WorkloadModel : public WorkloadEstimator {
 public:
  WorkloadModel() = default;

  double estimate(const FeatureVector& v) const override;  // throws ModelNotFitted
  bool fitted() const { return fitted_; }

  double final_train_mse() const { return final_mse_; }  // normalised scale
  const std::vector<double>& mse_history() const { return mse_history_; }
  double lambda() const { return lambda_; }
  double clamp_max() const { return clamp_max_; }

  /// Normalised-scale prediction/target pair for a record (used by reports).
  double predict_normalised(const FeatureVector& v) const;
  double normalise_target(double workload) const;

  void save(const std::string& path) const;
  static WorkloadModel load(const std::string& path);

  friend WorkloadModel fit(const std::vector<TrainingRecord>&, const TrainCfg&);

 private:
  nn::Mlp net_;
  std::array<double, kNumFeatures> feat_mean_{};
  std::array<double, kNumFeatures> feat_std_{};
  double target_mean_ = 0.0;
  double target_std_ = 1.0;
  double lambda_ = 0.0;
  double final_mse_ = 0.0;
  double clamp_max_ = 0.0;
  bool fitted_ = false;
  std::vector<double> mse_history_;

  Eigen::VectorXd normalise(const FeatureVector& v) const;
};

/// Full-batch gradient descent on MSE + lambda * ||w||^2 with an
/// evidence-style lambda re-estimation every cfg.lambda_every epochs
/// (Gauss-Newton effective-parameter count; held fixed when cfg.fixed_lambda).
/// Requires at least 50 records; throws InsufficientData / NonfiniteLoss.
WorkloadModel fit(const std::vector<TrainingRecord>& records, const TrainCfg& cfg);

struct ErrorReport {
  struct Bin {
    double lo = 0.0, hi = 0.0;
    long count = 0;
  };
  std::vector<Bin> histogram;  // 20 bins over the observed signed-error range
  double mse = 0.0;            // normalised scale
};

/// Signed errors (prediction - target) on the model's normalised scale.
ErrorReport error_report(const WorkloadModel& model,
                         const std::vector<TrainingRecord>& records);

void write_records_csv(const std::string& path, const std::vector<TrainingRecord>& records);
std::vector<TrainingRecord> read_records_csv(const std::string& path);

}  // namespace dtx::twe
