#include "dtx/twe.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dtx/csv.hpp"
#include "dtx/errors.hpp"

namespace dtx::twe {

const std::array<const char*, kNumFeatures>& FeatureVector::names() {
  static const std::array<const char*, kNumFeatures> n = {
      "preset", "num_frames", "resolution", "si",
      "processor", "density", "capability", "ti"};
  return n;
}

FeatureVector make_features(const GoP& gop, Queue q, const QueueParams& params) {
  FeatureVector v;
  v.preset = static_cast<double>(preset_level(q));
  v.num_frames = static_cast<double>(gop.num_frames);
  v.resolution = gop.pixels();
  v.si = gop.si;
  v.processor = static_cast<double>(processor_class(q));
  v.density = params.k(q);
  v.capability = params.f(q);
  v.ti = gop.ti;
  return v;
}

namespace {
// Closed-form synthetic cost surface (flops per bit); the README documents it
// as the reference oracle. Spatial detail, motion, resolution and GoP length
// raise the per-bit cost; faster presets lower it; the edge processor class
// carries a mild surcharge.
constexpr double kBaseFlopsPerBit = 2000.0;
constexpr double kSiGain = 0.080;
constexpr double kTiGain = 0.050;
constexpr double kResExponent = 0.35;
constexpr double kRefPixels = 1280.0 * 720.0;
constexpr double kFrameGain = 0.002;
constexpr double kEdgeSurcharge = 0.15;
}  // namespace

double ground_truth_base(const FeatureVector& v) {
  const double preset_factor = 2.2 - 0.6 * v.preset;  // slow 2.2, medium 1.6, fast 1.0
  return kBaseFlopsPerBit * preset_factor * (1.0 + kSiGain * v.si) *
         (1.0 + kTiGain * v.ti) * std::pow(v.resolution / kRefPixels, kResExponent) *
         (1.0 + kFrameGain * v.num_frames) * (1.0 + kEdgeSurcharge * v.processor);
}

double ground_truth_workload(const FeatureVector& v, Rng& rng, double noise_sigma) {
  const double base = ground_truth_base(v);
  if (noise_sigma <= 0.0) return base;
  return base * std::exp(noise_sigma * rng.normal());
}

Eigen::VectorXd WorkloadModel::normalise(const FeatureVector& v) const {
  Eigen::VectorXd x(kNumFeatures);
  const auto a = v.as_array();
  for (int i = 0; i < kNumFeatures; ++i) x[i] = (a[i] - feat_mean_[i]) / feat_std_[i];
  return x;
}

double WorkloadModel::predict_normalised(const FeatureVector& v) const {
  if (!fitted_) throw ModelNotFitted("WorkloadModel::predict_normalised before fit");
  return net_.forward(normalise(v))[0];
}

double WorkloadModel::normalise_target(double workload) const {
  return (workload - target_mean_) / target_std_;
}

double WorkloadModel::estimate(const FeatureVector& v) const {
  if (!fitted_) throw ModelNotFitted("WorkloadModel::estimate before fit");
  const double raw = net_.forward(normalise(v))[0] * target_std_ + target_mean_;
  return std::clamp(raw, 1e-6, clamp_max_);
}

namespace {

// Gauss-Newton effective-parameter count for the evidence-style lambda update.
// J is the N x P jacobian of normalised predictions w.r.t. parameters.
double effective_params(const Eigen::MatrixXd& jac, double lambda, long n) {
  const int p = static_cast<int>(jac.cols());
  Eigen::MatrixXd a = (2.0 / static_cast<double>(n)) * (jac.transpose() * jac);
  a.diagonal().array() += 2.0 * lambda;
  const double trace_inv = a.ldlt().solve(Eigen::MatrixXd::Identity(p, p)).trace();
  return static_cast<double>(p) - 2.0 * lambda * trace_inv;
}

double weight_norm_sq(const nn::Mlp& net) {
  double acc = 0.0;
  for (const auto& layer : net.layers()) {
    acc += layer.w.squaredNorm();
    acc += layer.b.squaredNorm();
  }
  return acc;
}

}  // namespace

WorkloadModel fit(const std::vector<TrainingRecord>& records, const TrainCfg& cfg) {
  if (records.size() < 50)
    throw InsufficientData("fit: need at least 50 training records, got " +
                           std::to_string(records.size()));

  const long n = static_cast<long>(records.size());
  WorkloadModel model;

  // Frozen z-score stats over the training set; constant features keep std 1.
  for (int i = 0; i < kNumFeatures; ++i) {
    double mean = 0.0;
    for (const auto& r : records) mean += r.features.as_array()[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& r : records) {
      const double d = r.features.as_array()[i] - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    model.feat_mean_[i] = mean;
    model.feat_std_[i] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  {
    double mean = 0.0, var = 0.0, maxw = 0.0;
    for (const auto& r : records) {
      mean += r.workload;
      maxw = std::max(maxw, r.workload);
    }
    mean /= static_cast<double>(n);
    for (const auto& r : records) {
      const double d = r.workload - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    model.target_mean_ = mean;
    model.target_std_ = var > 1e-24 ? std::sqrt(var) : 1.0;
    model.clamp_max_ = 10.0 * maxw;
  }

  Eigen::MatrixXd x(kNumFeatures, n);
  Eigen::RowVectorXd y(n);
  for (long k = 0; k < n; ++k) {
    const auto a = records[static_cast<size_t>(k)].features.as_array();
    for (int i = 0; i < kNumFeatures; ++i)
      x(i, k) = (a[i] - model.feat_mean_[i]) / model.feat_std_[i];
    y[k] = (records[static_cast<size_t>(k)].workload - model.target_mean_) / model.target_std_;
  }

  Rng rng(cfg.seed, 0x73e0ULL);
  model.net_ = nn::Mlp::make({kNumFeatures, cfg.hidden, 1}, nn::Activation::Tanh, rng);
  nn::Sgd opt(model.net_, cfg.momentum);
  double lambda = cfg.lambda0;

  auto grad = model.net_.zero_grad();
  nn::Mlp::Tape tape;
  double mse = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Eigen::MatrixXd pred = model.net_.forward_batch(x, &tape);
    Eigen::RowVectorXd err = pred.row(0) - y;
    mse = err.squaredNorm() / static_cast<double>(n);
    if (!std::isfinite(mse))
      throw NonfiniteLoss("fit: loss became non-finite at epoch " + std::to_string(epoch));
    model.mse_history_.push_back(mse);

    grad.setZero();
    Eigen::MatrixXd dy = (2.0 / static_cast<double>(n)) * err;
    model.net_.backward(tape, dy, grad);
    // L2 term: d/dw of lambda * ||w||^2.
    auto& layers = model.net_.layers();
    for (size_t i = 0; i < layers.size(); ++i) {
      grad.w[i] += 2.0 * lambda * layers[i].w;
      grad.b[i] += 2.0 * lambda * layers[i].b;
    }
    opt.step(model.net_, grad, cfg.lr);

    if (!cfg.fixed_lambda && cfg.lambda_every > 0 && (epoch + 1) % cfg.lambda_every == 0) {
      const int p = model.net_.param_count();
      Eigen::MatrixXd jac(n, p);
      nn::Mlp::Tape stape;
      auto sgrad = model.net_.zero_grad();
      std::vector<double> flat;
      for (long k = 0; k < n; ++k) {
        model.net_.forward_batch(x.col(k), &stape);
        sgrad.setZero();
        model.net_.backward(stape, Eigen::MatrixXd::Ones(1, 1), sgrad);
        flat.clear();
        for (size_t li = 0; li < sgrad.w.size(); ++li) {
          flat.insert(flat.end(), sgrad.w[li].data(), sgrad.w[li].data() + sgrad.w[li].size());
          flat.insert(flat.end(), sgrad.b[li].data(), sgrad.b[li].data() + sgrad.b[li].size());
        }
        for (int j = 0; j < p; ++j) jac(k, j) = flat[static_cast<size_t>(j)];
      }
      const double gamma_eff =
          std::clamp(effective_params(jac, lambda, n), 1e-6,
                     std::min<double>(p, static_cast<double>(n - 1)));
      const double wsq = weight_norm_sq(model.net_);
      if (wsq > 1e-12) {
        const double cur_mse = model.mse_history_.back();
        lambda = std::clamp(gamma_eff * cur_mse / ((static_cast<double>(n) - gamma_eff) * wsq),
                            1e-8, 1.0);
      }
    }
  }

  model.lambda_ = lambda;
  model.final_mse_ = mse;
  model.fitted_ = true;
  return model;
}

ErrorReport error_report(const WorkloadModel& model,
                         const std::vector<TrainingRecord>& records) {
  if (records.empty()) throw InsufficientData("error_report: no records");
  std::vector<double> errors;
  errors.reserve(records.size());
  double sq = 0.0;
  for (const auto& r : records) {
    const double e = model.predict_normalised(r.features) - model.normalise_target(r.workload);
    errors.push_back(e);
    sq += e * e;
  }
  ErrorReport rep;
  rep.mse = sq / static_cast<double>(records.size());

  double lo = *std::min_element(errors.begin(), errors.end());
  double hi = *std::max_element(errors.begin(), errors.end());
  if (hi - lo < 1e-12) {
    lo -= 1e-12;
    hi += 1e-12;
  }
  constexpr int kBins = 20;
  const double width = (hi - lo) / kBins;
  rep.histogram.resize(kBins);
  for (int i = 0; i < kBins; ++i) {
    rep.histogram[static_cast<size_t>(i)].lo = lo + i * width;
    rep.histogram[static_cast<size_t>(i)].hi = lo + (i + 1) * width;
  }
  for (double e : errors) {
    int idx = static_cast<int>((e - lo) / width);
    idx = std::clamp(idx, 0, kBins - 1);
    ++rep.histogram[static_cast<size_t>(idx)].count;
  }
  return rep;
}

void WorkloadModel::save(const std::string& path) const {
  if (!fitted_) throw ModelNotFitted("WorkloadModel::save before fit");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  out << "dtx-workload-model 1\n";
  out << "layers";
  out << ' ' << net_.input_size();
  for (const auto& layer : net_.layers()) out << ' ' << layer.w.rows();
  out << '\n';
  out << "feat_mean";
  for (double v : feat_mean_) out << ' ' << csv::num(v);
  out << "\nfeat_std";
  for (double v : feat_std_) out << ' ' << csv::num(v);
  out << "\ntarget " << csv::num(target_mean_) << ' ' << csv::num(target_std_) << '\n';
  out << "lambda " << csv::num(lambda_) << '\n';
  out << "clamp_max " << csv::num(clamp_max_) << '\n';
  out << "final_mse " << csv::num(final_mse_) << '\n';
  std::vector<double> flat;
  net_.get_params(flat);
  out << "params " << flat.size() << '\n';
  for (double v : flat) out << csv::num(v) << '\n';
}

WorkloadModel WorkloadModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read model file: " + path);
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (tag != "dtx-workload-model" || version != 1)
    throw std::runtime_error("unrecognised model file: " + path);

  WorkloadModel m;
  std::vector<int> sizes;
  in >> tag;  // "layers"
  {
    std::string line;
    std::getline(in, line);
    std::istringstream ls(line);
    int s;
    while (ls >> s) sizes.push_back(s);
  }
  in >> tag;
  for (auto& v : m.feat_mean_) in >> v;
  in >> tag;
  for (auto& v : m.feat_std_) in >> v;
  in >> tag >> m.target_mean_ >> m.target_std_;
  in >> tag >> m.lambda_;
  in >> tag >> m.clamp_max_;
  in >> tag >> m.final_mse_;
  size_t count = 0;
  in >> tag >> count;
  if (!in) throw std::runtime_error("truncated model file: " + path);
  std::vector<double> flat(count);
  for (auto& v : flat) in >> v;
  if (!in) throw std::runtime_error("truncated model parameters: " + path);

  Rng dummy(0, 0);
  m.net_ = nn::Mlp::make(sizes, nn::Activation::Tanh, dummy);
  m.net_.set_params(flat);
  m.fitted_ = true;
  return m;
}

void write_records_csv(const std::string& path, const std::vector<TrainingRecord>& records) {
  csv::Writer w(path);
  w.row({"# dtx-records v1"});
  std::vector<std::string> cols;
  for (auto* name : FeatureVector::names()) cols.emplace_back(name);
  cols.emplace_back("workload");
  w.header(cols);
  for (const auto& r : records) {
    std::vector<std::string> cells;
    for (double v : r.features.as_array()) cells.push_back(csv::num(v));
    cells.push_back(csv::num(r.workload));
    w.row(cells);
  }
}

std::vector<TrainingRecord> read_records_csv(const std::string& path) {
  const auto table = csv::read(path);
  if (table.columns.size() != kNumFeatures + 1)
    throw std::runtime_error("records CSV must have 9 columns: " + path);
  std::vector<TrainingRecord> records;
  records.reserve(table.rows.size());
  for (size_t r = 0; r < table.rows.size(); ++r) {
    std::array<double, kNumFeatures> a{};
    for (int i = 0; i < kNumFeatures; ++i) a[static_cast<size_t>(i)] = table.value(r, i);
    TrainingRecord rec;
    rec.features = FeatureVector::from_array(a);
    rec.workload = table.value(r, kNumFeatures);
    records.push_back(rec);
  }
  return records;
}

}  // namespace dtx::twe
