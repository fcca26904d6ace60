#pragma once

#include <Eigen/Core>
#include <vector>

#include "dtx/rng.hpp"

namespace dtx::nn {

enum class Activation { Identity, Tanh, Relu };

double apply_activation(Activation a, double z);
double activation_grad(Activation a, double z);

/// Small fully connected network, double precision throughout. Batches are
/// stored column-wise (one sample per column).
class Mlp {
 public:
  struct Layer {
    Eigen::MatrixXd w;  // out x in
    Eigen::VectorXd b;  // out
    Activation act = Activation::Identity;
  };

  /// Records pre-activations and outputs of one forward pass for backprop.
  struct Tape {
    Eigen::MatrixXd input;
    std::vector<Eigen::MatrixXd> pre;   // per layer, out x batch
    std::vector<Eigen::MatrixXd> post;  // per layer, out x batch
  };

  struct Grad {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;

    void setZero();
    void axpy(double alpha, const Grad& other);  // this += alpha * other
    void scale(double alpha);
  };

  Mlp() = default;
  /// sizes = {in, h1, ..., out}; hidden layers use `hidden`, the final layer
  /// is linear. Weights get scaled-uniform init from the rng.
  static Mlp make(const std::vector<int>& sizes, Activation hidden, Rng& rng);

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x, Tape* tape = nullptr) const;

  /// Backprop of dLoss/dOutput (out x batch). Accumulates parameter grads
  /// into `grad` (which must be zero-initialised or hold prior accumulation);
  /// returns dLoss/dInput when `dx` is non-null.
  void backward(const Tape& tape, const Eigen::MatrixXd& dy, Grad& grad,
                Eigen::MatrixXd* dx = nullptr) const;

  Grad zero_grad() const;
  int param_count() const;
  void get_params(std::vector<double>& out) const;
  void set_params(const std::vector<double>& in, size_t offset = 0);

  int input_size() const { return layers_.empty() ? 0 : static_cast<int>(layers_.front().w.cols()); }
  int output_size() const { return layers_.empty() ? 0 : static_cast<int>(layers_.back().w.rows()); }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

 private:
  std::vector<Layer> layers_;
};

/// Adam optimiser state for one Mlp.
class Adam {
 public:
  Adam() = default;
  explicit Adam(const Mlp& net, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(Mlp& net, const Mlp::Grad& grad, double lr);
  long steps() const { return t_; }

 private:
  Mlp::Grad m_, v_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
};

/// Plain gradient descent with classical momentum.
class Sgd {
 public:
  Sgd() = default;
  explicit Sgd(const Mlp& net, double momentum = 0.0);
  void step(Mlp& net, const Mlp::Grad& grad, double lr);

 private:
  Mlp::Grad vel_;
  double momentum_ = 0.0;
};

}  // namespace dtx::nn
