#include "dtx/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace dtx::nn {

double apply_activation(Activation a, double z) {
  switch (a) {
    case Activation::Identity: return z;
    case Activation::Tanh: return std::tanh(z);
    case Activation::Relu: return z > 0.0 ? z : 0.0;
  }
  return z;
}

double activation_grad(Activation a, double z) {
  switch (a) {
    case Activation::Identity: return 1.0;
    case Activation::Tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

namespace {
Eigen::MatrixXd activate(Activation a, const Eigen::MatrixXd& z) {
  return z.unaryExpr([a](double v) { return apply_activation(a, v); });
}
Eigen::MatrixXd activate_grad_mat(Activation a, const Eigen::MatrixXd& z) {
  return z.unaryExpr([a](double v) { return activation_grad(a, v); });
}
}  // namespace

Mlp Mlp::make(const std::vector<int>& sizes, Activation hidden, Rng& rng) {
  if (sizes.size() < 2) throw std::invalid_argument("Mlp: need at least in/out sizes");
  Mlp net;
  for (size_t i = 0; i + 1 < sizes.size(); ++i) {
    Layer layer;
    const int in = sizes[i], out = sizes[i + 1];
    const double scale = std::sqrt(6.0 / static_cast<double>(in + out));
    layer.w.resize(out, in);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) layer.w(r, c) = rng.uniform(-scale, scale);
    layer.b = Eigen::VectorXd::Zero(out);
    layer.act = (i + 2 == sizes.size()) ? Activation::Identity : hidden;
    net.layers_.push_back(std::move(layer));
  }
  return net;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
  return forward_batch(x);
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& x, Tape* tape) const {
  if (tape) {
    tape->input = x;
    tape->pre.clear();
    tape->post.clear();
  }
  Eigen::MatrixXd cur = x;
  for (const auto& layer : layers_) {
    Eigen::MatrixXd z = (layer.w * cur).colwise() + layer.b;
    Eigen::MatrixXd a = activate(layer.act, z);
    if (tape) {
      tape->pre.push_back(z);
      tape->post.push_back(a);
    }
    cur = std::move(a);
  }
  return cur;
}

void Mlp::backward(const Tape& tape, const Eigen::MatrixXd& dy, Grad& grad,
                   Eigen::MatrixXd* dx) const {
  const int n = static_cast<int>(layers_.size());
  Eigen::MatrixXd delta = dy;
  for (int i = n - 1; i >= 0; --i) {
    delta = delta.cwiseProduct(activate_grad_mat(layers_[i].act, tape.pre[i]));
    const Eigen::MatrixXd& below = (i == 0) ? tape.input : tape.post[i - 1];
    grad.w[i].noalias() += delta * below.transpose();
    grad.b[i].noalias() += delta.rowwise().sum();
    if (i > 0 || dx) {
      Eigen::MatrixXd next = layers_[i].w.transpose() * delta;
      if (i == 0) {
        if (dx) *dx = std::move(next);
      } else {
        delta = std::move(next);
      }
    }
  }
}

void Mlp::Grad::setZero() {
  for (auto& m : w) m.setZero();
  for (auto& v : b) v.setZero();
}

void Mlp::Grad::axpy(double alpha, const Grad& other) {
  for (size_t i = 0; i < w.size(); ++i) w[i] += alpha * other.w[i];
  for (size_t i = 0; i < b.size(); ++i) b[i] += alpha * other.b[i];
}

void Mlp::Grad::scale(double alpha) {
  for (auto& m : w) m *= alpha;
  for (auto& v : b) v *= alpha;
}

Mlp::Grad Mlp::zero_grad() const {
  Grad g;
  for (const auto& layer : layers_) {
    g.w.emplace_back(Eigen::MatrixXd::Zero(layer.w.rows(), layer.w.cols()));
    g.b.emplace_back(Eigen::VectorXd::Zero(layer.b.size()));
  }
  return g;
}

int Mlp::param_count() const {
  int n = 0;
  for (const auto& layer : layers_)
    n += static_cast<int>(layer.w.size() + layer.b.size());
  return n;
}

void Mlp::get_params(std::vector<double>& out) const {
  for (const auto& layer : layers_) {
    out.insert(out.end(), layer.w.data(), layer.w.data() + layer.w.size());
    out.insert(out.end(), layer.b.data(), layer.b.data() + layer.b.size());
  }
}

void Mlp::set_params(const std::vector<double>& in, size_t offset) {
  size_t k = offset;
  for (auto& layer : layers_) {
    if (k + layer.w.size() + static_cast<size_t>(layer.b.size()) > in.size())
      throw std::invalid_argument("Mlp::set_params: parameter vector too short");
    std::copy(in.begin() + k, in.begin() + k + layer.w.size(), layer.w.data());
    k += layer.w.size();
    std::copy(in.begin() + k, in.begin() + k + layer.b.size(), layer.b.data());
    k += layer.b.size();
  }
}

Adam::Adam(const Mlp& net, double beta1, double beta2, double eps)
    : m_(net.zero_grad()), v_(net.zero_grad()), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(Mlp& net, const Mlp::Grad& grad, double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto& layers = net.layers();
  for (size_t i = 0; i < layers.size(); ++i) {
    m_.w[i] = beta1_ * m_.w[i] + (1.0 - beta1_) * grad.w[i];
    v_.w[i] = beta2_ * v_.w[i] + (1.0 - beta2_) * grad.w[i].cwiseProduct(grad.w[i]);
    layers[i].w.array() -=
        lr * (m_.w[i].array() / bc1) / ((v_.w[i].array() / bc2).sqrt() + eps_);
    m_.b[i] = beta1_ * m_.b[i] + (1.0 - beta1_) * grad.b[i];
    v_.b[i] = beta2_ * v_.b[i] + (1.0 - beta2_) * grad.b[i].cwiseProduct(grad.b[i]);
    layers[i].b.array() -=
        lr * (m_.b[i].array() / bc1) / ((v_.b[i].array() / bc2).sqrt() + eps_);
  }
}

Sgd::Sgd(const Mlp& net, double momentum) : vel_(net.zero_grad()), momentum_(momentum) {}

void Sgd::step(Mlp& net, const Mlp::Grad& grad, double lr) {
  auto& layers = net.layers();
  for (size_t i = 0; i < layers.size(); ++i) {
    vel_.w[i] = momentum_ * vel_.w[i] - lr * grad.w[i];
    vel_.b[i] = momentum_ * vel_.b[i] - lr * grad.b[i];
    layers[i].w += vel_.w[i];
    layers[i].b += vel_.b[i];
  }
}

}  // namespace dtx::nn
