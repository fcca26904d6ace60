#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "dtx/nn.hpp"
#include "dtx/rng.hpp"

using namespace dtx;
using namespace dtx::nn;

namespace {

// Independent forward pass with plain loops.
std::vector<double> oracle_forward(const Mlp& net, const std::vector<double>& x) {
  std::vector<double> cur = x;
  for (const auto& layer : net.layers()) {
    std::vector<double> next(static_cast<size_t>(layer.w.rows()));
    for (int r = 0; r < layer.w.rows(); ++r) {
      double z = layer.b[r];
      for (int c = 0; c < layer.w.cols(); ++c) z += layer.w(r, c) * cur[static_cast<size_t>(c)];
      next[static_cast<size_t>(r)] = apply_activation(layer.act, z);
    }
    cur = std::move(next);
  }
  return cur;
}

double mse_loss(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::RowVectorXd& y) {
  const Eigen::MatrixXd pred = net.forward_batch(x);
  return (pred.row(0) - y).squaredNorm() / static_cast<double>(y.size());
}

}  // namespace

TEST_SUITE("nn") {
  TEST_CASE("forward matches a straight-loop oracle") {
    Rng rng(101, 0);
    for (auto act : {Activation::Tanh, Activation::Relu}) {
      Mlp net = Mlp::make({4, 6, 3}, act, rng);
      for (int rep = 0; rep < 5; ++rep) {
        Eigen::VectorXd x(4);
        std::vector<double> xv(4);
        for (int i = 0; i < 4; ++i) {
          x[i] = rng.uniform(-2.0, 2.0);
          xv[static_cast<size_t>(i)] = x[i];
        }
        const Eigen::VectorXd out = net.forward(x);
        const auto expect = oracle_forward(net, xv);
        for (int i = 0; i < 3; ++i)
          CHECK(out[i] == doctest::Approx(expect[static_cast<size_t>(i)]).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("analytic gradients match central differences") {
    Rng rng(103, 0);
    for (auto act : {Activation::Tanh, Activation::Relu}) {
      CAPTURE(static_cast<int>(act));
      Mlp net = Mlp::make({5, 4, 1}, act, rng);
      const int n = 12;
      Eigen::MatrixXd x(5, n);
      Eigen::RowVectorXd y(n);
      for (int k = 0; k < n; ++k) {
        for (int i = 0; i < 5; ++i) x(i, k) = rng.uniform(-1.5, 1.5);
        y[k] = rng.uniform(-1.0, 1.0);
      }

      Mlp::Tape tape;
      const Eigen::MatrixXd pred = net.forward_batch(x, &tape);
      auto grad = net.zero_grad();
      const Eigen::MatrixXd dy = (2.0 / n) * (pred.row(0) - y);
      net.backward(tape, dy, grad);

      std::vector<double> flat;
      net.get_params(flat);
      std::vector<double> analytic;
      {
        Mlp::Grad g = grad;
        // Flatten in the same layer order as get_params.
        for (size_t li = 0; li < g.w.size(); ++li) {
          analytic.insert(analytic.end(), g.w[li].data(), g.w[li].data() + g.w[li].size());
          analytic.insert(analytic.end(), g.b[li].data(), g.b[li].data() + g.b[li].size());
        }
      }

      const double eps = 1e-6;
      Mlp probe = net;
      for (size_t p = 0; p < flat.size(); ++p) {
        std::vector<double> plus = flat, minus = flat;
        plus[p] += eps;
        minus[p] -= eps;
        probe.set_params(plus);
        const double lp = mse_loss(probe, x, y);
        probe.set_params(minus);
        const double lm = mse_loss(probe, x, y);
        const double fd = (lp - lm) / (2 * eps);
        const double scale = std::max({1.0, std::abs(fd), std::abs(analytic[p])});
        CHECK(std::abs(analytic[p] - fd) / scale < 1e-4);
      }
    }
  }

  TEST_CASE("backward also produces input gradients") {
    Rng rng(107, 0);
    Mlp net = Mlp::make({3, 5, 2}, Activation::Tanh, rng);
    Eigen::MatrixXd x(3, 1);
    x << 0.3, -0.7, 1.1;
    Mlp::Tape tape;
    const Eigen::MatrixXd out = net.forward_batch(x, &tape);
    Eigen::MatrixXd dy = Eigen::MatrixXd::Ones(2, 1);
    auto grad = net.zero_grad();
    Eigen::MatrixXd dx;
    net.backward(tape, dy, grad, &dx);

    const double eps = 1e-6;
    for (int i = 0; i < 3; ++i) {
      Eigen::MatrixXd xp = x, xm = x;
      xp(i, 0) += eps;
      xm(i, 0) -= eps;
      const double fp = net.forward_batch(xp).sum();
      const double fm = net.forward_batch(xm).sum();
      CHECK(dx(i, 0) == doctest::Approx((fp - fm) / (2 * eps)).epsilon(1e-5));
    }
  }

  TEST_CASE("param vector round trip") {
    Rng rng(109, 0);
    Mlp net = Mlp::make({4, 8, 2}, Activation::Relu, rng);
    std::vector<double> flat;
    net.get_params(flat);
    CHECK(static_cast<int>(flat.size()) == net.param_count());
    Mlp other = Mlp::make({4, 8, 2}, Activation::Relu, rng);
    other.set_params(flat);
    std::vector<double> back;
    other.get_params(back);
    CHECK(back == flat);
  }

  TEST_CASE("adam with zero learning rate or zero gradient keeps parameters") {
    Rng rng(113, 0);
    Mlp net = Mlp::make({2, 3, 1}, Activation::Tanh, rng);
    std::vector<double> before;
    net.get_params(before);

    Adam opt(net);
    auto grad = net.zero_grad();
    grad.w[0].setConstant(0.5);
    opt.step(net, grad, 0.0);
    std::vector<double> after;
    net.get_params(after);
    CHECK(after == before);

    Adam opt2(net);
    auto zero = net.zero_grad();
    opt2.step(net, zero, 0.1);
    after.clear();
    net.get_params(after);
    CHECK(after == before);  // 0 / (sqrt(0) + eps) stays exactly 0
  }

  TEST_CASE("sgd momentum accumulates velocity") {
    Rng rng(127, 0);
    Mlp net = Mlp::make({1, 1}, Activation::Identity, rng);
    std::vector<double> start;
    net.get_params(start);
    Sgd opt(net, 0.9);
    auto grad = net.zero_grad();
    grad.w[0].setConstant(1.0);
    opt.step(net, grad, 0.1);   // v = -0.1
    opt.step(net, grad, 0.1);   // v = -0.19
    std::vector<double> now;
    net.get_params(now);
    CHECK(now[0] == doctest::Approx(start[0] - 0.1 - 0.19).epsilon(1e-12));
  }
}
