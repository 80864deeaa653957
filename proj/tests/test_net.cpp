#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "meq/net.hpp"
#include "meq/rng.hpp"

using namespace meq;

namespace {

MlpParams single_layer(const Eigen::MatrixXd& w, const Eigen::VectorXd& b, Activation act) {
  MlpParams net;
  net.layers.push_back({w, b, act});
  return net;
}

// Inputs whose pre-activations stay away from the LeakyReLU kink, so central
// differences are valid.
Eigen::VectorXd kink_avoiding_input(const MlpParams& net, RngStream& rng, double margin = 1e-4) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    Eigen::VectorXd x(net.input_dim());
    for (int i = 0; i < x.size(); ++i) x(i) = rng.uniform(-1.0, 1.0);
    ForwardCache cache;
    forward(net, Eigen::MatrixXd(x.transpose()), cache);
    double closest = std::numeric_limits<double>::max();
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      if (net.layers[l].activation != Activation::leaky_relu) continue;
      closest = std::min(closest, cache.preacts[l].array().abs().minCoeff());
    }
    if (closest > margin) return x;
  }
  FAIL("could not find a kink-avoiding input");
  return Eigen::VectorXd();
}

}  // namespace

TEST_CASE("leaky_relu branches") {
  CHECK(leaky_relu(1.0, 0.01) == 1.0);
  CHECK(leaky_relu(0.0, 0.01) == 0.0);
  CHECK(leaky_relu(-2.0, 0.01) == doctest::Approx(-0.02));
  CHECK(leaky_relu_grad(0.5, 0.01) == 1.0);
  CHECK(leaky_relu_grad(-0.5, 0.01) == 0.01);
}

TEST_CASE("forward: identity layer is the identity map") {
  const MlpParams net = single_layer(Eigen::MatrixXd::Identity(2, 2),
                                     Eigen::VectorXd::Zero(2), Activation::identity);
  Eigen::VectorXd x(2);
  x << 1.0, 2.0;
  const Eigen::VectorXd y = forward(net, x);
  CHECK(y(0) == 1.0);
  CHECK(y(1) == 2.0);
}

TEST_CASE("forward: scalar affine layer") {
  Eigen::MatrixXd w(1, 1);
  w << 2.0;
  Eigen::VectorXd b(1);
  b << 1.0;
  const MlpParams net = single_layer(w, b, Activation::identity);
  Eigen::VectorXd x(1);
  x << 3.0;
  CHECK(forward(net, x)(0) == doctest::Approx(7.0));
}

TEST_CASE("forward: zero weights pass only the last bias") {
  MlpParams net;
  net.layers.push_back({Eigen::MatrixXd::Zero(3, 4), Eigen::VectorXd::Zero(3),
                        Activation::leaky_relu});
  Eigen::VectorXd last_bias(2);
  last_bias << 0.5, -0.5;
  net.layers.push_back({Eigen::MatrixXd::Zero(2, 3), last_bias, Activation::identity});

  RngStream rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd x(4);
    for (int i = 0; i < 4; ++i) x(i) = rng.uniform(-10.0, 10.0);
    const Eigen::VectorXd y = forward(net, x);
    CHECK(y(0) == 0.5);
    CHECK(y(1) == -0.5);
  }
}

TEST_CASE("forward: width mismatch is a shape error") {
  const MlpParams net = single_layer(Eigen::MatrixXd::Identity(2, 2),
                                     Eigen::VectorXd::Zero(2), Activation::identity);
  Eigen::VectorXd x(3);
  x.setZero();
  CHECK_THROWS_AS((void)forward(net, x), std::invalid_argument);
}

TEST_CASE("backward: scalar affine layer gradients by hand") {
  Eigen::MatrixXd w(1, 1);
  w << 2.0;
  Eigen::VectorXd b(1);
  b << 1.0;
  const MlpParams net = single_layer(w, b, Activation::identity);

  ForwardCache cache;
  Eigen::MatrixXd x(1, 1);
  x << 3.0;
  forward(net, x, cache);
  const Grads g = backward(net, cache, Eigen::MatrixXd::Ones(1, 1));
  CHECK(g.weights[0](0, 0) == doctest::Approx(3.0));
  CHECK(g.bias[0](0) == doctest::Approx(1.0));
}

TEST_CASE("backward: zero upstream gives zero gradients") {
  RngStream rng(2);
  const MlpParams net = make_mlp(3, {8, 8}, 2, Activation::leaky_relu, Activation::tanh, rng);
  ForwardCache cache;
  Eigen::MatrixXd x(1, 3);
  x << 0.3, -0.7, 1.1;
  forward(net, x, cache);
  const Grads g = backward(net, cache, Eigen::MatrixXd::Zero(1, 2));
  for (const auto& wm : g.weights) CHECK(wm.cwiseAbs().maxCoeff() == 0.0);
  for (const auto& bv : g.bias) {
    if (bv.size() > 0) CHECK(bv.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("backward: stale cache is rejected") {
  RngStream rng(3);
  const MlpParams net = make_mlp(3, {4}, 2, Activation::leaky_relu, Activation::identity, rng);
  const MlpParams other = make_mlp(5, {4}, 2, Activation::leaky_relu, Activation::identity, rng);
  ForwardCache cache;
  forward(other, Eigen::MatrixXd::Ones(1, 5), cache);
  Grads g = make_grads_like(net);
  CHECK_THROWS_AS(backward(net, cache, Eigen::MatrixXd::Ones(1, 2), g), std::invalid_argument);
}

TEST_CASE("backward matches central differences on a random 3-layer net") {
  RngStream rng(4);
  const MlpParams net = make_mlp(4, {6, 5}, 3, Activation::leaky_relu, Activation::tanh, rng);
  const Eigen::VectorXd x = kink_avoiding_input(net, rng);
  // every parameter
  CHECK(grad_check(net, x, 1e-5) < 1e-4);
}

TEST_CASE("adam: zero gradient is a fixed point that still advances the step") {
  RngStream rng(5);
  MlpParams net = make_mlp(3, {4}, 2, Activation::leaky_relu, Activation::identity, rng);
  const MlpParams before = net;
  AdamState state = make_adam_state(net);
  Grads g = make_grads_like(net);
  adam_step(net, g, state, 1e-3);
  CHECK(state.step == 1);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    CHECK(net.layers[i].weights == before.layers[i].weights);
    CHECK(net.layers[i].bias == before.layers[i].bias);
  }
}

TEST_CASE("adam: bias-corrected first step moves by ~lr") {
  Eigen::MatrixXd w(1, 1);
  w << 0.0;
  MlpParams net = single_layer(w, Eigen::VectorXd::Zero(1), Activation::identity);
  AdamState state = make_adam_state(net);
  Grads g = make_grads_like(net);
  g.weights[0](0, 0) = 1.0;
  adam_step(net, g, state, 1e-3);
  // m_hat = 1, v_hat = 1 on the first step, so theta = -lr / (1 + eps)
  CHECK(std::abs(net.layers[0].weights(0, 0) + 1e-3) < 1e-9);
}

TEST_CASE("adam: identical gradient streams keep two nets bitwise identical") {
  RngStream rng(6);
  MlpParams a = make_mlp(3, {6}, 2, Activation::leaky_relu, Activation::tanh, rng);
  MlpParams b = a;
  AdamState sa = make_adam_state(a), sb = make_adam_state(b);
  RngStream gs(7);
  for (int step = 0; step < 25; ++step) {
    Grads g = make_grads_like(a);
    for (auto& wm : g.weights) {
      for (int r = 0; r < wm.rows(); ++r) {
        for (int c = 0; c < wm.cols(); ++c) wm(r, c) = gs.normal();
      }
    }
    for (auto& bv : g.bias) {
      for (int i = 0; i < bv.size(); ++i) bv(i) = gs.normal();
    }
    adam_step(a, g, sa, 7e-4);
    adam_step(b, g, sb, 7e-4);
  }
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    CHECK(a.layers[i].weights == b.layers[i].weights);
    CHECK(a.layers[i].bias == b.layers[i].bias);
  }
}

TEST_CASE("adam: non-finite gradient rejected without touching parameters") {
  RngStream rng(8);
  MlpParams net = make_mlp(2, {3}, 1, Activation::leaky_relu, Activation::identity, rng);
  const MlpParams before = net;
  AdamState state = make_adam_state(net);
  Grads g = make_grads_like(net);
  g.weights[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(adam_step(net, g, state, 1e-3), std::runtime_error);
  CHECK(state.step == 0);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    CHECK(net.layers[i].weights == before.layers[i].weights);
  }
}

TEST_CASE("adam: per-step displacement bounded by lr for steady gradients") {
  RngStream rng(9);
  MlpParams net = make_mlp(3, {5}, 2, Activation::leaky_relu, Activation::identity, rng);
  AdamState state = make_adam_state(net);
  Grads g = make_grads_like(net);
  for (auto& wm : g.weights) {
    for (int r = 0; r < wm.rows(); ++r) {
      for (int c = 0; c < wm.cols(); ++c) wm(r, c) = rng.normal();
    }
  }
  const double lr = 1e-3;
  MlpParams prev = net;
  for (int step = 0; step < 50; ++step) {
    adam_step(net, g, state, lr);
    double max_move = 0.0;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
      max_move = std::max(max_move,
                          (net.layers[i].weights - prev.layers[i].weights).cwiseAbs().maxCoeff());
    }
    CHECK(max_move <= lr * (1.0 + 1e-6));
    prev = net;
  }
}

TEST_CASE("polyak: tau=1 copies, fixed point holds, 0.005 blends") {
  RngStream rng(10);
  const MlpParams online = make_mlp(2, {3}, 1, Activation::leaky_relu, Activation::identity, rng);
  MlpParams target = make_mlp(2, {3}, 1, Activation::leaky_relu, Activation::identity, rng);

  MlpParams t1 = target;
  polyak_update(t1, online, 1.0);
  for (std::size_t i = 0; i < online.layers.size(); ++i) {
    CHECK(t1.layers[i].weights == online.layers[i].weights);
  }

  MlpParams t2 = online;
  polyak_update(t2, online, 0.005);
  for (std::size_t i = 0; i < online.layers.size(); ++i) {
    CHECK(t2.layers[i].weights == online.layers[i].weights);
  }

  Eigen::MatrixXd w0(1, 1), w1(1, 1);
  w0 << 0.0;
  w1 << 1.0;
  MlpParams tt = single_layer(w0, Eigen::VectorXd::Zero(1), Activation::identity);
  const MlpParams oo = single_layer(w1, Eigen::VectorXd::Zero(1), Activation::identity);
  polyak_update(tt, oo, 0.005);
  CHECK(tt.layers[0].weights(0, 0) == doctest::Approx(0.005));
}

TEST_CASE("polyak: geometric contraction toward a fixed online net") {
  RngStream rng(11);
  const MlpParams online = make_mlp(3, {4}, 2, Activation::leaky_relu, Activation::identity, rng);
  MlpParams target = make_mlp(3, {4}, 2, Activation::leaky_relu, Activation::identity, rng);

  auto inf_dist = [&](const MlpParams& a, const MlpParams& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
      d = std::max(d, (a.layers[i].weights - b.layers[i].weights).cwiseAbs().maxCoeff());
    }
    return d;
  };

  const double d0 = inf_dist(target, online);
  const double tau = 0.005;
  const int k = 200;
  for (int i = 0; i < k; ++i) polyak_update(target, online, tau);
  const double expect = std::pow(1.0 - tau, k) * d0;
  CHECK(inf_dist(target, online) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("polyak: shape mismatch throws") {
  RngStream rng(12);
  MlpParams a = make_mlp(2, {3}, 1, Activation::leaky_relu, Activation::identity, rng);
  const MlpParams b = make_mlp(2, {4}, 1, Activation::leaky_relu, Activation::identity, rng);
  CHECK_THROWS_AS(polyak_update(a, b, 0.5), std::invalid_argument);
}

TEST_CASE("grad_check: linear net error sits at rounding scale") {
  RngStream rng(13);
  const MlpParams net = make_mlp(4, {}, 3, Activation::identity, Activation::identity, rng);
  Eigen::VectorXd x(4);
  x << 0.2, -1.4, 0.9, 2.2;
  CHECK(grad_check(net, x, 1e-5) < 1e-9);
}

TEST_CASE("grad_check: production shapes stay under 1e-4 at kink-avoiding inputs") {
  RngStream rng(14);
  const MlpParams desk = make_mlp(12, {64, 64}, 4, Activation::leaky_relu, Activation::tanh, rng);
  const Eigen::VectorXd xd = kink_avoiding_input(desk, rng);
  CHECK(grad_check(desk, xd, 1e-5) < 1e-4);

  const MlpParams paper =
      make_mlp(12, {400, 300}, 4, Activation::leaky_relu, Activation::tanh, rng);
  const Eigen::VectorXd xp = kink_avoiding_input(paper, rng);
  CHECK(grad_check(paper, xp, 1e-5, 800) < 1e-4);
}

TEST_CASE("grad_check: a corrupted gradient entry is flagged") {
  RngStream rng(15);
  const MlpParams net = make_mlp(3, {5}, 2, Activation::leaky_relu, Activation::tanh, rng);
  const Eigen::VectorXd x = kink_avoiding_input(net, rng);

  ForwardCache cache;
  forward(net, Eigen::MatrixXd(x.transpose()), cache);
  Grads analytic = backward(net, cache, Eigen::MatrixXd::Ones(1, 2));

  // double the largest-magnitude weight gradient
  std::size_t li = 0;
  Eigen::Index br = 0, bc = 0;
  double best = -1.0;
  for (std::size_t l = 0; l < analytic.weights.size(); ++l) {
    for (Eigen::Index r = 0; r < analytic.weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < analytic.weights[l].cols(); ++c) {
        if (std::abs(analytic.weights[l](r, c)) > best) {
          best = std::abs(analytic.weights[l](r, c));
          li = l;
          br = r;
          bc = c;
        }
      }
    }
  }
  analytic.weights[li](br, bc) *= 2.0;
  CHECK(grad_check_against(net, x, 1e-5, analytic) > 0.1);
}

TEST_CASE("batched forward equals stacked single-sample forwards") {
  RngStream rng(16);
  const MlpParams net = make_mlp(5, {7, 6}, 3, Activation::leaky_relu, Activation::tanh, rng);
  Eigen::MatrixXd batch(4, 5);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 5; ++c) batch(r, c) = rng.uniform(-2.0, 2.0);
  }
  ForwardCache cache;
  const Eigen::MatrixXd out = forward(net, batch, cache);
  for (int r = 0; r < 4; ++r) {
    const Eigen::VectorXd single = forward(net, Eigen::VectorXd(batch.row(r).transpose()));
    CHECK((out.row(r).transpose() - single).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("make_mlp: default hidden activations and dimension chain") {
  RngStream rng(17);
  const MlpParams net = make_mlp(12, {400, 300}, 4, Activation::leaky_relu, Activation::tanh, rng);
  net.validate();
  REQUIRE(net.layers.size() == 3);
  CHECK(net.layers[0].out_dim() == 400);
  CHECK(net.layers[1].out_dim() == 300);
  CHECK(net.layers[2].out_dim() == 4);
  CHECK(net.layers[0].activation == Activation::leaky_relu);
  CHECK(net.layers[2].activation == Activation::tanh);
  // fan-in bound
  CHECK(net.layers[1].weights.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(400.0));
  CHECK(net.layers[0].bias.cwiseAbs().maxCoeff() == 0.0);
}
