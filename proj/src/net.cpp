#include "meq/net.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace meq {

double leaky_relu(double x, double slope) { return x >= 0.0 ? x : slope * x; }

double leaky_relu_grad(double x, double slope) { return x >= 0.0 ? 1.0 : slope; }

namespace {

void apply_activation(Activation act, const Eigen::MatrixXd& z, Eigen::MatrixXd& out) {
  switch (act) {
    case Activation::identity:
      out = z;
      break;
    case Activation::leaky_relu:
      out = z.unaryExpr([](double v) { return leaky_relu(v, kLeakyReluSlope); });
      break;
    case Activation::tanh:
      out = z.array().tanh();
      break;
  }
}

// d(activation)/d(preact), evaluated from the cached pre-activations.
void activation_grad(Activation act, const Eigen::MatrixXd& z, Eigen::MatrixXd& out) {
  switch (act) {
    case Activation::identity:
      out.setOnes(z.rows(), z.cols());
      break;
    case Activation::leaky_relu:
      out = z.unaryExpr([](double v) { return leaky_relu_grad(v, kLeakyReluSlope); });
      break;
    case Activation::tanh: {
      out = 1.0 - z.array().tanh().square();
      break;
    }
  }
}

}  // namespace

std::size_t MlpParams::param_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

bool MlpParams::all_finite() const {
  for (const Layer& l : layers) {
    if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

void MlpParams::validate() const {
  if (layers.empty()) throw std::invalid_argument("MlpParams: no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& l = layers[i];
    if (l.bias.size() != l.weights.rows()) {
      throw std::invalid_argument("MlpParams: bias size mismatch in layer " + std::to_string(i));
    }
    if (i > 0 && layers[i - 1].out_dim() != l.in_dim()) {
      throw std::invalid_argument("MlpParams: dimension chain broken at layer " + std::to_string(i));
    }
  }
  if (!all_finite()) throw std::invalid_argument("MlpParams: non-finite parameter");
}

MlpParams make_mlp(int input_dim, const std::vector<int>& hidden, int output_dim,
                   Activation hidden_act, Activation output_act, RngStream& rng) {
  MlpParams net;
  std::vector<int> dims;
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output_dim);
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    Layer l;
    const int in = dims[i], out = dims[i + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    l.weights.resize(out, in);
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) l.weights(r, c) = rng.uniform(-bound, bound);
    }
    l.bias = Eigen::VectorXd::Zero(out);
    l.activation = (i + 2 < dims.size()) ? hidden_act : output_act;
    net.layers.push_back(std::move(l));
  }
  return net;
}

const Eigen::MatrixXd& forward(const MlpParams& net, const Eigen::MatrixXd& input,
                               ForwardCache& cache) {
  if (input.cols() != net.input_dim()) {
    throw std::invalid_argument("forward: input width " + std::to_string(input.cols()) +
                                " != net input dim " + std::to_string(net.input_dim()));
  }
  const std::size_t n_layers = net.layers.size();
  cache.inputs.resize(n_layers);
  cache.preacts.resize(n_layers);

  cache.inputs[0] = input;
  for (std::size_t i = 0; i < n_layers; ++i) {
    const Layer& l = net.layers[i];
    Eigen::MatrixXd& z = cache.preacts[i];
    z.noalias() = cache.inputs[i] * l.weights.transpose();
    z.rowwise() += l.bias.transpose();
    Eigen::MatrixXd& dst = (i + 1 < n_layers) ? cache.inputs[i + 1] : cache.output;
    apply_activation(l.activation, z, dst);
  }
  return cache.output;
}

Eigen::VectorXd forward(const MlpParams& net, const Eigen::VectorXd& input) {
  ForwardCache cache;
  forward(net, Eigen::MatrixXd(input.transpose()), cache);
  return cache.output.row(0).transpose();
}

void Grads::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : bias) b.setZero();
}

bool Grads::all_finite() const {
  for (const auto& w : weights) {
    if (!w.allFinite()) return false;
  }
  for (const auto& b : bias) {
    if (!b.allFinite()) return false;
  }
  return true;
}

Grads make_grads_like(const MlpParams& net) {
  Grads g;
  for (const Layer& l : net.layers) {
    g.weights.emplace_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    g.bias.emplace_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  return g;
}

void backward(const MlpParams& net, const ForwardCache& cache,
              const Eigen::MatrixXd& upstream, Grads& grads,
              Eigen::MatrixXd* input_grad, bool want_param_grads) {
  const std::size_t n_layers = net.layers.size();
  if (cache.inputs.size() != n_layers || cache.preacts.size() != n_layers) {
    throw std::invalid_argument("backward: cache does not match network");
  }
  if (upstream.cols() != net.output_dim() || upstream.rows() != cache.inputs[0].rows()) {
    throw std::invalid_argument("backward: upstream shape mismatch");
  }
  if (want_param_grads && grads.weights.size() != n_layers) grads = make_grads_like(net);

  Eigen::MatrixXd delta;      // d/d(preact) of the current layer
  Eigen::MatrixXd act_grad;
  Eigen::MatrixXd carry = upstream;
  for (std::size_t idx = n_layers; idx-- > 0;) {
    const Layer& l = net.layers[idx];
    if (cache.preacts[idx].rows() != carry.rows() || cache.preacts[idx].cols() != carry.cols()) {
      throw std::invalid_argument("backward: stale cache at layer " + std::to_string(idx));
    }
    activation_grad(l.activation, cache.preacts[idx], act_grad);
    delta = carry.cwiseProduct(act_grad);
    if (want_param_grads) {
      grads.weights[idx].noalias() = delta.transpose() * cache.inputs[idx];
      grads.bias[idx] = delta.colwise().sum().transpose();
    }
    if (idx > 0 || input_grad != nullptr) {
      carry.noalias() = delta * l.weights;
    }
  }
  if (input_grad != nullptr) *input_grad = carry;
}

Grads backward(const MlpParams& net, const ForwardCache& cache,
               const Eigen::MatrixXd& upstream, Eigen::MatrixXd* input_grad) {
  Grads g = make_grads_like(net);
  backward(net, cache, upstream, g, input_grad);
  return g;
}

void backward_input_only(const MlpParams& net, const ForwardCache& cache,
                         const Eigen::MatrixXd& upstream, Eigen::MatrixXd& input_grad) {
  Grads unused;
  backward(net, cache, upstream, unused, &input_grad, false);
}

AdamState make_adam_state(const MlpParams& net) {
  AdamState s;
  for (const Layer& l : net.layers) {
    s.m_w.emplace_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    s.v_w.emplace_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    s.m_b.emplace_back(Eigen::VectorXd::Zero(l.bias.size()));
    s.v_b.emplace_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  return s;
}

void adam_step(MlpParams& net, const Grads& grads, AdamState& state, double lr) {
  if (grads.weights.size() != net.layers.size()) {
    throw std::invalid_argument("adam_step: gradient shape mismatch");
  }
  if (!(lr > 0.0)) throw std::invalid_argument("adam_step: lr must be positive");
  if (!grads.all_finite()) throw std::runtime_error("adam_step: non-finite gradient, update rejected");

  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
      m = state.beta1 * m.array() + (1.0 - state.beta1) * g.array();
      v = state.beta2 * v.array() + (1.0 - state.beta2) * g.array().square();
      param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + state.eps);
    };
    update(net.layers[i].weights, grads.weights[i], state.m_w[i], state.v_w[i]);
    update(net.layers[i].bias, grads.bias[i], state.m_b[i], state.v_b[i]);
  }
}

double AdamScalar::update(double param, double grad, double lr) {
  if (!std::isfinite(grad)) throw std::runtime_error("AdamScalar: non-finite gradient");
  step += 1;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad * grad;
  const double mhat = m / (1.0 - std::pow(beta1, static_cast<double>(step)));
  const double vhat = v / (1.0 - std::pow(beta2, static_cast<double>(step)));
  return param - lr * mhat / (std::sqrt(vhat) + eps);
}

void polyak_update(MlpParams& target, const MlpParams& online, double tau) {
  if (target.layers.size() != online.layers.size()) {
    throw std::invalid_argument("polyak_update: layer count mismatch");
  }
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("polyak_update: tau out of (0, 1]");
  for (std::size_t i = 0; i < target.layers.size(); ++i) {
    Layer& t = target.layers[i];
    const Layer& o = online.layers[i];
    if (t.weights.rows() != o.weights.rows() || t.weights.cols() != o.weights.cols()) {
      throw std::invalid_argument("polyak_update: shape mismatch at layer " + std::to_string(i));
    }
    t.weights = (1.0 - tau) * t.weights + tau * o.weights;
    t.bias = (1.0 - tau) * t.bias + tau * o.bias;
  }
}

namespace {

// Flat parameter indexing: layer 0 weights row-major, layer 0 bias, layer 1 ...
double* param_at(MlpParams& net, std::size_t flat) {
  for (Layer& l : net.layers) {
    const std::size_t nw = static_cast<std::size_t>(l.weights.size());
    if (flat < nw) {
      const Eigen::Index r = static_cast<Eigen::Index>(flat) / l.weights.cols();
      const Eigen::Index c = static_cast<Eigen::Index>(flat) % l.weights.cols();
      return &l.weights(r, c);
    }
    flat -= nw;
    const std::size_t nb = static_cast<std::size_t>(l.bias.size());
    if (flat < nb) return &l.bias(static_cast<Eigen::Index>(flat));
    flat -= nb;
  }
  return nullptr;
}

double grad_at(const Grads& g, std::size_t flat) {
  for (std::size_t i = 0; i < g.weights.size(); ++i) {
    const auto& w = g.weights[i];
    const std::size_t nw = static_cast<std::size_t>(w.size());
    if (flat < nw) {
      const Eigen::Index r = static_cast<Eigen::Index>(flat) / w.cols();
      const Eigen::Index c = static_cast<Eigen::Index>(flat) % w.cols();
      return w(r, c);
    }
    flat -= nw;
    const std::size_t nb = static_cast<std::size_t>(g.bias[i].size());
    if (flat < nb) return g.bias[i](static_cast<Eigen::Index>(flat));
    flat -= nb;
  }
  return 0.0;
}

double scalar_output(const MlpParams& net, const Eigen::VectorXd& input) {
  return forward(net, input).sum();
}

}  // namespace

double grad_check_against(const MlpParams& net, const Eigen::VectorXd& input,
                          double h, const Grads& analytic, std::size_t max_params) {
  const std::size_t total = net.param_count();
  const std::size_t stride =
      (max_params == 0 || max_params >= total) ? 1 : (total + max_params - 1) / max_params;

  MlpParams probe = net;  // mutated and restored around each evaluation
  double worst = 0.0;
  for (std::size_t flat = 0; flat < total; flat += stride) {
    double* p = param_at(probe, flat);
    const double saved = *p;
    *p = saved + h;
    const double fp = scalar_output(probe, input);
    *p = saved - h;
    const double fm = scalar_output(probe, input);
    *p = saved;
    const double numeric = (fp - fm) / (2.0 * h);
    const double a = grad_at(analytic, flat);
    const double denom = std::max(std::abs(a), std::abs(numeric)) + 1e-8;
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

double grad_check(const MlpParams& net, const Eigen::VectorXd& input, double h,
                  std::size_t max_params) {
  ForwardCache cache;
  forward(net, Eigen::MatrixXd(input.transpose()), cache);
  const Eigen::MatrixXd upstream = Eigen::MatrixXd::Ones(1, net.output_dim());
  const Grads analytic = backward(net, cache, upstream);
  return grad_check_against(net, input, h, analytic, max_params);
}

}  // namespace meq
