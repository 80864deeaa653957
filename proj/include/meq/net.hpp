#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "meq/rng.hpp"

namespace meq {

inline constexpr double kLeakyReluSlope = 0.01;

enum class Activation : std::uint8_t { identity = 0, leaky_relu = 1, tanh = 2 };

/// x for x >= 0, slope*x otherwise. slope must lie in (0, 1).
double leaky_relu(double x, double slope);
/// Derivative of leaky_relu; 1 at the origin (consistent with the x >= 0 branch).
double leaky_relu_grad(double x, double slope);

/// One dense layer. weights is (outputs x inputs), row-major semantics.
struct Layer {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
  Activation activation = Activation::identity;

  int in_dim() const { return static_cast<int>(weights.cols()); }
  int out_dim() const { return static_cast<int>(weights.rows()); }
};

/// A dense network as a plain value record. Layer dimensions must chain.
struct MlpParams {
  std::vector<Layer> layers;

  int input_dim() const { return layers.front().in_dim(); }
  int output_dim() const { return layers.back().out_dim(); }
  std::size_t param_count() const;
  bool all_finite() const;
  /// Throws std::invalid_argument if dimensions do not chain or values are non-finite.
  void validate() const;
};

/// Fan-in uniform init: weights ~ U(-1/sqrt(in), 1/sqrt(in)), biases zero.
MlpParams make_mlp(int input_dim, const std::vector<int>& hidden, int output_dim,
                   Activation hidden_act, Activation output_act, RngStream& rng);

/// Per-layer values recorded by forward() that backward() needs.
/// Row i of every matrix belongs to sample i of the batch.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;      // input to each layer
  std::vector<Eigen::MatrixXd> preacts;     // pre-activation of each layer
  Eigen::MatrixXd output;                   // post-activation of the last layer
};

/// Batched forward pass; rows are samples. Throws on input-width mismatch.
const Eigen::MatrixXd& forward(const MlpParams& net, const Eigen::MatrixXd& input,
                               ForwardCache& cache);
/// Single-sample convenience wrapper.
Eigen::VectorXd forward(const MlpParams& net, const Eigen::VectorXd& input);

/// Gradient holder, shape-congruent with the MlpParams it differentiates.
struct Grads {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> bias;

  void set_zero();
  bool all_finite() const;
};

Grads make_grads_like(const MlpParams& net);

/// Reverse pass for the scalar sum_rows(upstream . output).
/// upstream has one row per sample; result accumulates over the batch.
/// If input_grad is non-null it receives d/d(input), same shape as the input.
/// want_param_grads = false skips the weight/bias gradients (cheaper when only
/// the input gradient is needed, e.g. differentiating a critic w.r.t. actions).
void backward(const MlpParams& net, const ForwardCache& cache,
              const Eigen::MatrixXd& upstream, Grads& grads,
              Eigen::MatrixXd* input_grad = nullptr, bool want_param_grads = true);
Grads backward(const MlpParams& net, const ForwardCache& cache,
               const Eigen::MatrixXd& upstream,
               Eigen::MatrixXd* input_grad = nullptr);
/// Input gradient only.
void backward_input_only(const MlpParams& net, const ForwardCache& cache,
                         const Eigen::MatrixXd& upstream, Eigen::MatrixXd& input_grad);

/// Adam moments for one network. Accumulators mirror the parameter shapes.
struct AdamState {
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam_state(const MlpParams& net);

/// One bias-corrected Adam update in place. Rejects non-finite gradients
/// (throws std::runtime_error) without touching the parameters.
void adam_step(MlpParams& net, const Grads& grads, AdamState& state, double lr);

/// Scalar Adam, used for the entropy temperature.
struct AdamScalar {
  double m = 0.0;
  double v = 0.0;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  double update(double param, double grad, double lr);
};

/// target <- (1 - tau) * target + tau * online, elementwise.
void polyak_update(MlpParams& target, const MlpParams& online, double tau);

/// Compares backward() against central finite differences of the summed
/// output. Returns the worst relative error over the checked parameters.
/// max_params == 0 checks every parameter; otherwise an evenly strided
/// subset of that size.
double grad_check(const MlpParams& net, const Eigen::VectorXd& input, double h,
                  std::size_t max_params = 0);

/// Same, but against externally supplied analytic gradients (lets tests
/// verify that a corrupted gradient is flagged).
double grad_check_against(const MlpParams& net, const Eigen::VectorXd& input,
                          double h, const Grads& analytic,
                          std::size_t max_params = 0);

}  // namespace meq
