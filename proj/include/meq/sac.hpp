#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "meq/net.hpp"
#include "meq/replay.hpp"
#include "meq/rng.hpp"

namespace meq {

/// Temperature handling: a fixed alpha, or gradient-tuned alpha tracking a
/// target entropy. explore_noise adds external Gaussian noise on top of the
/// policy's own sampling (the noise-augmented scenario); 0 disables it.
struct EntropyConfig {
  enum class Mode { static_alpha, dynamic };
  Mode mode = Mode::dynamic;
  double alpha0 = 0.2;          // static mode temperature
  double target_entropy = -4.0; // dynamic mode floor, -dim(A) by convention
  double explore_noise = 0.0;   // sigma_a
};

struct SacConfig {
  double gamma = 0.99;
  double tau = 0.005;
  double lr = 7e-4;
  double alpha_lr = 7e-4;
  double initial_alpha = 1.0;   // dynamic mode starting temperature
  EntropyConfig entropy;
};

struct PolicySample {
  Eigen::VectorXd action;
  double logp = 0.0;
};

/// Batched sample with the intermediates the actor update needs.
struct PolicySampleBatch {
  Eigen::MatrixXd mean;        // mu
  Eigen::MatrixXd logstd_raw;  // before clamping
  Eigen::MatrixXd logstd;      // clamped to [-20, 2]
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd eps;         // the reparameterization draw
  Eigen::MatrixXd u;           // mu + sigma .* eps
  Eigen::MatrixXd actions;     // tanh(u)
  Eigen::VectorXd logp;        // per-row log-density of the squashed action
};

struct SacLosses {
  double critic1 = 0.0;
  double critic2 = 0.0;
  double actor = 0.0;
  double alpha_loss = 0.0;
  double alpha = 0.0;
  double mean_entropy = 0.0;  // mean of -logp over the actor batch
};

/// Stochastic-policy learner: tanh-squashed Gaussian actor, twin critics with
/// entropy-regularized targets, and optional automatic temperature tuning.
class SacAgent {
 public:
  SacAgent(int obs_dim, int act_dim, const std::vector<int>& hidden, SacConfig cfg,
           RngStream& init_stream);

  /// Reparameterized sample and its squashed log-density.
  PolicySample policy_sample(const Eigen::VectorXd& obs, RngStream& rng) const;
  PolicySampleBatch policy_sample_batch(const Eigen::MatrixXd& obs, RngStream& rng) const;
  /// Same, filling the caller's cache so a backward pass can follow.
  PolicySampleBatch policy_sample_batch(const Eigen::MatrixXd& obs, RngStream& rng,
                                        ForwardCache& cache) const;

  /// Deterministic evaluation action tanh(mu(obs)).
  Eigen::VectorXd mean_action(const Eigen::VectorXd& obs) const;

  /// Collection action: a policy sample, plus clamped external noise when
  /// explore_noise > 0.
  Eigen::VectorXd explore(const Eigen::VectorXd& obs, RngStream& rng) const;

  /// y = r + bootstrap * gamma * (min(Q1', Q2')(s', a') - alpha * logp'), with
  /// (a', logp') drawn from the current policy at s'.
  Eigen::VectorXd target_values(const TransitionBatch& batch, double alpha,
                                RngStream& rng) const;

  /// Deterministic replay of a sample from a fixed reparameterization draw.
  PolicySampleBatch sample_with_eps(const Eigen::MatrixXd& obs,
                                    const Eigen::MatrixXd& eps) const;

  /// Actor objective mean(alpha * logp - min(Q1,Q2)) and its parameter
  /// gradient at a fixed draw; the update path and the gradient tests share
  /// this code. Returns the loss.
  double actor_loss_and_grads(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& eps,
                              double alpha, Grads& grads,
                              Eigen::VectorXd* logp_out = nullptr) const;

  /// One Adam step on log-alpha against J = alpha * (mean entropy - target).
  /// Static mode returns alpha0 untouched. Returns the resulting alpha.
  double update_alpha(const Eigen::VectorXd& logp_batch);

  /// Full learner call: critics, actor, temperature, target tracking.
  SacLosses update(const TransitionBatch& batch, RngStream& rng);

  double alpha() const;
  double log_alpha() const { return log_alpha_; }
  void set_log_alpha(double v) { log_alpha_ = v; }
  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }
  const SacConfig& config() const { return cfg_; }
  std::uint64_t update_count() const { return update_count_; }
  void set_update_count(std::uint64_t n) { update_count_ = n; }

  MlpParams& actor() { return actor_; }
  MlpParams& critic1() { return critic1_; }
  MlpParams& critic2() { return critic2_; }
  MlpParams& critic1_target() { return critic1_target_; }
  MlpParams& critic2_target() { return critic2_target_; }
  AdamState& actor_adam() { return actor_adam_; }
  AdamState& critic1_adam() { return critic1_adam_; }
  AdamState& critic2_adam() { return critic2_adam_; }
  AdamScalar& alpha_adam() { return alpha_adam_; }
  const MlpParams& actor() const { return actor_; }
  const MlpParams& critic1() const { return critic1_; }
  const MlpParams& critic2() const { return critic2_; }
  const MlpParams& critic1_target() const { return critic1_target_; }
  const MlpParams& critic2_target() const { return critic2_target_; }
  const AdamState& actor_adam() const { return actor_adam_; }
  const AdamState& critic1_adam() const { return critic1_adam_; }
  const AdamState& critic2_adam() const { return critic2_adam_; }
  const AdamScalar& alpha_adam() const { return alpha_adam_; }

  static constexpr double kLogStdMin = -20.0;
  static constexpr double kLogStdMax = 2.0;
  static constexpr double kSquashEps = 1e-6;

 private:
  PolicySampleBatch sample_with_eps_cached(const Eigen::MatrixXd& obs,
                                           const Eigen::MatrixXd& eps,
                                           ForwardCache& cache) const;

  int obs_dim_;
  int act_dim_;
  SacConfig cfg_;
  MlpParams actor_, critic1_, critic2_;
  MlpParams critic1_target_, critic2_target_;
  AdamState actor_adam_, critic1_adam_, critic2_adam_;
  double log_alpha_ = 0.0;
  AdamScalar alpha_adam_;
  std::uint64_t update_count_ = 0;

  mutable ForwardCache actor_cache_, c1_cache_, c2_cache_;
  mutable Grads actor_grads_, c1_grads_, c2_grads_;
};

}  // namespace meq
