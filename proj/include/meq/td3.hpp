#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "meq/net.hpp"
#include "meq/replay.hpp"
#include "meq/rng.hpp"

namespace meq {

struct Td3Config {
  double gamma = 0.99;
  double tau = 0.005;
  double target_noise = 0.2;   // sigma_t, added to the target action
  double noise_clip = 0.5;     // c
  double explore_noise = 0.2;  // sigma_a, external Gaussian on collected actions
  int policy_delay = 2;        // actor/targets update every d-th call
  double lr = 7e-4;
};

struct Td3Losses {
  double critic1 = 0.0;
  double critic2 = 0.0;
  std::optional<double> actor;  // present only on delayed-update calls
};

/// Deterministic-policy learner: tanh actor, twin critics with target copies,
/// clipped-double-Q targets with smoothing noise, delayed actor updates.
class Td3Agent {
 public:
  Td3Agent(int obs_dim, int act_dim, const std::vector<int>& hidden, Td3Config cfg,
           RngStream& init_stream);

  /// Noiseless evaluation action: actor(obs), already in [-1, 1].
  Eigen::VectorXd act(const Eigen::VectorXd& obs) const;
  /// Collection action: clamp(actor(obs) + N(0, sigma_a^2)).
  Eigen::VectorXd explore(const Eigen::VectorXd& obs, RngStream& noise) const;

  /// Bootstrap targets y = r + bootstrap * gamma * min(Q1', Q2')(s', a') with
  /// a' = clamp(actor'(s') + clip(eps, -c, c)).
  Eigen::VectorXd target_values(const TransitionBatch& batch, RngStream& rng) const;

  /// Actor objective -mean(Q1(s, actor(s))) and its parameter gradient;
  /// shared by the delayed update step and the gradient tests. Returns the loss.
  double actor_loss_and_grads(const Eigen::MatrixXd& obs, Grads& grads) const;

  /// One learner call: both critics regress to targets; every policy_delay-th
  /// call the actor ascends Q1 and all targets track. Throws on non-finite loss.
  Td3Losses update(const TransitionBatch& batch, RngStream& rng);

  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }
  const Td3Config& config() const { return cfg_; }
  std::uint64_t update_count() const { return update_count_; }
  void set_update_count(std::uint64_t n) { update_count_ = n; }

  MlpParams& actor() { return actor_; }
  MlpParams& critic1() { return critic1_; }
  MlpParams& critic2() { return critic2_; }
  MlpParams& actor_target() { return actor_target_; }
  MlpParams& critic1_target() { return critic1_target_; }
  MlpParams& critic2_target() { return critic2_target_; }
  AdamState& actor_adam() { return actor_adam_; }
  AdamState& critic1_adam() { return critic1_adam_; }
  AdamState& critic2_adam() { return critic2_adam_; }
  const MlpParams& actor() const { return actor_; }
  const MlpParams& critic1() const { return critic1_; }
  const MlpParams& critic2() const { return critic2_; }
  const MlpParams& actor_target() const { return actor_target_; }
  const MlpParams& critic1_target() const { return critic1_target_; }
  const MlpParams& critic2_target() const { return critic2_target_; }
  const AdamState& actor_adam() const { return actor_adam_; }
  const AdamState& critic1_adam() const { return critic1_adam_; }
  const AdamState& critic2_adam() const { return critic2_adam_; }

 private:
  int obs_dim_;
  int act_dim_;
  Td3Config cfg_;
  MlpParams actor_, critic1_, critic2_;
  MlpParams actor_target_, critic1_target_, critic2_target_;
  AdamState actor_adam_, critic1_adam_, critic2_adam_;
  std::uint64_t update_count_ = 0;

  // Scratch reused across updates to avoid reallocation in the hot path.
  mutable ForwardCache actor_cache_, c1_cache_, c2_cache_;
  mutable Grads actor_grads_, c1_grads_, c2_grads_;
};

}  // namespace meq
