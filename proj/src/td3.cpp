#include "meq/td3.hpp"

#include <cmath>
#include <stdexcept>

namespace meq {

namespace {

Eigen::MatrixXd concat_cols(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows(), a.cols() + b.cols());
  out.leftCols(a.cols()) = a;
  out.rightCols(b.cols()) = b;
  return out;
}

}  // namespace

Td3Agent::Td3Agent(int obs_dim, int act_dim, const std::vector<int>& hidden, Td3Config cfg,
                   RngStream& init_stream)
    : obs_dim_(obs_dim), act_dim_(act_dim), cfg_(cfg) {
  actor_ = make_mlp(obs_dim, hidden, act_dim, Activation::leaky_relu, Activation::tanh,
                    init_stream);
  critic1_ = make_mlp(obs_dim + act_dim, hidden, 1, Activation::leaky_relu,
                      Activation::identity, init_stream);
  critic2_ = make_mlp(obs_dim + act_dim, hidden, 1, Activation::leaky_relu,
                      Activation::identity, init_stream);
  actor_target_ = actor_;
  critic1_target_ = critic1_;
  critic2_target_ = critic2_;
  actor_adam_ = make_adam_state(actor_);
  critic1_adam_ = make_adam_state(critic1_);
  critic2_adam_ = make_adam_state(critic2_);
}

Eigen::VectorXd Td3Agent::act(const Eigen::VectorXd& obs) const {
  return forward(actor_, obs);
}

Eigen::VectorXd Td3Agent::explore(const Eigen::VectorXd& obs, RngStream& noise) const {
  Eigen::VectorXd a = act(obs);
  for (int i = 0; i < a.size(); ++i) {
    a(i) = std::clamp(a(i) + noise.normal(0.0, cfg_.explore_noise), -1.0, 1.0);
  }
  return a;
}

Eigen::VectorXd Td3Agent::target_values(const TransitionBatch& batch, RngStream& rng) const {
  const Eigen::Index n = batch.size();

  ForwardCache cache;
  Eigen::MatrixXd next_action = forward(actor_target_, batch.next_obs, cache);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < next_action.cols(); ++c) {
      const double eps = std::clamp(rng.normal(0.0, cfg_.target_noise), -cfg_.noise_clip,
                                    cfg_.noise_clip);
      next_action(r, c) = std::clamp(next_action(r, c) + eps, -1.0, 1.0);
    }
  }

  const Eigen::MatrixXd sa = concat_cols(batch.next_obs, next_action);
  const Eigen::VectorXd q1 = forward(critic1_target_, sa, cache).col(0);
  const Eigen::VectorXd q2 = forward(critic2_target_, sa, cache).col(0);

  Eigen::VectorXd y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    y(r) = batch.rewards(r) +
           batch.bootstrap(r) * cfg_.gamma * std::min(q1(r), q2(r));
  }
  return y;
}

Td3Losses Td3Agent::update(const TransitionBatch& batch, RngStream& rng) {
  update_count_ += 1;
  const Eigen::Index n = batch.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  const Eigen::VectorXd y = target_values(batch, rng);
  const Eigen::MatrixXd sa = concat_cols(batch.obs, batch.actions);

  Td3Losses losses;
  auto critic_step = [&](MlpParams& critic, AdamState& adam, ForwardCache& cache,
                         Grads& grads) {
    const Eigen::VectorXd q = forward(critic, sa, cache).col(0);
    const Eigen::VectorXd err = q - y;
    const double loss = err.squaredNorm() * inv_n;
    // d(mean squared error)/dq
    const Eigen::MatrixXd upstream = (2.0 * inv_n) * err;
    backward(critic, cache, upstream, grads);
    if (cfg_.lr > 0.0) adam_step(critic, grads, adam, cfg_.lr);  // lr = 0: diagnostics only
    return loss;
  };
  losses.critic1 = critic_step(critic1_, critic1_adam_, c1_cache_, c1_grads_);
  losses.critic2 = critic_step(critic2_, critic2_adam_, c2_cache_, c2_grads_);
  if (!std::isfinite(losses.critic1) || !std::isfinite(losses.critic2)) {
    throw std::runtime_error("td3 update: non-finite critic loss (c1=" +
                             std::to_string(losses.critic1) + ", c2=" +
                             std::to_string(losses.critic2) + ")");
  }

  if (update_count_ % static_cast<std::uint64_t>(cfg_.policy_delay) == 0) {
    const double actor_loss = actor_loss_and_grads(batch.obs, actor_grads_);
    if (cfg_.lr > 0.0) adam_step(actor_, actor_grads_, actor_adam_, cfg_.lr);

    if (!std::isfinite(actor_loss)) {
      throw std::runtime_error("td3 update: non-finite actor loss");
    }
    losses.actor = actor_loss;

    polyak_update(actor_target_, actor_, cfg_.tau);
    polyak_update(critic1_target_, critic1_, cfg_.tau);
    polyak_update(critic2_target_, critic2_, cfg_.tau);
  }
  return losses;
}

double Td3Agent::actor_loss_and_grads(const Eigen::MatrixXd& obs, Grads& grads) const {
  // Ascend mean Q1(s, actor(s)): gradient flows through the critic input's
  // action columns into the actor.
  const Eigen::Index n = obs.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  const Eigen::MatrixXd& a_pi = forward(actor_, obs, actor_cache_);
  const Eigen::MatrixXd sa_pi = concat_cols(obs, a_pi);
  const Eigen::VectorXd q = forward(critic1_, sa_pi, c1_cache_).col(0);

  const Eigen::MatrixXd upstream_q = Eigen::MatrixXd::Constant(n, 1, -inv_n);
  Eigen::MatrixXd input_grad;
  backward_input_only(critic1_, c1_cache_, upstream_q, input_grad);
  const Eigen::MatrixXd upstream_actor = input_grad.rightCols(act_dim_);
  backward(actor_, actor_cache_, upstream_actor, grads);
  return -q.mean();
}

}  // namespace meq
