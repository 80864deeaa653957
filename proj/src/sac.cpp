#include "meq/sac.hpp"

#include <cmath>
#include <stdexcept>

namespace meq {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 * ln(2*pi)

Eigen::MatrixXd concat_cols(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows(), a.cols() + b.cols());
  out.leftCols(a.cols()) = a;
  out.rightCols(b.cols()) = b;
  return out;
}

}  // namespace

SacAgent::SacAgent(int obs_dim, int act_dim, const std::vector<int>& hidden, SacConfig cfg,
                   RngStream& init_stream)
    : obs_dim_(obs_dim), act_dim_(act_dim), cfg_(cfg) {
  // Single trunk, two heads: columns [0, A) are the mean, [A, 2A) the raw
  // log-std. Squashing happens at sampling time, so the output is identity.
  actor_ = make_mlp(obs_dim, hidden, 2 * act_dim, Activation::leaky_relu,
                    Activation::identity, init_stream);
  critic1_ = make_mlp(obs_dim + act_dim, hidden, 1, Activation::leaky_relu,
                      Activation::identity, init_stream);
  critic2_ = make_mlp(obs_dim + act_dim, hidden, 1, Activation::leaky_relu,
                      Activation::identity, init_stream);
  critic1_target_ = critic1_;
  critic2_target_ = critic2_;
  actor_adam_ = make_adam_state(actor_);
  critic1_adam_ = make_adam_state(critic1_);
  critic2_adam_ = make_adam_state(critic2_);
  log_alpha_ = std::log(cfg_.initial_alpha);
}

double SacAgent::alpha() const {
  return cfg_.entropy.mode == EntropyConfig::Mode::static_alpha ? cfg_.entropy.alpha0
                                                                : std::exp(log_alpha_);
}

namespace {

Eigen::MatrixXd draw_eps(Eigen::Index rows, int cols, RngStream& rng) {
  Eigen::MatrixXd eps(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) eps(r, c) = rng.normal();
  }
  return eps;
}

}  // namespace

PolicySampleBatch SacAgent::policy_sample_batch(const Eigen::MatrixXd& obs,
                                                RngStream& rng) const {
  ForwardCache cache;
  return policy_sample_batch(obs, rng, cache);
}

PolicySampleBatch SacAgent::policy_sample_batch(const Eigen::MatrixXd& obs, RngStream& rng,
                                                ForwardCache& cache) const {
  const Eigen::MatrixXd eps = draw_eps(obs.rows(), act_dim_, rng);
  return sample_with_eps_cached(obs, eps, cache);
}

PolicySampleBatch SacAgent::sample_with_eps(const Eigen::MatrixXd& obs,
                                            const Eigen::MatrixXd& eps) const {
  ForwardCache cache;
  return sample_with_eps_cached(obs, eps, cache);
}

PolicySampleBatch SacAgent::sample_with_eps_cached(const Eigen::MatrixXd& obs,
                                                   const Eigen::MatrixXd& eps,
                                                   ForwardCache& cache) const {
  const Eigen::MatrixXd& head = forward(actor_, obs, cache);
  const Eigen::Index n = obs.rows();

  PolicySampleBatch s;
  s.mean = head.leftCols(act_dim_);
  s.logstd_raw = head.rightCols(act_dim_);
  s.logstd = s.logstd_raw.array().min(kLogStdMax).max(kLogStdMin);
  s.sigma = s.logstd.array().exp();
  s.eps = eps;
  s.u = s.mean + s.sigma.cwiseProduct(s.eps);
  s.actions = s.u.array().tanh();

  // logp = sum_i [ log N(u_i; mu_i, sigma_i) - log(1 - tanh(u_i)^2 + eps) ]
  // with the Gaussian term written in terms of the fixed draw eps.
  s.logp.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    double lp = 0.0;
    for (int c = 0; c < act_dim_; ++c) {
      const double e = s.eps(r, c);
      const double a = s.actions(r, c);
      lp += -0.5 * e * e - s.logstd(r, c) - kHalfLog2Pi;
      lp -= std::log(1.0 - a * a + kSquashEps);
    }
    s.logp(r) = lp;
  }
  return s;
}

PolicySample SacAgent::policy_sample(const Eigen::VectorXd& obs, RngStream& rng) const {
  const PolicySampleBatch b = policy_sample_batch(obs.transpose(), rng);
  return {b.actions.row(0).transpose(), b.logp(0)};
}

Eigen::VectorXd SacAgent::mean_action(const Eigen::VectorXd& obs) const {
  const Eigen::VectorXd head = forward(actor_, obs);
  return head.head(act_dim_).array().tanh();
}

Eigen::VectorXd SacAgent::explore(const Eigen::VectorXd& obs, RngStream& rng) const {
  Eigen::VectorXd a = policy_sample(obs, rng).action;
  const double sigma_a = cfg_.entropy.explore_noise;
  if (sigma_a > 0.0) {
    for (int i = 0; i < a.size(); ++i) {
      a(i) = std::clamp(a(i) + rng.normal(0.0, sigma_a), -1.0, 1.0);
    }
  }
  return a;
}

Eigen::VectorXd SacAgent::target_values(const TransitionBatch& batch, double alpha,
                                        RngStream& rng) const {
  const PolicySampleBatch next = policy_sample_batch(batch.next_obs, rng);
  const Eigen::MatrixXd sa = concat_cols(batch.next_obs, next.actions);
  ForwardCache cache;
  const Eigen::VectorXd q1 = forward(critic1_target_, sa, cache).col(0);
  const Eigen::VectorXd q2 = forward(critic2_target_, sa, cache).col(0);

  Eigen::VectorXd y(batch.size());
  for (Eigen::Index r = 0; r < batch.size(); ++r) {
    const double soft_q = std::min(q1(r), q2(r)) - alpha * next.logp(r);
    y(r) = batch.rewards(r) + batch.bootstrap(r) * cfg_.gamma * soft_q;
  }
  return y;
}

double SacAgent::actor_loss_and_grads(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& eps,
                                      double alpha, Grads& grads,
                                      Eigen::VectorXd* logp_out) const {
  const Eigen::Index n = obs.rows();
  const double inv_n = 1.0 / static_cast<double>(n);

  const PolicySampleBatch pi = sample_with_eps_cached(obs, eps, actor_cache_);
  const Eigen::MatrixXd sa_pi = concat_cols(obs, pi.actions);
  const Eigen::VectorXd q1 = forward(critic1_, sa_pi, c1_cache_).col(0);
  const Eigen::VectorXd q2 = forward(critic2_, sa_pi, c2_cache_).col(0);

  double loss = 0.0;
  Eigen::MatrixXd up1 = Eigen::MatrixXd::Zero(n, 1);
  Eigen::MatrixXd up2 = Eigen::MatrixXd::Zero(n, 1);
  for (Eigen::Index r = 0; r < n; ++r) {
    loss += alpha * pi.logp(r) - std::min(q1(r), q2(r));
    // d(loss)/dq flows only through the selected critic.
    (q1(r) <= q2(r) ? up1(r, 0) : up2(r, 0)) = -inv_n;
  }
  loss *= inv_n;

  Eigen::MatrixXd in_grad1, in_grad2;
  backward_input_only(critic1_, c1_cache_, up1, in_grad1);
  backward_input_only(critic2_, c2_cache_, up2, in_grad2);
  const Eigen::MatrixXd grad_a =
      in_grad1.rightCols(act_dim_) + in_grad2.rightCols(act_dim_);

  // Chain to the Gaussian head. For the squashed density,
  // d(logp)/du = 2a(1-a^2)/(1-a^2+eps) and d(logp)/d(logstd) = -1 plus the
  // path through u; the clamp zeroes the log-std gradient outside its range.
  Eigen::MatrixXd grad_u(n, act_dim_);
  Eigen::MatrixXd grad_logstd(n, act_dim_);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (int c = 0; c < act_dim_; ++c) {
      const double a = pi.actions(r, c);
      const double one_m_a2 = 1.0 - a * a;
      const double dlogp_du = 2.0 * a * one_m_a2 / (one_m_a2 + kSquashEps);
      const double gu = grad_a(r, c) * one_m_a2 + (alpha * inv_n) * dlogp_du;
      grad_u(r, c) = gu;
      const bool clamped = pi.logstd_raw(r, c) < kLogStdMin || pi.logstd_raw(r, c) > kLogStdMax;
      grad_logstd(r, c) =
          clamped ? 0.0 : gu * pi.sigma(r, c) * pi.eps(r, c) - alpha * inv_n;
    }
  }
  const Eigen::MatrixXd upstream_actor = concat_cols(grad_u, grad_logstd);
  backward(actor_, actor_cache_, upstream_actor, grads);

  if (logp_out != nullptr) *logp_out = pi.logp;
  return loss;
}

double SacAgent::update_alpha(const Eigen::VectorXd& logp_batch) {
  if (cfg_.entropy.mode == EntropyConfig::Mode::static_alpha) return cfg_.entropy.alpha0;
  const double mean_entropy = -logp_batch.mean();
  const double a = std::exp(log_alpha_);
  // J(alpha) = alpha * (H - H0): pushes alpha down when entropy exceeds the
  // target and up when it falls short. Optimized in log space to keep alpha
  // positive.
  const double grad_log_alpha = a * (mean_entropy - cfg_.entropy.target_entropy);
  if (cfg_.alpha_lr > 0.0) {
    log_alpha_ = alpha_adam_.update(log_alpha_, grad_log_alpha, cfg_.alpha_lr);
  }
  return std::exp(log_alpha_);
}

SacLosses SacAgent::update(const TransitionBatch& batch, RngStream& rng) {
  update_count_ += 1;
  const Eigen::Index n = batch.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double a_now = alpha();

  SacLosses losses;

  // Critics regress to the entropy-regularized targets.
  const Eigen::VectorXd y = target_values(batch, a_now, rng);
  const Eigen::MatrixXd sa = concat_cols(batch.obs, batch.actions);
  auto critic_step = [&](MlpParams& critic, AdamState& adam, ForwardCache& cache,
                         Grads& grads) {
    const Eigen::VectorXd q = forward(critic, sa, cache).col(0);
    const Eigen::VectorXd err = q - y;
    const double loss = err.squaredNorm() * inv_n;
    const Eigen::MatrixXd upstream = (2.0 * inv_n) * err;
    backward(critic, cache, upstream, grads);
    if (cfg_.lr > 0.0) adam_step(critic, grads, adam, cfg_.lr);
    return loss;
  };
  losses.critic1 = critic_step(critic1_, critic1_adam_, c1_cache_, c1_grads_);
  losses.critic2 = critic_step(critic2_, critic2_adam_, c2_cache_, c2_grads_);

  // Actor: minimize mean(alpha * logp - min(Q1, Q2)) through the
  // reparameterized sample a = tanh(mu + sigma .* eps).
  const Eigen::MatrixXd eps = draw_eps(n, act_dim_, rng);
  Eigen::VectorXd logp;
  losses.actor = actor_loss_and_grads(batch.obs, eps, a_now, actor_grads_, &logp);
  if (cfg_.lr > 0.0) adam_step(actor_, actor_grads_, actor_adam_, cfg_.lr);

  losses.mean_entropy = -logp.mean();
  losses.alpha_loss = a_now * (losses.mean_entropy - cfg_.entropy.target_entropy);
  if (!std::isfinite(losses.critic1) || !std::isfinite(losses.critic2) ||
      !std::isfinite(losses.actor)) {
    throw std::runtime_error("sac update: non-finite loss (c1=" + std::to_string(losses.critic1) +
                             ", c2=" + std::to_string(losses.critic2) +
                             ", actor=" + std::to_string(losses.actor) + ")");
  }

  losses.alpha = update_alpha(logp);

  polyak_update(critic1_target_, critic1_, cfg_.tau);
  polyak_update(critic2_target_, critic2_, cfg_.tau);
  return losses;
}

}  // namespace meq
