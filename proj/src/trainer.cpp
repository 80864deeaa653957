#include "meq/trainer.hpp"

#include <cmath>
#include <stdexcept>

namespace meq {

std::string to_string(Algorithm a) { return a == Algorithm::td3 ? "td3" : "sac"; }

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "td3") return Algorithm::td3;
  if (s == "sac") return Algorithm::sac;
  throw std::invalid_argument("unknown algorithm '" + s + "' (expected td3 or sac)");
}

Profile profile_from_string(const std::string& s) {
  if (s == "desk") return Profile::desk;
  if (s == "paper") return Profile::paper;
  throw std::invalid_argument("unknown profile '" + s + "' (expected desk or paper)");
}

std::string to_string(Profile p) { return p == Profile::desk ? "desk" : "paper"; }

void ScenarioConfig::validate() const {
  if (name.empty()) throw std::invalid_argument("ScenarioConfig: empty name");
  bounds.validate();
  model.validate();
  if (total_steps < hp.warmup_steps) {
    throw std::invalid_argument("ScenarioConfig: total_steps < warmup_steps");
  }
  if (hp.batch_size < 1 || eval_interval < 1 || eval_episodes < 0 || policy_delay < 1) {
    throw std::invalid_argument("ScenarioConfig: invalid counts");
  }
  if (hidden.empty()) throw std::invalid_argument("ScenarioConfig: no hidden layers");
  // Physics substep must tile the agent period.
  const double agent_dt = 1.0 / hp.agent_hz;
  const double tiled = model.dt_phys * kPhysicsSubsteps;
  if (std::abs(agent_dt - tiled) > 1e-9) {
    throw std::invalid_argument("ScenarioConfig: dt_phys * substeps must equal 1/agent_hz");
  }
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {
      "small-td3",          "small-sac",           "large-td3-lownoise",
      "large-td3-highnoise", "large-sac-static",    "large-sac-dynamic-noise",
      "large-sac-dynamic"};
  return names;
}

ScenarioConfig preset(const std::string& name, Profile profile) {
  ScenarioConfig cfg;
  cfg.name = name;

  const bool small = name.rfind("small-", 0) == 0;
  cfg.bounds = small ? EnvBounds::small_env() : EnvBounds::large_env();

  if (name == "small-td3") {
    cfg.algorithm = Algorithm::td3;
    cfg.explore_noise = 0.2;
  } else if (name == "small-sac") {
    cfg.algorithm = Algorithm::sac;
    cfg.explore_noise = 0.0;
    cfg.entropy.mode = EntropyConfig::Mode::dynamic;
  } else if (name == "large-td3-lownoise") {
    cfg.algorithm = Algorithm::td3;
    cfg.explore_noise = 0.2;
  } else if (name == "large-td3-highnoise") {
    cfg.algorithm = Algorithm::td3;
    cfg.explore_noise = 0.5;
  } else if (name == "large-sac-static") {
    cfg.algorithm = Algorithm::sac;
    cfg.explore_noise = 0.0;
    cfg.entropy.mode = EntropyConfig::Mode::static_alpha;
    cfg.entropy.alpha0 = 0.2;
  } else if (name == "large-sac-dynamic-noise") {
    cfg.algorithm = Algorithm::sac;
    cfg.explore_noise = 0.2;
    cfg.entropy.mode = EntropyConfig::Mode::dynamic;
  } else if (name == "large-sac-dynamic") {
    cfg.algorithm = Algorithm::sac;
    cfg.explore_noise = 0.0;
    cfg.entropy.mode = EntropyConfig::Mode::dynamic;
  } else {
    std::string msg = "unknown scenario '" + name + "'; known scenarios:";
    for (const auto& n : preset_names()) msg += " " + n;
    throw std::invalid_argument(msg);
  }
  cfg.entropy.target_entropy = -static_cast<double>(kActDim);
  cfg.entropy.explore_noise = cfg.explore_noise;

  if (profile == Profile::desk) {
    cfg.hidden = {64, 64};
    cfg.total_steps = small ? 150'000 : 300'000;
    cfg.eval_interval = 25'000;
    cfg.eval_episodes = 3;
  } else {
    cfg.hidden = {400, 300};
    cfg.total_steps = 4'000'000;
    cfg.eval_interval = 100'000;
    cfg.eval_episodes = 5;
  }
  return cfg;
}

std::vector<Eigen::Vector3d> small_probes() {
  return {{-0.5, 0.5, 1.5}, {-0.8, 0.8, 1.4}, {-1.5, 1.5, 2.0}};
}

std::vector<Eigen::Vector3d> large_probes() {
  return {{-1.5, 1.5, 1.5}, {-2.5, 2.5, 2.5}, {3.5, 3.5, 3.0}};
}

EvalReport evaluate(const Policy& policy, const QuadModel& model, const EnvBounds& bounds,
                    const std::vector<Eigen::Vector3d>& inits, int max_steps,
                    bool record_trajectories) {
  EvalReport report;
  for (const Eigen::Vector3d& init : inits) {
    HoverEnv env(model, bounds, RngStream(0), max_steps);
    Eigen::VectorXd obs = env.reset_at(init);

    EvalEpisode ep;
    ep.init = init;
    const double agent_dt = model.dt_phys * kPhysicsSubsteps;
    while (true) {
      const Eigen::VectorXd action = policy(obs);
      const StepOutcome out = env.step(action);
      ep.episode_return += out.reward;
      ep.steps += 1;
      if (record_trajectories) {
        TrajectoryPoint p;
        p.step = ep.steps;
        p.t = ep.steps * agent_dt;
        p.position = env.state().position;
        p.rpy = euler_angles(env.state());
        p.velocity = env.state().velocity;
        p.angular_velocity = env.state().angular_velocity;
        p.action = action.head<4>();
        p.reward = out.reward;
        p.error = euclidean_error(bounds.target - env.state().position);
        ep.trajectory.push_back(p);
      }
      obs = out.observation;
      if (out.end != EndKind::running) {
        ep.crashed = (out.end == EndKind::terminated);
        break;
      }
    }
    ep.final_error = euclidean_error(bounds.target - env.state().position);
    report.episodes.push_back(std::move(ep));
  }
  return report;
}

Trainer::Trainer(ScenarioConfig cfg)
    : cfg_(std::move(cfg)),
      action_stream_(RngStream(cfg_.seed).split("action")),
      update_stream_(RngStream(cfg_.seed).split("update")),
      eval_stream_(RngStream(cfg_.seed).split("eval")),
      env_(cfg_.model, cfg_.bounds, RngStream(cfg_.seed).split("env"), cfg_.hp.max_episode_steps),
      replay_(cfg_.replay_capacity(), kObsDim, kActDim, cfg_.replay_precision),
      wall_start_(std::chrono::steady_clock::now()) {
  cfg_.validate();
  RngStream init_stream = RngStream(cfg_.seed).split("init");
  if (cfg_.algorithm == Algorithm::td3) {
    Td3Config tc;
    tc.gamma = cfg_.hp.gamma;
    tc.tau = cfg_.hp.tau;
    tc.target_noise = cfg_.hp.target_noise;
    tc.noise_clip = cfg_.hp.noise_clip;
    tc.explore_noise = cfg_.explore_noise;
    tc.policy_delay = cfg_.policy_delay;
    tc.lr = cfg_.hp.lr;
    td3_.emplace(kObsDim, kActDim, cfg_.hidden, tc, init_stream);
  } else {
    SacConfig sc;
    sc.gamma = cfg_.hp.gamma;
    sc.tau = cfg_.hp.tau;
    sc.lr = cfg_.hp.lr;
    sc.alpha_lr = cfg_.hp.lr;
    sc.entropy = cfg_.entropy;
    sc.entropy.explore_noise = cfg_.explore_noise;
    sac_.emplace(kObsDim, kActDim, cfg_.hidden, sc, init_stream);
  }
  next_eval_mark_ = cfg_.eval_interval;
}

double Trainer::wall_seconds() const {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start_).count();
}

double Trainer::rolling_mean() const {
  if (recent_returns_.empty()) return 0.0;
  double s = 0.0;
  for (double r : recent_returns_) s += r;
  return s / static_cast<double>(recent_returns_.size());
}

Eigen::VectorXd Trainer::policy_action(const Eigen::VectorXd& obs) const {
  return td3_ ? td3_->act(obs) : sac_->mean_action(obs);
}

Policy Trainer::frozen_policy() const {
  if (td3_) {
    const MlpParams actor = td3_->actor();  // frozen copy
    return [actor](const Eigen::VectorXd& obs) { return forward(actor, obs); };
  }
  const MlpParams actor = sac_->actor();
  const int act_dim = sac_->act_dim();
  return [actor, act_dim](const Eigen::VectorXd& obs) -> Eigen::VectorXd {
    const Eigen::VectorXd head = forward(actor, obs);
    return head.head(act_dim).array().tanh();
  };
}

void Trainer::step_once(RunSink& sink) {
  if (!episode_open_) {
    obs_ = env_.reset();
    episode_open_ = true;
    episode_return_ = 0.0;
    episode_len_ = 0;
    c1_sum_ = c2_sum_ = actor_sum_ = 0.0;
    loss_count_ = actor_loss_count_ = 0;
  }

  Eigen::VectorXd action(kActDim);
  if (env_step_ < cfg_.hp.warmup_steps) {
    for (int i = 0; i < kActDim; ++i) action(i) = action_stream_.uniform(-1.0, 1.0);
  } else if (td3_) {
    action = td3_->explore(obs_, action_stream_);
  } else {
    action = sac_->explore(obs_, action_stream_);
  }

  const StepOutcome out = env_.step(action);
  env_step_ += 1;
  episode_len_ += 1;
  episode_return_ += out.reward;

  Transition t;
  t.obs = obs_;
  t.action = action;
  t.reward = out.reward;
  t.next_obs = out.observation;
  t.bootstrap = (out.end != EndKind::terminated);
  replay_.push(t);

  obs_ = out.observation;
  if (out.end != EndKind::running) finish_episode(sink, out.end);
}

void Trainer::finish_episode(RunSink& sink, EndKind /*end*/) {
  episode_ += 1;

  // Training frequency is one episode: one update call per collected step,
  // once learning has started.
  if (env_step_ > cfg_.hp.warmup_steps &&
      replay_.size() >= static_cast<std::size_t>(cfg_.hp.batch_size)) {
    for (std::uint64_t k = 0; k < episode_len_; ++k) {
      const TransitionBatch batch = replay_.sample(cfg_.hp.batch_size, update_stream_);
      if (td3_) {
        const Td3Losses l = td3_->update(batch, update_stream_);
        c1_sum_ += l.critic1;
        c2_sum_ += l.critic2;
        loss_count_ += 1;
        if (l.actor) {
          actor_sum_ += *l.actor;
          actor_loss_count_ += 1;
        }
      } else {
        const SacLosses l = sac_->update(batch, update_stream_);
        c1_sum_ += l.critic1;
        c2_sum_ += l.critic2;
        actor_sum_ += l.actor;
        loss_count_ += 1;
        actor_loss_count_ += 1;
        last_entropy_ = l.mean_entropy;
      }
    }
  }

  recent_returns_.push_back(episode_return_);
  if (recent_returns_.size() > 100) recent_returns_.pop_front();

  TrainLogRow row;
  row.env_step = env_step_;
  row.episode = episode_;
  row.episode_return = episode_return_;
  row.return_mean_100 = rolling_mean();
  if (sac_) {
    row.alpha = sac_->alpha();
    row.mean_entropy = last_entropy_;
  }
  if (loss_count_ > 0) {
    row.critic1_loss = c1_sum_ / static_cast<double>(loss_count_);
    row.critic2_loss = c2_sum_ / static_cast<double>(loss_count_);
  }
  if (actor_loss_count_ > 0) {
    row.actor_loss = actor_sum_ / static_cast<double>(actor_loss_count_);
  }
  row.wall_time_s = wall_seconds();
  sink.on_train_row(row);

  if (env_step_ >= next_eval_mark_) periodic_eval_and_checkpoint(sink);
  episode_open_ = false;
}

void Trainer::periodic_eval_and_checkpoint(RunSink& sink) {
  if (cfg_.eval_episodes > 0) {
    std::vector<Eigen::Vector3d> inits;
    inits.reserve(cfg_.eval_episodes);
    for (int i = 0; i < cfg_.eval_episodes; ++i) {
      inits.emplace_back(eval_stream_.uniform(cfg_.bounds.x_min, cfg_.bounds.x_max),
                         eval_stream_.uniform(cfg_.bounds.y_min, cfg_.bounds.y_max),
                         eval_stream_.uniform(cfg_.bounds.z_min, cfg_.bounds.z_max));
    }
    EvalReport report = evaluate(frozen_policy(), cfg_.model, cfg_.bounds, inits,
                                 cfg_.hp.max_episode_steps, false);
    report.env_step = env_step_;
    sink.on_eval(report);
  }
  sink.on_checkpoint(make_checkpoint());
  next_eval_mark_ = (env_step_ / cfg_.eval_interval + 1) * cfg_.eval_interval;
}

void Trainer::run_steps(std::uint64_t n, RunSink& sink) {
  for (std::uint64_t i = 0; i < n && env_step_ < cfg_.total_steps; ++i) step_once(sink);
}

void Trainer::run_to_boundary(std::uint64_t target_step, RunSink& sink) {
  while (env_step_ < cfg_.total_steps && (episode_open_ || env_step_ < target_step)) {
    step_once(sink);
    if (!episode_open_ && env_step_ >= target_step) break;
  }
}

void Trainer::run(RunSink& sink) {
  while (env_step_ < cfg_.total_steps) step_once(sink);
}

CheckpointState Trainer::make_checkpoint() const {
  CheckpointState s;
  s.env_step = env_step_;
  s.episode = episode_;
  if (td3_) {
    const Td3Agent& a = *td3_;
    s.agent_update_count = a.update_count();
    s.nets = {{"actor", a.actor()},
              {"critic1", a.critic1()},
              {"critic2", a.critic2()},
              {"actor_target", a.actor_target()},
              {"critic1_target", a.critic1_target()},
              {"critic2_target", a.critic2_target()}};
    s.adams = {{"actor", a.actor_adam()},
               {"critic1", a.critic1_adam()},
               {"critic2", a.critic2_adam()}};
  } else {
    const SacAgent& a = *sac_;
    s.agent_update_count = a.update_count();
    s.nets = {{"actor", a.actor()},
              {"critic1", a.critic1()},
              {"critic2", a.critic2()},
              {"critic1_target", a.critic1_target()},
              {"critic2_target", a.critic2_target()}};
    s.adams = {{"actor", a.actor_adam()},
               {"critic1", a.critic1_adam()},
               {"critic2", a.critic2_adam()}};
    s.has_log_alpha = true;
    s.log_alpha = a.log_alpha();
    s.log_alpha_adam = a.alpha_adam();
  }
  const RngStream& env_rng = env_.reset_stream();
  s.rng_streams = {{"env", env_rng.key(), env_rng.counter()},
                   {"action", action_stream_.key(), action_stream_.counter()},
                   {"update", update_stream_.key(), update_stream_.counter()},
                   {"eval", eval_stream_.key(), eval_stream_.counter()}};
  s.recent_returns.assign(recent_returns_.begin(), recent_returns_.end());
  return s;
}

void Trainer::restore(const CheckpointState& s) {
  auto find_net = [&](const std::string& name) -> const MlpParams& {
    for (const auto& n : s.nets) {
      if (n.name == name) return n.params;
    }
    throw std::invalid_argument("checkpoint missing network '" + name + "'");
  };
  auto find_adam = [&](const std::string& name) -> const AdamState& {
    for (const auto& a : s.adams) {
      if (a.name == name) return a.state;
    }
    throw std::invalid_argument("checkpoint missing Adam state '" + name + "'");
  };

  if (td3_) {
    Td3Agent& a = *td3_;
    a.actor() = find_net("actor");
    a.critic1() = find_net("critic1");
    a.critic2() = find_net("critic2");
    a.actor_target() = find_net("actor_target");
    a.critic1_target() = find_net("critic1_target");
    a.critic2_target() = find_net("critic2_target");
    a.actor_adam() = find_adam("actor");
    a.critic1_adam() = find_adam("critic1");
    a.critic2_adam() = find_adam("critic2");
    a.set_update_count(s.agent_update_count);
  } else {
    SacAgent& a = *sac_;
    a.actor() = find_net("actor");
    a.critic1() = find_net("critic1");
    a.critic2() = find_net("critic2");
    a.critic1_target() = find_net("critic1_target");
    a.critic2_target() = find_net("critic2_target");
    a.actor_adam() = find_adam("actor");
    a.critic1_adam() = find_adam("critic1");
    a.critic2_adam() = find_adam("critic2");
    if (!s.has_log_alpha) throw std::invalid_argument("checkpoint missing log_alpha for sac");
    a.set_log_alpha(s.log_alpha);
    a.alpha_adam() = s.log_alpha_adam;
    a.set_update_count(s.agent_update_count);
  }

  for (const auto& r : s.rng_streams) {
    const RngStream restored = RngStream::from_state(r.key, r.counter);
    if (r.name == "env") {
      env_.set_reset_stream(restored);
    } else if (r.name == "action") {
      action_stream_ = restored;
    } else if (r.name == "update") {
      update_stream_ = restored;
    } else if (r.name == "eval") {
      eval_stream_ = restored;
    }
  }

  env_step_ = s.env_step;
  episode_ = s.episode;
  recent_returns_.assign(s.recent_returns.begin(), s.recent_returns.end());
  next_eval_mark_ = (env_step_ / cfg_.eval_interval + 1) * cfg_.eval_interval;
  episode_open_ = false;
  last_alpha_.reset();
  last_entropy_.reset();
  wall_start_ = std::chrono::steady_clock::now();
}

void run_scenario(const ScenarioConfig& cfg, RunSink& sink) {
  Trainer trainer(cfg);
  trainer.run(sink);
  sink.on_checkpoint(trainer.make_checkpoint());
}

}  // namespace meq
