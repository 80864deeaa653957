#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "meq/env.hpp"
#include "meq/replay.hpp"
#include "meq/run_io.hpp"
#include "meq/sac.hpp"
#include "meq/td3.hpp"

namespace meq {

/// Shared learner hyperparameters. The defaults are the working set for both
/// algorithms; scenario presets override per experiment.
struct Hyperparams {
  double lr = 7e-4;
  std::size_t buffer_capacity = 1'000'000;
  std::uint64_t warmup_steps = 10'000;
  int batch_size = 256;
  double tau = 0.005;
  double gamma = 0.99;
  double target_noise = 0.2;  // sigma_t (TD3 target smoothing)
  double explore_noise = 0.2; // sigma_a default
  double noise_clip = 0.5;
  double agent_hz = 50.0;
  int max_episode_steps = 502;
};

enum class Profile { desk, paper };

Profile profile_from_string(const std::string& s);
std::string to_string(Profile p);

/// One named experiment: bounds, algorithm, noise, entropy mode, seed, budget.
struct ScenarioConfig {
  std::string name;
  Algorithm algorithm = Algorithm::sac;
  EnvBounds bounds;
  double explore_noise = 0.0;  // sigma_a for this scenario
  EntropyConfig entropy;       // SAC only
  std::uint64_t total_steps = 150'000;
  std::uint64_t seed = 1;
  std::uint64_t eval_interval = 25'000;
  int eval_episodes = 3;
  Hyperparams hp;
  std::vector<int> hidden{64, 64};
  QuadModel model;
  int policy_delay = 2;  // TD3 only
  StoragePrecision replay_precision = StoragePrecision::f64;

  void validate() const;
  std::size_t replay_capacity() const { return hp.buffer_capacity; }
};

/// The seven named experiments. Throws std::invalid_argument listing the
/// known names when the name is unknown.
ScenarioConfig preset(const std::string& name, Profile profile = Profile::desk);
const std::vector<std::string>& preset_names();

/// Deterministic evaluation probes used by the figures-style reports.
std::vector<Eigen::Vector3d> small_probes();
std::vector<Eigen::Vector3d> large_probes();

using Policy = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Runs one noiseless episode per initial position with a frozen policy.
EvalReport evaluate(const Policy& policy, const QuadModel& model, const EnvBounds& bounds,
                    const std::vector<Eigen::Vector3d>& inits,
                    int max_steps = kMaxEpisodeSteps, bool record_trajectories = false);

/// Episode-loop orchestrator: warm-up collection, per-episode update bursts,
/// periodic deterministic evaluation, checkpoint emission. Fully determined
/// by the scenario seed; wall time is the only nondeterministic output field.
class Trainer {
 public:
  explicit Trainer(ScenarioConfig cfg);

  /// Run until total_steps env steps have been taken.
  void run(RunSink& sink);
  /// Advance exactly n env steps (or fewer if the budget ends).
  void run_steps(std::uint64_t n, RunSink& sink);
  /// Advance until an episode closes at env_step >= target (or budget ends).
  void run_to_boundary(std::uint64_t target_step, RunSink& sink);

  CheckpointState make_checkpoint() const;
  void restore(const CheckpointState& state);

  /// Deterministic action for the current policy (TD3 actor output,
  /// SAC squashed mean).
  Eigen::VectorXd policy_action(const Eigen::VectorXd& obs) const;
  Policy frozen_policy() const;

  std::uint64_t env_step() const { return env_step_; }
  std::uint64_t episode() const { return episode_; }
  double rolling_mean() const;
  const ScenarioConfig& config() const { return cfg_; }
  ReplayBuffer& replay() { return replay_; }
  HoverEnv& env() { return env_; }
  const Td3Agent* td3() const { return td3_ ? &*td3_ : nullptr; }
  const SacAgent* sac() const { return sac_ ? &*sac_ : nullptr; }
  Td3Agent* td3() { return td3_ ? &*td3_ : nullptr; }
  SacAgent* sac() { return sac_ ? &*sac_ : nullptr; }

 private:
  void step_once(RunSink& sink);
  void finish_episode(RunSink& sink, EndKind end);
  void periodic_eval_and_checkpoint(RunSink& sink);
  double wall_seconds() const;

  ScenarioConfig cfg_;
  RngStream action_stream_, update_stream_, eval_stream_;
  HoverEnv env_;  // owns the reset stream
  ReplayBuffer replay_;
  std::optional<Td3Agent> td3_;
  std::optional<SacAgent> sac_;

  std::uint64_t env_step_ = 0;
  std::uint64_t episode_ = 0;
  bool episode_open_ = false;
  Eigen::VectorXd obs_;
  double episode_return_ = 0.0;
  std::uint64_t episode_len_ = 0;
  std::deque<double> recent_returns_;
  std::uint64_t next_eval_mark_ = 0;
  std::chrono::steady_clock::time_point wall_start_;

  // Loss accumulation over the current episode's update burst.
  double c1_sum_ = 0.0, c2_sum_ = 0.0, actor_sum_ = 0.0;
  std::uint64_t loss_count_ = 0, actor_loss_count_ = 0;
  std::optional<double> last_alpha_, last_entropy_;
};

/// Convenience wrapper: construct, run to completion, emit a final checkpoint.
void run_scenario(const ScenarioConfig& cfg, RunSink& sink);

}  // namespace meq
