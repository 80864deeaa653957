#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "meq/net.hpp"
#include "meq/quad.hpp"

namespace meq {

enum class Algorithm { td3, sac };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

/// One line of the training log, emitted per completed episode.
struct TrainLogRow {
  std::uint64_t env_step = 0;
  std::uint64_t episode = 0;
  double episode_return = 0.0;
  double return_mean_100 = 0.0;
  std::optional<double> alpha;         // SAC only
  std::optional<double> mean_entropy;  // SAC only
  std::optional<double> critic1_loss;  // absent before learning starts
  std::optional<double> critic2_loss;
  std::optional<double> actor_loss;
  double wall_time_s = 0.0;
};

struct TrajectoryPoint {
  int step = 0;
  double t = 0.0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d rpy = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d angular_velocity = Eigen::Vector3d::Zero();
  Eigen::Vector4d action = Eigen::Vector4d::Zero();
  double reward = 0.0;
  double error = 0.0;
};

/// One deterministic evaluation episode from a fixed initial position.
struct EvalEpisode {
  Eigen::Vector3d init = Eigen::Vector3d::Zero();
  double final_error = 0.0;
  double episode_return = 0.0;
  bool crashed = false;
  int steps = 0;
  std::vector<TrajectoryPoint> trajectory;  // filled only when requested
};

struct EvalReport {
  std::uint64_t env_step = 0;  // training step the evaluation ran at
  std::vector<EvalEpisode> episodes;
};

struct NamedParams {
  std::string name;
  MlpParams params;
};

struct NamedAdam {
  std::string name;
  AdamState state;
};

struct NamedRngState {
  std::string name;
  std::uint64_t key = 0;
  std::uint64_t counter = 0;
};

struct ScenarioConfig;  // defined in trainer.hpp

/// Everything a checkpoint carries, as plain values. Serialization to the
/// on-disk format lives with the CLI; the trainer itself never touches files.
/// Replay contents are deliberately not part of a checkpoint.
struct CheckpointState {
  std::uint64_t env_step = 0;
  std::uint64_t episode = 0;
  std::uint64_t agent_update_count = 0;
  std::vector<NamedParams> nets;
  std::vector<NamedAdam> adams;
  bool has_log_alpha = false;
  double log_alpha = 0.0;
  AdamScalar log_alpha_adam;
  std::vector<NamedRngState> rng_streams;
  std::vector<double> recent_returns;  // rolling-mean window tail
};

/// Receives everything a run produces. Implementations that persist to disk
/// live with the CLI; tests use in-memory sinks.
class RunSink {
 public:
  virtual ~RunSink() = default;
  virtual void on_train_row(const TrainLogRow&) {}
  virtual void on_eval(const EvalReport&) {}
  virtual void on_checkpoint(const CheckpointState&) {}
};

}  // namespace meq
