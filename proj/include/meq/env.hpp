#pragma once

#include <Eigen/Dense>

#include "meq/quad.hpp"
#include "meq/rng.hpp"

namespace meq {

inline constexpr int kObsDim = 12;
inline constexpr int kActDim = 4;
inline constexpr int kMaxEpisodeSteps = 502;
inline constexpr int kPhysicsSubsteps = 5;  // 250 Hz physics under a 50 Hz agent

/// Initial-position sampling box and the hover target.
struct EnvBounds {
  double x_min = -0.5, x_max = 0.5;
  double y_min = -0.5, y_max = 0.5;
  double z_min = 0.5, z_max = 1.5;
  Eigen::Vector3d target{0.0, 0.0, 1.0};

  static EnvBounds small_env();
  static EnvBounds large_env();
  void validate() const;
};

enum class EndKind { running, truncated, terminated };

struct StepOutcome {
  Eigen::VectorXd observation;  // 12 components
  double reward = 0.0;
  EndKind end = EndKind::running;
};

/// sqrt(dx^2 + dy^2 + dz^2).
double euclidean_error(const Eigen::Vector3d& delta);

/// Hover reward: 1/(7*max(e, 1e-3)) + 7/sqrt(2*pi*0.25) * exp(-0.5*(e/0.5)^2).
/// The 1e-3 floor guards the rational term's singularity at e = 0.
double hover_reward(double e);

/// Linear map of [-1, 1] onto [0, rpm_max] per rotor. Input is clamped.
RpmCommand denormalize_action(const Eigen::VectorXd& action, const QuadModel& model);

/// Episodic hover task. Observations are
/// (roll, pitch, yaw, vx, vy, vz, wx, wy, wz, dx, dy, dz) with
/// d = target - position. Episodes end by timeout (truncated) after
/// kMaxEpisodeSteps or by the crash predicate (terminated):
/// z < 0.02 m, |roll| or |pitch| > 1.4 rad, or error > 6 m.
/// The crash step pays zero reward.
class HoverEnv {
 public:
  HoverEnv(QuadModel model, EnvBounds bounds, RngStream reset_stream,
           int max_steps = kMaxEpisodeSteps);

  /// Start a new episode at a uniform position inside the bounds, level
  /// attitude, at rest.
  Eigen::VectorXd reset();
  /// Start a new episode at a fixed position (evaluation probes).
  Eigen::VectorXd reset_at(const Eigen::Vector3d& position);

  /// Advance one agent step (kPhysicsSubsteps physics substeps).
  /// Throws std::logic_error if the episode has already ended.
  StepOutcome step(const Eigen::VectorXd& action);

  const QuadState& state() const { return state_; }
  int step_count() const { return step_count_; }
  bool episode_open() const { return episode_open_; }
  const QuadModel& model() const { return model_; }
  const EnvBounds& bounds() const { return bounds_; }
  RngStream& reset_stream() { return rng_; }
  const RngStream& reset_stream() const { return rng_; }

  /// Observation as a pure function of (state, target).
  static Eigen::VectorXd observe(const QuadState& s, const Eigen::Vector3d& target);
  static bool crash_predicate(const QuadState& s, double error);

  /// Restore mid-run sampling state (checkpoint resume).
  void set_reset_stream(RngStream rng) { rng_ = rng; }

 private:
  QuadModel model_;
  EnvBounds bounds_;
  RngStream rng_;
  QuadState state_;
  int max_steps_;
  int step_count_ = 0;
  bool episode_open_ = false;
};

}  // namespace meq
