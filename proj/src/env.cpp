#include "meq/env.hpp"

#include <cmath>
#include <stdexcept>

namespace meq {

namespace {
constexpr double kErrorFloor = 1e-3;   // singularity guard on the rational term
constexpr double kRewardScale = 7.0;   // "a" in the rational term
constexpr double kRewardSigma = 0.5;
constexpr double kCrashZ = 0.02;
constexpr double kCrashTilt = 1.4;
constexpr double kCrashError = 6.0;
constexpr double kTwoPi = 6.283185307179586;
}  // namespace

EnvBounds EnvBounds::small_env() { return EnvBounds{}; }

EnvBounds EnvBounds::large_env() {
  EnvBounds b;
  b.x_min = -2.5;
  b.x_max = 2.5;
  b.y_min = -2.5;
  b.y_max = 2.5;
  b.z_min = 0.2;
  b.z_max = 2.5;
  return b;
}

void EnvBounds::validate() const {
  if (!(x_min <= x_max && y_min <= y_max && z_min <= z_max)) {
    throw std::invalid_argument("EnvBounds: empty range");
  }
  if (!(target.z() > 0.0)) throw std::invalid_argument("EnvBounds: target must be above ground");
}

double euclidean_error(const Eigen::Vector3d& delta) { return delta.norm(); }

double hover_reward(double e) {
  const double guarded = std::max(e, kErrorFloor);
  const double rational = 1.0 / (kRewardScale * guarded);
  const double gauss = kRewardScale / std::sqrt(kTwoPi * kRewardSigma * kRewardSigma) *
                       std::exp(-0.5 * (e / kRewardSigma) * (e / kRewardSigma));
  return rational + gauss;
}

RpmCommand denormalize_action(const Eigen::VectorXd& action, const QuadModel& model) {
  RpmCommand cmd;
  for (int i = 0; i < kActDim; ++i) {
    const double a = std::clamp(action(i), -1.0, 1.0);
    cmd.rpm[i] = 0.5 * (a + 1.0) * model.rpm_max;
  }
  return cmd;
}

HoverEnv::HoverEnv(QuadModel model, EnvBounds bounds, RngStream reset_stream, int max_steps)
    : model_(model), bounds_(bounds), rng_(reset_stream), max_steps_(max_steps) {
  model_.validate();
  bounds_.validate();
}

Eigen::VectorXd HoverEnv::observe(const QuadState& s, const Eigen::Vector3d& target) {
  Eigen::VectorXd obs(kObsDim);
  obs.segment<3>(0) = euler_angles(s);
  obs.segment<3>(3) = s.velocity;
  obs.segment<3>(6) = s.angular_velocity;
  obs.segment<3>(9) = target - s.position;
  return obs;
}

bool HoverEnv::crash_predicate(const QuadState& s, double error) {
  const Eigen::Vector3d rpy = euler_angles(s);
  return s.position.z() < kCrashZ || std::abs(rpy.x()) > kCrashTilt ||
         std::abs(rpy.y()) > kCrashTilt || error > kCrashError;
}

Eigen::VectorXd HoverEnv::reset() {
  const double x = rng_.uniform(bounds_.x_min, bounds_.x_max);
  const double y = rng_.uniform(bounds_.y_min, bounds_.y_max);
  const double z = rng_.uniform(bounds_.z_min, bounds_.z_max);
  return reset_at({x, y, z});
}

Eigen::VectorXd HoverEnv::reset_at(const Eigen::Vector3d& position) {
  state_ = QuadState{};
  state_.position = position;
  step_count_ = 0;
  episode_open_ = true;
  return observe(state_, bounds_.target);
}

StepOutcome HoverEnv::step(const Eigen::VectorXd& action) {
  if (!episode_open_) throw std::logic_error("HoverEnv::step: episode has ended; call reset()");
  if (action.size() != kActDim) throw std::invalid_argument("HoverEnv::step: action must have 4 components");

  const RpmCommand cmd = denormalize_action(action, model_);
  for (int i = 0; i < kPhysicsSubsteps; ++i) {
    state_ = meq::step(model_, state_, cmd, model_.dt_phys);
  }
  step_count_ += 1;

  StepOutcome out;
  out.observation = observe(state_, bounds_.target);
  const double error = euclidean_error(bounds_.target - state_.position);

  if (crash_predicate(state_, error)) {
    out.reward = 0.0;
    out.end = EndKind::terminated;
  } else {
    out.reward = hover_reward(error);
    out.end = (step_count_ >= max_steps_) ? EndKind::truncated : EndKind::running;
  }
  if (out.end != EndKind::running) episode_open_ = false;
  return out;
}

}  // namespace meq
