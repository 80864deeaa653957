#include "meq/quad.hpp"

#include <cmath>
#include <stdexcept>

namespace meq {

void QuadModel::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(mass) || !positive(arm_length) || !positive(kf) || !positive(km) ||
      !positive(ixx) || !positive(iyy) || !positive(izz) || !positive(gravity) ||
      !positive(rpm_max) || !positive(dt_phys)) {
    throw std::invalid_argument("QuadModel: all physical constants must be positive and finite");
  }
  if (4.0 * kf * rpm_max * rpm_max <= mass * gravity) {
    throw std::invalid_argument("QuadModel: vehicle cannot hover (4*kf*rpm_max^2 <= m*g)");
  }
}

double hover_rpm(const QuadModel& model) {
  return std::sqrt(model.mass * model.gravity / (4.0 * model.kf));
}

bool QuadState::all_finite() const {
  return position.allFinite() && velocity.allFinite() && angular_velocity.allFinite() &&
         orientation.coeffs().allFinite();
}

MotorWrench motor_wrench(const QuadModel& model, const RpmCommand& cmd) {
  MotorWrench w;
  const double lever = model.arm_length / std::sqrt(2.0);
  // Motor positions in the body frame (x forward, y left), at lever arm on
  // each axis: FR (+x,-y), BL (-x,+y), FL (+x,+y), BR (-x,-y).
  static constexpr double kX[4] = {+1.0, -1.0, +1.0, -1.0};
  static constexpr double kY[4] = {-1.0, +1.0, +1.0, -1.0};
  for (int i = 0; i < 4; ++i) {
    const double f = model.kf * cmd.rpm[i] * cmd.rpm[i];
    w.thrust[i] = f;
    w.torque.x() += kY[i] * lever * f;   // tau = r x F with F along body +z
    w.torque.y() -= kX[i] * lever * f;
    w.torque.z() += RpmCommand::kYawSign[i] * model.km * cmd.rpm[i] * cmd.rpm[i];
  }
  return w;
}

QuadState step(const QuadModel& model, const QuadState& s, const RpmCommand& cmd, double dt) {
  const MotorWrench w = motor_wrench(model, cmd);
  const double total_thrust = w.thrust[0] + w.thrust[1] + w.thrust[2] + w.thrust[3];

  QuadState next = s;

  // Translation: thrust along body z rotated to world, minus gravity.
  const Eigen::Vector3d f_world = s.orientation * Eigen::Vector3d(0.0, 0.0, total_thrust);
  Eigen::Vector3d accel = f_world / model.mass;
  accel.z() -= model.gravity;
  next.velocity += dt * accel;
  next.position += dt * next.velocity;

  // Rotation: Euler's equations with diagonal inertia, then quaternion
  // exponential of the updated body rate.
  const Eigen::Vector3d inertia(model.ixx, model.iyy, model.izz);
  const Eigen::Vector3d i_omega = inertia.cwiseProduct(s.angular_velocity);
  const Eigen::Vector3d omega_dot =
      (w.torque - s.angular_velocity.cross(i_omega)).cwiseQuotient(inertia);
  next.angular_velocity += dt * omega_dot;

  const Eigen::Vector3d rot_vec = next.angular_velocity * dt;
  const double angle = rot_vec.norm();
  Eigen::Quaterniond dq;
  if (angle > 1e-12) {
    dq = Eigen::Quaterniond(Eigen::AngleAxisd(angle, rot_vec / angle));
  } else {
    dq = Eigen::Quaterniond(1.0, 0.5 * rot_vec.x(), 0.5 * rot_vec.y(), 0.5 * rot_vec.z());
  }
  next.orientation = (s.orientation * dq).normalized();

  if (!next.all_finite()) throw std::runtime_error("quad step: simulation diverged");
  return next;
}

Eigen::Vector3d euler_angles(const QuadState& s) {
  const Eigen::Quaterniond& q = s.orientation;
  const double qw = q.w(), qx = q.x(), qy = q.y(), qz = q.z();

  const double roll = std::atan2(2.0 * (qw * qx + qy * qz), 1.0 - 2.0 * (qx * qx + qy * qy));
  double sp = 2.0 * (qw * qy - qz * qx);
  sp = std::clamp(sp, -1.0, 1.0);
  const double pitch = std::asin(sp);
  const double yaw = std::atan2(2.0 * (qw * qz + qx * qy), 1.0 - 2.0 * (qy * qy + qz * qz));
  return {roll, pitch, yaw};
}

}  // namespace meq
