#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <array>

namespace meq {

/// Physical constants of an X-configuration quadrotor.
/// Defaults follow the CrazyFlie 2.0 class of vehicle.
struct QuadModel {
  double mass = 0.027;          // kg
  double arm_length = 0.0397;   // m, center to motor
  double kf = 3.16e-10;         // N per RPM^2
  double km = 7.94e-12;         // N*m per RPM^2
  double ixx = 1.4e-5;          // kg*m^2
  double iyy = 1.4e-5;
  double izz = 2.17e-5;
  double gravity = 9.81;        // m/s^2
  double rpm_max = 21713.7;     // per-rotor cap; default ~= hover * sqrt(2.25)
  double dt_phys = 0.004;       // physics substep, s

  /// Throws std::invalid_argument if a constant is non-positive or the
  /// vehicle cannot produce thrust >= weight at rpm_max.
  void validate() const;
};

/// Per-rotor speed at which total thrust equals weight: sqrt(m*g / (4*kf)).
double hover_rpm(const QuadModel& model);

/// Four rotor speeds in RPM. X-layout order: front-right, back-left,
/// front-left, back-right. The stored yaw signs (+, +, -, -) are the sign of
/// each rotor's reaction torque about body z; the rotor itself spins the
/// opposite way.
struct RpmCommand {
  std::array<double, 4> rpm{0.0, 0.0, 0.0, 0.0};

  static constexpr std::array<double, 4> kYawSign{+1.0, +1.0, -1.0, -1.0};
};

/// Rigid-body state. Orientation maps body frame to world frame
/// (x forward, y left, z up); angular velocity is expressed in body axes.
struct QuadState {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d angular_velocity = Eigen::Vector3d::Zero();

  bool all_finite() const;
};

struct MotorWrench {
  std::array<double, 4> thrust{};   // N, along body +z per rotor
  Eigen::Vector3d torque = Eigen::Vector3d::Zero();  // N*m, body frame
};

/// Thrust and body torque produced by a rotor command.
/// Roll/pitch arise from thrust differentials at lever arm L/sqrt(2);
/// yaw is sum(sign_i * km * U_i^2).
MotorWrench motor_wrench(const QuadModel& model, const RpmCommand& cmd);

/// One semi-implicit Euler substep. Throws std::runtime_error if the state
/// leaves the finite range (simulation diverged).
QuadState step(const QuadModel& model, const QuadState& s, const RpmCommand& cmd, double dt);

/// Z-Y-X (yaw-pitch-roll) angles from the orientation quaternion.
/// Pitch is clamped to +-pi/2 at the gimbal singularity.
Eigen::Vector3d euler_angles(const QuadState& s);

}  // namespace meq
