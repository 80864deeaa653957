#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "meq/quad.hpp"
#include "meq/rng.hpp"

using namespace meq;

namespace {
const double kSqrt2 = std::sqrt(2.0);
}

TEST_CASE("hover_rpm closed form and identities") {
  QuadModel m;
  const double h = hover_rpm(m);
  CHECK(h == doctest::Approx(14475.8).epsilon(1e-4));
  // defining identity
  CHECK(4.0 * m.kf * h * h == doctest::Approx(m.mass * m.gravity).epsilon(1e-12));
  // doubling kf divides hover rpm by sqrt(2)
  QuadModel m2 = m;
  m2.kf *= 2.0;
  CHECK(hover_rpm(m2) == doctest::Approx(h / kSqrt2).epsilon(1e-12));
}

TEST_CASE("model validation rejects a vehicle that cannot hover") {
  QuadModel m;
  m.rpm_max = hover_rpm(m) * 0.9;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  QuadModel neg;
  neg.mass = -1.0;
  CHECK_THROWS_AS(neg.validate(), std::invalid_argument);
}

TEST_CASE("motor_wrench: no spin, symmetric spin") {
  QuadModel m;
  MotorWrench w = motor_wrench(m, RpmCommand{});
  CHECK(w.thrust[0] == 0.0);
  CHECK(w.torque.norm() == 0.0);

  RpmCommand all;
  const double u = 9000.0;
  all.rpm = {u, u, u, u};
  w = motor_wrench(m, all);
  double total = 0.0;
  for (double f : w.thrust) total += f;
  CHECK(total == doctest::Approx(4.0 * m.kf * u * u).epsilon(1e-12));
  CHECK(std::abs(w.torque.x()) < 1e-15);
  CHECK(std::abs(w.torque.y()) < 1e-15);
  CHECK(std::abs(w.torque.z()) < 1e-15);  // yaw signs cancel
}

TEST_CASE("motor_wrench: X-layout mixing algebra") {
  QuadModel m;
  const double u = 12000.0;
  const double f = m.kf * u * u;
  const double lever = m.arm_length / kSqrt2;

  // A single rotor pulls at lever L/sqrt(2) on each of roll and pitch.
  RpmCommand one;
  one.rpm = {u, 0.0, 0.0, 0.0};
  MotorWrench w = motor_wrench(m, one);
  CHECK(std::abs(w.torque.x()) == doctest::Approx(f * lever).epsilon(1e-12));
  CHECK(std::abs(w.torque.y()) == doctest::Approx(f * lever).epsilon(1e-12));
  CHECK(w.torque.z() == doctest::Approx(m.km * u * u).epsilon(1e-12));

  // The front-right/back-left pair sits on opposite corners: per-rotor
  // roll/pitch contributions of magnitude f*lever cancel pairwise, while the
  // matching yaw signs add to +2*km*u^2.
  RpmCommand pair;
  pair.rpm = {u, u, 0.0, 0.0};
  w = motor_wrench(m, pair);
  CHECK(std::abs(w.torque.x()) < 1e-15);
  CHECK(std::abs(w.torque.y()) < 1e-15);
  CHECK(w.torque.z() == doctest::Approx(2.0 * m.km * u * u).epsilon(1e-12));
  CHECK(w.thrust[0] == doctest::Approx(f));
  CHECK(w.thrust[1] == doctest::Approx(f));
}

TEST_CASE("free fall matches the closed form within the integrator bias") {
  QuadModel m;
  QuadState s;
  s.position = {0.0, 0.0, 10.0};
  const double t_total = 0.5;
  const int n = static_cast<int>(t_total / m.dt_phys);
  for (int i = 0; i < n; ++i) s = step(m, s, RpmCommand{}, m.dt_phys);
  const double closed = -0.5 * m.gravity * t_total * t_total;  // -1.22625 m
  const double dz = s.position.z() - 10.0;
  CHECK(std::abs(dz - closed) / std::abs(closed) < 0.01);
  CHECK(closed == doctest::Approx(-1.22625));
}

TEST_CASE("hover equilibrium: level vehicle at hover rpm stays put") {
  QuadModel m;
  QuadState s;
  s.position = {0.0, 0.0, 1.0};
  RpmCommand cmd;
  const double h = hover_rpm(m);
  cmd.rpm = {h, h, h, h};
  for (int i = 0; i < 250; ++i) s = step(m, s, cmd, m.dt_phys);  // 1 s
  CHECK((s.position - Eigen::Vector3d(0.0, 0.0, 1.0)).norm() < 1e-3);
  CHECK(euler_angles(s).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("rotational equilibrium: zero rate and zero torque stay zero") {
  QuadModel m;
  QuadState s;
  s.position = {0.0, 0.0, 5.0};
  const QuadState next = step(m, s, RpmCommand{}, m.dt_phys);
  CHECK(next.angular_velocity.norm() == 0.0);
  CHECK(next.orientation.angularDistance(s.orientation) < 1e-15);
}

TEST_CASE("yaw torque spins the body against the rotor pair's spin") {
  QuadModel m;
  QuadState s;
  s.position = {0.0, 0.0, 5.0};
  // Rotors 1 and 2 carry positive reaction-torque signs (they spin negative
  // about body z). Commanding them faster must yaw the body positively.
  RpmCommand cmd;
  cmd.rpm = {12000.0, 12000.0, 8000.0, 8000.0};
  CHECK(motor_wrench(m, cmd).torque.z() > 0.0);
  for (int i = 0; i < 50; ++i) s = step(m, s, cmd, m.dt_phys);
  CHECK(s.angular_velocity.z() > 0.0);
  CHECK(euler_angles(s).z() > 0.0);
}

TEST_CASE("euler_angles: identity and pure yaw") {
  QuadState s;
  CHECK(euler_angles(s).norm() == 0.0);

  s.orientation = Eigen::Quaterniond(Eigen::AngleAxisd(M_PI / 2.0, Eigen::Vector3d::UnitZ()));
  const Eigen::Vector3d rpy = euler_angles(s);
  CHECK(rpy.x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rpy.y() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rpy.z() == doctest::Approx(M_PI / 2.0).epsilon(1e-12));
}

TEST_CASE("euler_angles: compose-then-extract round trip for small angles") {
  RngStream rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const double roll = rng.uniform(-0.5, 0.5);
    const double pitch = rng.uniform(-0.5, 0.5);
    const double yaw = rng.uniform(-0.5, 0.5);
    QuadState s;
    s.orientation = Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
                                       Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
                                       Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()));
    const Eigen::Vector3d rpy = euler_angles(s);
    CHECK(std::abs(rpy.x() - roll) < 1e-9);
    CHECK(std::abs(rpy.y() - pitch) < 1e-9);
    CHECK(std::abs(rpy.z() - yaw) < 1e-9);
  }
}

TEST_CASE("quaternion norm survives 1e5 steps of asymmetric commands") {
  QuadModel m;
  QuadState s;
  s.position = {0.0, 0.0, 1e6};  // keep it airborne for the whole run
  const double h = hover_rpm(m);
  RpmCommand cmd;
  cmd.rpm = {h * 1.01, h * 0.99, h * 1.003, h * 0.997};
  for (int i = 0; i < 100000; ++i) {
    s = step(m, s, cmd, m.dt_phys);
    if ((i & 1023) == 0) CHECK(std::abs(s.orientation.norm() - 1.0) < 1e-9);
  }
  CHECK(std::abs(s.orientation.norm() - 1.0) < 1e-9);
}

TEST_CASE("step is deterministic") {
  QuadModel m;
  QuadState s;
  s.position = {0.2, -0.1, 2.0};
  s.velocity = {0.4, 0.0, -0.2};
  s.angular_velocity = {0.1, -0.3, 0.05};
  RpmCommand cmd;
  cmd.rpm = {9000.0, 8500.0, 9500.0, 8800.0};
  const QuadState a = step(m, s, cmd, m.dt_phys);
  const QuadState b = step(m, s, cmd, m.dt_phys);
  CHECK(a.position == b.position);
  CHECK(a.velocity == b.velocity);
  CHECK(a.angular_velocity == b.angular_velocity);
  CHECK(a.orientation.coeffs() == b.orientation.coeffs());
}

TEST_CASE("non-finite states are flagged as divergence") {
  QuadModel m;
  QuadState s;
  s.velocity.x() = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS((void)step(m, s, RpmCommand{}, m.dt_phys), std::runtime_error);
}
