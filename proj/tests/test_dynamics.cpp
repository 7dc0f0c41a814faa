#include <gtest/gtest.h>

#include <cmath>

#include "holoarm/vehicle_sim.hpp"

using namespace holoarm;

namespace {

// Positive root of c2 u^2 + c1 u + c0 = w.
double quadratic_root(const std::array<double, 3>& c, double w) {
  const double a = c[2], b = c[1], cc = c[0] - w;
  return (-b + std::sqrt(b * b - 4.0 * a * cc)) / (2.0 * a);
}

Vec3 world_momentum(const RigidBodyState& s, const VehicleParams& p) {
  return s.attitude.toRotationMatrix() * (p.inertia_diag.asDiagonal() * s.angular_velocity);
}

}  // namespace

TEST(Dynamics, FreeFallMatchesHalfGTSquared) {
  SimConfig cfg;
  SimState init;
  init.body.position = Vec3(0.0, 0.0, 10.0);
  VehicleSim sim(cfg, init);
  const int n = static_cast<int>(std::lround(1.0 / cfg.dt));
  for (int i = 0; i < n; ++i) sim.step({0.0, 0.0, 0.0, 0.0});
  const double t = n * cfg.dt;
  EXPECT_NEAR(sim.state().body.position.z() - 10.0, -0.5 * cfg.vehicle.gravity * t * t, 1e-6);
  EXPECT_NEAR(sim.state().body.velocity.z(), -cfg.vehicle.gravity * t, 1e-9);
  EXPECT_NEAR(sim.state().body.position.x(), 0.0, 1e-12);
}

TEST(Dynamics, QuaternionNormDriftBelowTolerance) {
  VehicleParams p;
  RigidBodyState s;
  s.angular_velocity = Vec3(1.3, -2.1, 4.7);
  for (int i = 0; i < 100000; ++i) s = step(s, Wrench{}, p, 1e-3);
  EXPECT_LT(std::abs(s.attitude.norm() - 1.0), 1e-9);
}

TEST(Dynamics, TorqueFreeAngularMomentumConserved) {
  VehicleParams p;
  p.gravity = 0.0;
  RigidBodyState s;
  s.angular_velocity = Vec3(2.0, -1.0, 3.0);
  const Vec3 l0 = world_momentum(s, p);
  const double dt = 1e-3;
  for (int i = 0; i < 1000; ++i) s = step(s, Wrench{}, p, dt);
  EXPECT_LT((world_momentum(s, p) - l0).norm() / l0.norm(), 1e-6);
}

TEST(Dynamics, HoverCommandFromTableValues) {
  VehicleParams p;
  const double u = hover_command(p);
  EXPECT_NEAR(u, quadratic_root(p.thrust_coeffs, p.mass * p.gravity / 4.0), 1e-12);
  EXPECT_NEAR(u, 0.429, 5e-4);
}

TEST(Dynamics, HoverEquilibriumAfterMotorLag) {
  SimConfig cfg;
  SimState init;
  init.body.position = Vec3(0.0, 0.0, 1.0);
  VehicleSim sim(cfg, init);
  const double u = hover_command(cfg.vehicle);
  for (int i = 0; i < 400; ++i) sim.step({u, u, u, u});  // 1 s = 25 motor time constants
  const Vec3 v0 = sim.state().body.velocity;
  sim.step({u, u, u, u});
  const Vec3 accel = (sim.state().body.velocity - v0) / cfg.dt;
  EXPECT_LT(accel.norm(), 1e-4);
}

TEST(Dynamics, MotorLagIsExactExponential) {
  VehicleParams p;
  MotorBank b;
  b.actual = {0.1, 0.2, 0.3, 0.4};
  const MotorArray cmd{0.9, 0.0, 0.5, 0.4};
  const double dt = 0.013;
  const MotorBank out = motor_lag_step(b, cmd, dt, p);
  for (int i = 0; i < kNumArms; ++i) {
    const double expect = cmd[i] + (b.actual[i] - cmd[i]) * std::exp(-dt / p.motor_time_constant);
    EXPECT_NEAR(out.actual[i], expect, 1e-15);
  }
}

TEST(Dynamics, ThrustCurveAndInverse) {
  VehicleParams p;
  EXPECT_DOUBLE_EQ(motor_thrust(0.0, p), 0.0);  // negative polynomial clamps
  EXPECT_NEAR(motor_thrust(1.0, p), -0.137 + 4.247 + 3.766, 1e-12);
  for (double u : {0.1, 0.3, 0.429, 0.8, 1.0}) {
    EXPECT_NEAR(thrust_to_command(motor_thrust(u, p), p), u, 1e-9);
  }
  EXPECT_THROW(motor_thrust(1.01, p), ContractError);
  EXPECT_THROW(motor_thrust(-0.01, p), ContractError);
}

TEST(Dynamics, UndeflectedRotorPoseIsBitwiseNominal) {
  VehicleParams v;
  ArmParams a;
  for (int i = 0; i < kNumArms; ++i) {
    const RotorPose pose = rotor_pose(i, ArmState{}, v, a);
    EXPECT_EQ(pose.position.x(), v.rotor_positions[i].x());
    EXPECT_EQ(pose.position.y(), v.rotor_positions[i].y());
    EXPECT_EQ(pose.position.z(), v.rotor_positions[i].z());
    EXPECT_EQ(pose.thrust_direction, Vec3::UnitZ());
  }
}

TEST(Dynamics, YawTorqueFromSpinDirections) {
  VehicleParams p;
  ArmParams a;
  MotorBank b;
  b.actual = {0.8, 0.2, 0.8, 0.2};
  const Wrench w = body_wrench(b, std::array<ArmState, kNumArms>{}, p, a);
  double expect = 0.0;
  for (int i = 0; i < kNumArms; ++i) expect += -p.spin_directions[i] * p.yaw_torque_coeff * motor_thrust(b.actual[i], p);
  EXPECT_NEAR(w.torque.z(), expect, 1e-12);
  EXPECT_NEAR(w.force.z(), 2.0 * (motor_thrust(0.8, p) + motor_thrust(0.2, p)), 1e-12);
}

TEST(Dynamics, TiltAngle) {
  EXPECT_DOUBLE_EQ(tilt_angle(Quat::Identity()), 0.0);
  const Quat q(Eigen::AngleAxisd(deg2rad(30.0), Vec3::UnitX()));
  EXPECT_NEAR(tilt_angle(q), deg2rad(30.0), 1e-12);
}

TEST(Dynamics, StepRejectsBadInput) {
  VehicleParams p;
  RigidBodyState s;
  EXPECT_THROW(step(s, Wrench{}, p, 0.0), ContractError);
  EXPECT_THROW(step(s, Wrench{}, p, 0.02), ContractError);
  Wrench bad;
  bad.force.x() = std::nan("");
  EXPECT_THROW(step(s, bad, p, 1e-3), NumericalError);
  VehicleParams heavy;
  heavy.mass = 10.0;
  EXPECT_THROW(heavy.validate(), ContractError);
}

TEST(Dynamics, PayloadShiftsMassAndCentre) {
  VehicleParams v;
  const VehicleParams w = with_payload(v, Payload{0.55, Vec3(0.0, 0.0, -0.05)});
  EXPECT_NEAR(w.mass, v.mass + 0.55, 1e-12);
  const double shift = 0.55 * -0.05 / (v.mass + 0.55);
  for (int i = 0; i < kNumArms; ++i) EXPECT_NEAR(w.rotor_positions[i].z(), v.rotor_positions[i].z() - shift, 1e-12);
}
