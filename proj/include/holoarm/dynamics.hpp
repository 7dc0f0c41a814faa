// Rigid-body quadrotor dynamics: identified thrust curve, first-order motor
// lag, rotor wrench aggregation and a fixed-step RK4 integrator.
#pragma once

#include "holoarm/arm_types.hpp"
#include "holoarm/common.hpp"

namespace holoarm {

/// Identified vehicle constants plus frame geometry. Defaults are the
/// identified values of the nine-inch HoLoArm airframe (970 g with battery).
struct VehicleParams {
  double mass = 0.970;  // kg
  // Body frame, x forward, y left, z up. Arm i sits at rotor_positions[i];
  // order runs counter-clockwise seen from above.
  std::array<Vec3, kNumArms> rotor_positions{Vec3(0.142, 0.169, 0.0), Vec3(-0.142, 0.169, 0.0),
                                             Vec3(-0.142, -0.169, 0.0), Vec3(0.142, -0.169, 0.0)};
  double motor_time_constant = 0.04;                       // s
  std::array<double, 3> thrust_coeffs{-0.137, 4.247, 3.766};  // N over command in [0,1]
  // Rotor drag torque per newton of thrust (m). Reaction on the body is
  // -spin * coeff * thrust about body z.
  double yaw_torque_coeff = 0.0136;
  // +1: rotor spins counter-clockwise seen from above. Adjacent rotors
  // counter-rotate (X pattern).
  std::array<int, kNumArms> spin_directions{+1, -1, +1, -1};
  Vec3 inertia_diag{0.008154, 0.005226, 0.0012043};  // kg m^2
  Vec3 frame_half_extents{0.229, 0.256, 0.026};      // m, 458 x 512 x 52 mm frame
  double gravity = 9.81;
  double linear_drag = 0.0;  // N s/m, world-frame, off by default

  void validate() const;
  double max_thrust() const;
};

struct RigidBodyState {
  Vec3 position = Vec3::Zero();                 // world, m
  Quat attitude = Quat::Identity();             // body -> world
  Vec3 velocity = Vec3::Zero();                 // world, m/s
  Vec3 angular_velocity = Vec3::Zero();         // body, rad/s
};

struct MotorBank {
  MotorArray commanded{0.0, 0.0, 0.0, 0.0};
  MotorArray actual{0.0, 0.0, 0.0, 0.0};
};

// Body-frame force and torque about the centre of mass.
struct Wrench {
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();

  Wrench& operator+=(const Wrench& o) {
    force += o.force;
    torque += o.torque;
    return *this;
  }
};

// Thrust (N) for a normalised command. Rejects commands outside [0,1];
// negative polynomial values clamp to zero (rotors do not pull).
double motor_thrust(double cmd, const VehicleParams& params);

// Per-motor command producing mg/4, from the quadratic formula.
double hover_command(const VehicleParams& params);

// Inverse of motor_thrust on [0,1]; thrust outside the achievable range
// saturates at the command bounds.
double thrust_to_command(double thrust, const VehicleParams& params);

// Exact exponential update of the first-order lag da/dt = (cmd - a)/tau.
MotorBank motor_lag_step(const MotorBank& bank, const MotorArray& commands, double dt,
                         const VehicleParams& params);

// Sum of rotor thrusts and drag torques. Thrust is applied at the rotor pose
// given by the arm deflection state (undeflected reproduces the nominal
// rotor positions).
Wrench body_wrench(const MotorBank& bank, const std::array<ArmState, kNumArms>& arms,
                   const VehicleParams& params, const ArmParams& arm_params);

struct BodyDerivative {
  Vec3 position_dot;
  Eigen::Vector4d attitude_dot;  // (w, x, y, z)
  Vec3 velocity_dot;
  Vec3 angular_velocity_dot;
};

// Newton-Euler right-hand side with gravity in the world frame. `wrench` is
// body-frame, `world_force` an extra world-frame force (contacts, pushes).
BodyDerivative body_derivative(const RigidBodyState& s, const Wrench& wrench,
                               const Vec3& world_force, const VehicleParams& params);

// One RK4 step with the wrench held constant. dt in (0, 0.01]. Throws
// NumericalError on non-finite inputs or results.
RigidBodyState step(const RigidBodyState& state, const Wrench& wrench, const VehicleParams& params,
                    double dt);

void check_finite(const RigidBodyState& s, const char* where);

// Tilt of body z from world z, radians.
double tilt_angle(const Quat& attitude);

}  // namespace holoarm
