#include "holoarm/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "holoarm/arm.hpp"

namespace holoarm {

void VehicleParams::validate() const {
  require(mass > 0.0, "vehicle.mass must be > 0");
  require(inertia_diag.minCoeff() > 0.0, "vehicle.inertia entries must be > 0");
  require(motor_time_constant > 0.0, "vehicle.motor_time_constant must be > 0");
  require(gravity >= 0.0, "vehicle.gravity must be >= 0");
  require(linear_drag >= 0.0, "vehicle.linear_drag must be >= 0");
  require(max_thrust() > mass * gravity / 4.0,
          "vehicle thrust at full command must exceed mass*g/4 (hover infeasible)");
}

double VehicleParams::max_thrust() const {
  return std::max(0.0, thrust_coeffs[0] + thrust_coeffs[1] + thrust_coeffs[2]);
}

double motor_thrust(double cmd, const VehicleParams& params) {
  if (!(cmd >= 0.0 && cmd <= 1.0)) {
    throw ContractError("motor_thrust: command " + std::to_string(cmd) + " outside [0,1]");
  }
  const auto& c = params.thrust_coeffs;
  return std::max(0.0, c[0] + c[1] * cmd + c[2] * cmd * cmd);
}

double thrust_to_command(double thrust, const VehicleParams& params) {
  const auto& c = params.thrust_coeffs;
  if (thrust <= motor_thrust(0.0, params)) return 0.0;
  if (thrust >= params.max_thrust()) return 1.0;
  double x;
  if (std::abs(c[2]) < 1e-12) {
    x = (thrust - c[0]) / c[1];
  } else {
    const double disc = c[1] * c[1] - 4.0 * c[2] * (c[0] - thrust);
    x = (-c[1] + std::sqrt(std::max(0.0, disc))) / (2.0 * c[2]);
  }
  return std::clamp(x, 0.0, 1.0);
}

double hover_command(const VehicleParams& params) {
  return thrust_to_command(params.mass * params.gravity / 4.0, params);
}

MotorBank motor_lag_step(const MotorBank& bank, const MotorArray& commands, double dt,
                         const VehicleParams& params) {
  require(dt > 0.0, "motor_lag_step: dt must be > 0");
  const double decay = std::exp(-dt / params.motor_time_constant);
  MotorBank out;
  for (int i = 0; i < kNumArms; ++i) {
    const double cmd = std::clamp(commands[i], 0.0, 1.0);
    out.commanded[i] = cmd;
    out.actual[i] = std::clamp(cmd + (bank.actual[i] - cmd) * decay, 0.0, 1.0);
  }
  return out;
}

Wrench body_wrench(const MotorBank& bank, const std::array<ArmState, kNumArms>& arms,
                   const VehicleParams& params, const ArmParams& arm_params) {
  Wrench w;
  for (int i = 0; i < kNumArms; ++i) {
    const double thrust = motor_thrust(bank.actual[i], params);
    if (thrust == 0.0) continue;
    const RotorPose pose = rotor_pose(i, arms[i], params, arm_params);
    const Vec3 f = thrust * pose.thrust_direction;
    w.force += f;
    w.torque += pose.position.cross(f);
    w.torque += (-params.spin_directions[i] * params.yaw_torque_coeff * thrust) *
                pose.thrust_direction;
  }
  return w;
}

BodyDerivative body_derivative(const RigidBodyState& s, const Wrench& wrench,
                               const Vec3& world_force, const VehicleParams& params) {
  BodyDerivative d;
  d.position_dot = s.velocity;

  const Quat omega_q(0.0, s.angular_velocity.x(), s.angular_velocity.y(),
                     s.angular_velocity.z());
  const Quat qdot = s.attitude * omega_q;
  d.attitude_dot = 0.5 * Eigen::Vector4d(qdot.w(), qdot.x(), qdot.y(), qdot.z());

  const Vec3 f_world = s.attitude * wrench.force + world_force -
                       params.linear_drag * s.velocity;
  d.velocity_dot = f_world / params.mass - Vec3(0.0, 0.0, params.gravity);

  const Vec3& J = params.inertia_diag;
  const Vec3 h = J.cwiseProduct(s.angular_velocity);
  d.angular_velocity_dot = (wrench.torque - s.angular_velocity.cross(h)).cwiseQuotient(J);
  return d;
}

namespace {

RigidBodyState advance(const RigidBodyState& s, const BodyDerivative& d, double h) {
  RigidBodyState out;
  out.position = s.position + h * d.position_dot;
  out.attitude = Quat(s.attitude.w() + h * d.attitude_dot[0], s.attitude.x() + h * d.attitude_dot[1],
                      s.attitude.y() + h * d.attitude_dot[2], s.attitude.z() + h * d.attitude_dot[3]);
  out.velocity = s.velocity + h * d.velocity_dot;
  out.angular_velocity = s.angular_velocity + h * d.angular_velocity_dot;
  return out;
}

}  // namespace

void check_finite(const RigidBodyState& s, const char* where) {
  if (!s.position.allFinite() || !s.attitude.coeffs().allFinite() || !s.velocity.allFinite() ||
      !s.angular_velocity.allFinite()) {
    std::ostringstream os;
    os << where << ": non-finite rigid-body state (p=" << s.position.transpose()
       << ", v=" << s.velocity.transpose() << ", w=" << s.angular_velocity.transpose() << ")";
    throw NumericalError(os.str());
  }
}

RigidBodyState step(const RigidBodyState& state, const Wrench& wrench, const VehicleParams& params,
                    double dt) {
  require(dt > 0.0 && dt <= 0.01, "step: dt must be in (0, 0.01]");
  require(std::abs(state.attitude.norm() - 1.0) < 1e-6, "step: attitude must be a unit quaternion");
  check_finite(state, "step(input)");
  if (!wrench.force.allFinite() || !wrench.torque.allFinite()) {
    throw NumericalError("step(input): non-finite wrench");
  }

  const Vec3 none = Vec3::Zero();
  const BodyDerivative k1 = body_derivative(state, wrench, none, params);
  const BodyDerivative k2 = body_derivative(advance(state, k1, 0.5 * dt), wrench, none, params);
  const BodyDerivative k3 = body_derivative(advance(state, k2, 0.5 * dt), wrench, none, params);
  const BodyDerivative k4 = body_derivative(advance(state, k3, dt), wrench, none, params);

  BodyDerivative sum;
  sum.position_dot = k1.position_dot + 2.0 * k2.position_dot + 2.0 * k3.position_dot + k4.position_dot;
  sum.attitude_dot = k1.attitude_dot + 2.0 * k2.attitude_dot + 2.0 * k3.attitude_dot + k4.attitude_dot;
  sum.velocity_dot = k1.velocity_dot + 2.0 * k2.velocity_dot + 2.0 * k3.velocity_dot + k4.velocity_dot;
  sum.angular_velocity_dot = k1.angular_velocity_dot + 2.0 * k2.angular_velocity_dot +
                             2.0 * k3.angular_velocity_dot + k4.angular_velocity_dot;

  RigidBodyState out = advance(state, sum, dt / 6.0);
  out.attitude.normalize();
  check_finite(out, "step(output)");
  return out;
}

double tilt_angle(const Quat& attitude) {
  const Vec3 z_body = attitude * Vec3::UnitZ();
  return std::acos(std::clamp(z_body.z(), -1.0, 1.0));
}

}  // namespace holoarm
