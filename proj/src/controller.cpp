#include "holoarm/controller.hpp"

#include <algorithm>
#include <cmath>

namespace holoarm {

PdController::PdController(VehicleParams model, PdGains gains) : model_(std::move(model)), gains_(gains) {
  model_.validate();
  Eigen::Matrix4d mix;
  for (int i = 0; i < kNumArms; ++i) {
    const Vec3& r = model_.rotor_positions[i];
    mix(0, i) = 1.0;
    mix(1, i) = r.y();
    mix(2, i) = -r.x();
    mix(3, i) = -model_.spin_directions[i] * model_.yaw_torque_coeff;
  }
  require(std::abs(mix.determinant()) > 1e-12, "PdController: singular rotor allocation");
  mix_inverse_ = mix.inverse();
}

void PdController::reset() { integral_.setZero(); }

std::array<double, kNumArms> PdController::allocate(double collective, const Vec3& torque) const {
  const Eigen::Vector4d f = mix_inverse_ * Eigen::Vector4d(collective, torque.x(), torque.y(), torque.z());
  return {f[0], f[1], f[2], f[3]};
}

namespace {

Vec3 vee(const Mat3& m) { return Vec3(m(2, 1), m(0, 2), m(1, 0)); }

}  // namespace

MotorArray PdController::command(const RigidBodyState& state, const ControlTarget& target, double dt) {
  const double g = model_.gravity;
  const double m = model_.mass;
  const double kp = gains_.pos_omega * gains_.pos_omega;
  const double kd = 2.0 * gains_.pos_zeta * gains_.pos_omega;

  const Vec3 e = target.position - state.position;
  const Vec3 ev = target.velocity - state.velocity;
  integral_ = (integral_ + e * dt).cwiseMax(-gains_.integral_limit).cwiseMin(gains_.integral_limit);

  Vec3 acc = kp * e + kd * ev + gains_.pos_ki * integral_ + target.acceleration;
  acc.z() = std::max(acc.z() + g, 0.2 * g);
  // Tilt clamp: scale the horizontal demand so the thrust stays in the cone.
  const double horiz = acc.head<2>().norm();
  const double max_horiz = acc.z() * std::tan(gains_.max_tilt);
  if (horiz > max_horiz) acc.head<2>() *= max_horiz / horiz;

  const Vec3 z_des = acc.normalized();
  const Vec3 x_course(std::cos(target.yaw), std::sin(target.yaw), 0.0);
  Vec3 y_des = z_des.cross(x_course);
  if (y_des.norm() < 1e-6) y_des = Vec3::UnitY();
  y_des.normalize();
  const Vec3 x_des = y_des.cross(z_des);
  Mat3 r_des;
  r_des << x_des, y_des, z_des;

  const Mat3 r = state.attitude.toRotationMatrix();
  const Vec3 e_r = 0.5 * vee(r_des.transpose() * r - r.transpose() * r_des);
  const Vec3& w = state.angular_velocity;
  const Vec3& inertia = model_.inertia_diag;

  const Vec3 omega_n(gains_.att_omega, gains_.att_omega, gains_.yaw_omega);
  const Vec3 k_r = inertia.cwiseProduct(omega_n.cwiseProduct(omega_n));
  const Vec3 k_w = inertia.cwiseProduct(2.0 * gains_.att_zeta * omega_n);
  const Vec3 torque = -k_r.cwiseProduct(e_r) - k_w.cwiseProduct(w) + w.cross(inertia.cwiseProduct(w));

  const double collective = m * acc.dot(r.col(2));
  const auto thrusts = allocate(std::max(collective, 0.0), torque);
  MotorArray cmd;
  for (int i = 0; i < kNumArms; ++i) cmd[i] = thrust_to_command(thrusts[i], model_);
  return cmd;
}

}  // namespace holoarm
