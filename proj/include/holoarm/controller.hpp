// Flight controllers: a cascaded geometric PD baseline and the interface the
// learned policy plugs into.
#pragma once

#include "holoarm/dynamics.hpp"

namespace holoarm {

struct ControlTarget {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 acceleration = Vec3::Zero();
  double yaw = 0.0;
};

class FlightController {
 public:
  virtual ~FlightController() = default;
  virtual void reset() {}
  // Motor commands in [0,1] from the estimated body state. Arm deflections
  // are never observed.
  virtual MotorArray command(const RigidBodyState& state, const ControlTarget& target, double dt) = 0;
};

struct PdGains {
  double pos_omega = 4.0;   // rad/s, position loop natural frequency
  double pos_zeta = 0.9;
  double pos_ki = 0.4;      // 1/s^3, integral on position error
  double integral_limit = 1.0;  // m s
  double att_omega = 14.0;
  double att_zeta = 0.9;
  double yaw_omega = 6.0;
  double max_tilt = deg2rad(35.0);
};

/// Position PID feeding a geometric attitude PD, then an exact 4x4 inverse
/// of the rotor allocation. Uses the nominal vehicle model.
class PdController : public FlightController {
 public:
  explicit PdController(VehicleParams model, PdGains gains = {});
  void reset() override;
  MotorArray command(const RigidBodyState& state, const ControlTarget& target, double dt) override;

  // Per-rotor thrusts (N) for a collective thrust and body torque; the
  // allocation ignores arm deflection.
  std::array<double, kNumArms> allocate(double collective, const Vec3& torque) const;

 private:
  VehicleParams model_;
  PdGains gains_;
  Eigen::Matrix4d mix_inverse_;
  Vec3 integral_ = Vec3::Zero();
};

}  // namespace holoarm
