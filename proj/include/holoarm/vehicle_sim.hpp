// Coupled body + compliant-arm simulator: motors, arm DOFs, penalty contacts
// and scripted pushes, integrated with one RK4 over the full state.
#pragma once

#include <vector>

#include "holoarm/arm.hpp"
#include "holoarm/contact.hpp"
#include "holoarm/dynamics.hpp"

namespace holoarm {

/// Point mass rigidly attached at `offset` (body frame, from the body origin).
struct Payload {
  double mass = 0.0;
  Vec3 offset{0.0, 0.0, -0.05};
};

// Vehicle with the payload folded in: total mass, shifted rotor positions
// (the body frame stays at the combined centre of mass) and the parallel-axis
// inertia of a payload on the body z axis.
VehicleParams with_payload(const VehicleParams& vehicle, const Payload& payload);

/// Constant force applied for [start, start + duration). `force` is in the
/// body frame. For `arm >= 0` the point is `offset` from that arm's rotor hub
/// (so it rides on the arm), otherwise `offset` is a body point.
struct Push {
  double start = 0.0;
  double duration = 0.0;
  int arm = -1;
  Vec3 offset = Vec3::Zero();
  Vec3 force = Vec3::Zero();
};

struct SimConfig {
  VehicleParams vehicle;
  ArmParams arm;
  ContactParams contact;
  Environment environment;
  bool compliant = true;  // false: arm DOFs locked at zero
  double dt = 2.5e-3;
  std::vector<Push> pushes;

  void validate() const;
};

struct SimState {
  RigidBodyState body;
  std::array<ArmState, kNumArms> arms{};
  MotorBank motors;
  double time = 0.0;
};

// Contact summary at one instant.
struct ContactReport {
  double ground_normal = 0.0;  // N, sum over touching primitives
  double wall_normal = 0.0;    // N
  Vec3 world_force = Vec3::Zero();
  int touching = 0;
};

class VehicleSim {
 public:
  explicit VehicleSim(SimConfig config, SimState initial = {});

  const SimConfig& config() const { return config_; }
  const SimState& state() const { return state_; }
  void reset(const SimState& state);

  // Motor lag over dt with the given commands, then one RK4 step of the
  // body, arms and contacts.
  void step(const MotorArray& commands);

  // World-frame contact primitives at the current state.
  std::vector<Primitive> primitives() const;
  ContactReport contacts() const;

 private:
  struct Derivative {
    BodyDerivative body;
    std::array<ArmDerivative, kNumArms> arms;
  };
  struct Full {
    RigidBodyState body;
    std::array<ArmState, kNumArms> arms;
  };

  Derivative evaluate(const Full& x, double t, ContactReport* report) const;
  Full advance(const Full& x, const Derivative& d, double h) const;

  SimConfig config_;
  SimState state_;
};

}  // namespace holoarm
