#include "holoarm/drop.hpp"

#include <algorithm>
#include <cmath>

namespace holoarm {

void DropConfig::validate() const {
  require(height > 0.0, "drop.height must be > 0");
  require(mass > 0.0, "drop.mass must be > 0");
  require(dt > 0.0 && dt <= 1e-3, "drop.dt must be in (0, 1e-3]");
  require(max_time > 0.0, "drop.max_time must be > 0");
}

namespace {

// Height of the lowest primitive below the body origin, level attitude.
double lowest_offset(const VehicleSim& sim) {
  double lowest = 0.0;
  for (const Primitive& p : sim.primitives()) {
    const auto pen = ground_penetration(p, 1e9);
    lowest = std::min(lowest, pen->point.z() - sim.state().body.position.z());
  }
  return lowest;
}

// Vertical momentum of the arm tip masses (I_eff / L^2 at each hub).
double arm_momentum_z(const VehicleSim& sim) {
  const SimConfig& c = sim.config();
  if (!c.compliant) return 0.0;
  const double tip_mass = c.arm.inertia_eff / (c.arm.arm_length * c.arm.arm_length);
  const Mat3 rot = sim.state().body.attitude.toRotationMatrix();
  double p = 0.0;
  for (int i = 0; i < kNumArms; ++i) {
    const ArmState& a = sim.state().arms[i];
    const ArmFrame f = arm_frame(i, a, c.vehicle, c.arm);
    const Vec3 hub = arm_point(f, c.vehicle.rotor_positions[i], a.s_ax, Vec3::Zero());
    p += tip_mass * (rot * arm_point_velocity(f, a, hub)).z();
  }
  return p;
}

}  // namespace

ImpactEvent drop_test(const DropConfig& config, std::vector<std::array<double, 2>>* trace) {
  config.validate();
  SimConfig sc;
  sc.vehicle = config.vehicle;
  sc.vehicle.inertia_diag *= config.mass / config.vehicle.mass;
  sc.vehicle.mass = config.mass;
  sc.arm = config.arm;
  sc.contact = config.contact;
  sc.compliant = config.compliant;
  sc.dt = config.dt;
  sc.environment.ground_z = 0.0;

  VehicleSim sim(sc);
  SimState init;
  init.body.position.z() = config.height - lowest_offset(sim);
  sim.reset(init);

  const MotorArray off{0.0, 0.0, 0.0, 0.0};
  ImpactEvent ev;
  bool in_contact = false;
  double t_first = 0.0;
  double prev_force = 0.0;
  while (sim.state().time < config.max_time) {
    const double vz = sim.state().body.velocity.z();
    sim.step(off);
    const double force = sim.contacts().ground_normal;
    if (!in_contact) {
      if (force <= 0.0) continue;
      in_contact = true;
      ev.impact_speed = -vz;
      t_first = sim.state().time;
    }
    if (trace) trace->push_back({sim.state().time - t_first, force});
    ev.peak_force = std::max(ev.peak_force, force);
    ev.impulse += 0.5 * (prev_force + force) * config.dt;
    prev_force = force;
    if (force <= 0.0) {
      ev.contact_duration = sim.state().time - t_first;
      const double vz_out = sim.state().body.velocity.z() + arm_momentum_z(sim) / config.mass;
      ev.rebound_speed = std::max(0.0, vz_out);
      break;
    }
  }
  require(in_contact, "drop_test: no ground contact within max_time");
  if (ev.contact_duration == 0.0) ev.contact_duration = sim.state().time - t_first;
  ev.broke = ev.peak_force > config.contact.failure_threshold;
  return ev;
}

}  // namespace holoarm
