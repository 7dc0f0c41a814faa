// Drop test: free fall onto the ground with motors off, rigid or compliant.
#pragma once

#include <vector>

#include "holoarm/vehicle_sim.hpp"

namespace holoarm {

/// First contact episode of a drop.
struct ImpactEvent {
  double peak_force = 0.0;        // N, total ground normal force
  double contact_duration = 0.0;  // s
  double impulse = 0.0;           // N s, integral of the normal force
  bool broke = false;             // peak_force > failure threshold
  double impact_speed = 0.0;      // m/s, downward, at first contact
  // m/s, upward, at separation (0 if none). Body momentum plus the arm tip
  // masses' momentum, divided by the body mass.
  double rebound_speed = 0.0;
};

struct DropConfig {
  bool compliant = true;
  double height = 1.0;  // m, free fall of the lowest contact primitive
  VehicleParams vehicle;
  ArmParams arm;
  ContactParams contact;
  double mass = 0.670;   // kg, airframe without battery; inertia scales with it
  double dt = 5.0e-5;    // s
  double max_time = 5.0;

  void validate() const;
};

// Force-time samples of the first episode are appended to `trace` when given
// (pairs of time since first contact and force).
ImpactEvent drop_test(const DropConfig& config, std::vector<std::array<double, 2>>* trace = nullptr);

}  // namespace holoarm
