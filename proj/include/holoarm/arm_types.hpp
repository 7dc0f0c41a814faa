#pragma once

#include "holoarm/common.hpp"

namespace holoarm {

/// Lumped spring-damper constants of one compliant arm.
///
/// Bending DOFs rotate the outer arm about a pivot `arm_length` inboard of
/// the rotor: lateral about body z, vertical about the horizontal axis
/// perpendicular to the arm. Vertical stiffness is asymmetric (up vs down).
/// The axial DOF slides the arm toward the body against its springs.
///
/// Defaults are the values fitted to the measured recovery tests (lateral
/// 32 deg / 0.72 s, up 28 deg / 0.27 s, down 19 deg / 0.62 s, axial
/// 3.66 mm / 0.75 s) at damping ratio 0.8.
struct ArmParams {
  double k_lat = 0.0;   // N m/rad
  double c_lat = 0.0;   // N m s/rad
  double k_up = 0.0;
  double c_up = 0.0;
  double k_down = 0.0;
  double c_down = 0.0;
  double k_ax = 0.0;    // N/m
  double c_ax = 0.0;    // N s/m
  double inertia_eff = 2.0e-4;     // kg m^2, about the pivot
  double mass_eff = 0.06;          // kg, sliding
  double axial_travel_max = 0.004;  // m
  double arm_length = 0.1;         // m, pivot to rotor axis
  double bend_limit = deg2rad(35.0);
  double vertical_blend = deg2rad(0.5);  // half-width of the up/down switch

  ArmParams();
  void validate() const;
};

struct ArmState {
  double beta_lat = 0.0;   // rad, + toward +yaw
  double beta_vert = 0.0;  // rad, + upward
  double s_ax = 0.0;       // m, compression toward body
  double rate_lat = 0.0;
  double rate_vert = 0.0;
  double rate_ax = 0.0;

  bool operator==(const ArmState&) const = default;
};

// External generalised loads on one arm.
struct ArmLoad {
  double torque_lat = 0.0;   // N m about the lateral axis
  double torque_vert = 0.0;  // N m about the vertical-bending axis
  double force_axial = 0.0;  // N, positive compresses
};

}  // namespace holoarm
