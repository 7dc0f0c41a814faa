// Penalty contact: Kelvin-Voigt normal law, regularised Coulomb friction,
// ground plane and axis-aligned wall boxes.
#pragma once

#include <optional>
#include <vector>

#include "holoarm/common.hpp"

namespace holoarm {

/// A contact primitive carried by the vehicle. `arm < 0` means a body-fixed
/// point at `offset` (body frame). Otherwise the primitive rides on arm `arm`
/// and `offset` is relative to the rotor hub in the undeflected arm frame.
/// A positive `guard_radius` turns the point into a ring (propeller guard)
/// of that radius around the thrust axis, `half_height` thick.
struct ContactPoint {
  Vec3 offset = Vec3::Zero();
  int arm = -1;
  double guard_radius = 0.0;
  double half_height = 0.0;
};

struct ContactParams {
  double k_n = 2.0e4;   // N/m
  double c_n = 50.0;    // N s/m
  double mu = 0.5;
  double c_t = 1.0e3;   // N s/m, friction regularisation below sliding
  double failure_threshold = 24.0;  // N, ImpactEvent::broke
  std::vector<ContactPoint> points = default_contact_points();

  void validate() const;
  static std::vector<ContactPoint> default_contact_points();
};

// World-frame geometry and motion of one primitive at the current pose.
struct Primitive {
  Vec3 center = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();  // ring axis (thrust direction), unit
  double radius = 0.0;
  double half_height = 0.0;
  Vec3 velocity = Vec3::Zero();          // of the centre
  Vec3 angular_velocity = Vec3::Zero();

  Vec3 velocity_at(const Vec3& p) const { return velocity + angular_velocity.cross(p - center); }
};

struct Penetration {
  double depth;  // m, > 0
  Vec3 normal;   // unit, pointing out of the obstacle
  Vec3 point;    // world, on the primitive surface
};

struct WallBox {
  Vec3 min;
  Vec3 max;
};

/// Two wall slabs in the plane x = plane_x, each `thickness` deep, leaving an
/// opening of `width` centred on y = 0.
struct GapGeometry {
  double width = 0.48;
  double plane_x = 0.0;
  double thickness = 0.15;
  double extent = 5.0;  // wall length beyond the opening and half-height

  void validate() const;
  std::vector<WallBox> walls() const;
};

struct Environment {
  std::optional<double> ground_z;
  std::vector<WallBox> walls;
};

// max(0, k_n x + c_n xdot). Rejects negative penetration.
double contact_force(double penetration, double penetration_rate, const ContactParams& params);

std::optional<Penetration> ground_penetration(const Primitive& prim, double ground_z);
std::optional<Penetration> box_penetration(const Primitive& prim, const WallBox& box);

// Normal penalty plus friction opposing the tangential slip, capped at mu*F_n.
// `velocity` is the world velocity of the contact point.
Vec3 penetration_force(const Penetration& pen, const Vec3& velocity, const ContactParams& params);

struct PointForce {
  int primitive;     // index into the primitive list
  Vec3 point;        // world application point
  Vec3 force;        // world
  double normal;     // N, normal component
  bool ground;       // from the ground plane rather than a wall
};

// Forces from every primitive touching any of `walls`.
std::vector<PointForce> wall_contact(const std::vector<Primitive>& prims,
                                     const std::vector<WallBox>& walls, const ContactParams& params);

// Forces from every primitive touching the ground and the walls of `env`.
std::vector<PointForce> environment_contact(const std::vector<Primitive>& prims,
                                            const Environment& env, const ContactParams& params);

}  // namespace holoarm
