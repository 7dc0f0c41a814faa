// Compliant arm: lumped bending/axial dynamics, rotor pose coupling,
// recovery-time measurement and spring-damper identification.
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "holoarm/arm_types.hpp"
#include "holoarm/dynamics.hpp"

namespace holoarm {

struct RotorPose {
  Vec3 position;          // body frame, m
  Vec3 thrust_direction;  // body frame, unit
};

// Geometry of one arm in the body frame, evaluated at a deflection state.
struct ArmFrame {
  Vec3 pivot;             // fixed joint pivot
  Vec3 direction;         // unit horizontal arm direction, undeflected
  Mat3 bend;              // bending rotation Rz(beta_lat) * R_a(beta_vert)
  Vec3 lateral_axis;      // body z
  Vec3 vertical_axis;     // Rz(beta_lat) * (direction x z)
  Vec3 twist_axis;        // lateral_axis x vertical_axis
  Vec3 axial_inward;      // unit vector the axial slide moves the rotor along
};

ArmFrame arm_frame(int arm_index, const ArmState& state, const VehicleParams& vehicle,
                   const ArmParams& arm);

// Maps a point given relative to the rotor hub in the undeflected arm frame to
// the body frame under the current deflection.
Vec3 arm_point(const ArmFrame& frame, const Vec3& nominal_rotor, double s_ax,
               const Vec3& offset_from_hub);

// Body-frame velocity of an arm-attached point relative to the body, from the
// deflection rates.
Vec3 arm_point_velocity(const ArmFrame& frame, const ArmState& state, const Vec3& point);

// Rotor hub and thrust direction. Undeflected arms return the nominal rotor
// position bitwise and +z.
RotorPose rotor_pose(int arm_index, const ArmState& state, const VehicleParams& vehicle,
                     const ArmParams& arm);

struct ArmDerivative {
  double rate_lat, rate_vert, rate_ax;
  double acc_lat, acc_vert, acc_ax;
};

// Per-DOF reaction the joint applies to the body (positive along the same
// axis convention as ArmLoad). At an engaged hard stop the full external load
// is transmitted.
struct JointReaction {
  double torque_lat = 0.0;
  double torque_vert = 0.0;
  double force_axial = 0.0;
};

// Vertical stiffness/damping blended across +-vertical_blend around zero.
double vertical_stiffness(double beta_vert, const ArmParams& p);
double vertical_damping(double beta_vert, const ArmParams& p);

ArmDerivative arm_derivative(const ArmState& s, const ArmLoad& load, const ArmParams& p);
JointReaction joint_reaction(const ArmState& s, const ArmLoad& load, const ArmParams& p);

// Clamp to hard stops and zero any outward velocity (inelastic stop).
ArmState apply_hard_stops(ArmState s, const ArmParams& p);

ArmState arm_step(const ArmState& state, const ArmLoad& load, const ArmParams& params, double dt);

void check_finite(const ArmState& s, const char* where);

// Mechanical energy of each DOF: 0.5*I*rate^2 + potential.
double arm_energy(const ArmState& s, const ArmParams& p);

// ---------------------------------------------------------------------------
// Recovery traces

enum class Channel { lateral, up, down, axial };

std::string_view to_string(Channel c);
Channel parse_channel(std::string_view name);

// Units: degrees for the bending channels, millimetres for axial.
struct RecoveryTrace {
  std::vector<double> timestamps;
  std::vector<double> values;
  Channel channel = Channel::lateral;

  void validate() const;
};

// Default "recovered" band: 1 deg for bending, 1% of the peak for axial.
double default_threshold(Channel channel, double peak);

// Time from the global extremum of |value - rest| to the first subsequent time
// the deviation is within `threshold` (linear interpolation between samples).
// nullopt when the band is never reached.
std::optional<double> recovery_time(const RecoveryTrace& trace, double threshold, double rest = 0.0);

// Two-column CSV with header `t_s,value`.
RecoveryTrace load_trace(const std::filesystem::path& path, Channel channel);
void write_trace(const std::filesystem::path& path, const RecoveryTrace& trace);

// Release of one DOF from `peak` (deg or mm) with zero rate and no load,
// integrated with arm_step at `dt` and sampled every `sample_every` steps.
RecoveryTrace simulate_release(const ArmParams& params, Channel channel, double peak,
                               double duration, double dt = 1e-3, int sample_every = 1);

// ---------------------------------------------------------------------------
// Identification

struct FitTarget {
  double peak_deflection;  // deg (bending) or mm (axial)
  double recovery_time;    // s
  Channel channel;
};

struct FitConfig {
  double zeta_nominal = 0.8;
  double zeta_min = 0.5;
  double zeta_max = 1.2;
  double omega_min = 0.5;    // rad/s
  double omega_max = 500.0;  // rad/s
  double dt = 1e-3;
  double rel_tol = 1e-4;     // bisection stop on |T - T*|/T*
  int max_iter = 200;
};

struct FitResult {
  double k;
  double c;
  double omega;
  double zeta;
  double achieved_time;
};

class FitInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double channel_inertia(Channel channel, const ArmParams& p);
void set_channel(ArmParams& p, Channel channel, double k, double c);

// Recovery time of the released DOF for the given (omega, zeta).
std::optional<double> release_recovery_time(const ArmParams& base, Channel channel, double peak,
                                            double omega, double zeta, double dt);

FitResult fit_arm_params(const FitTarget& target, const ArmParams& base, const FitConfig& config = {});

// Measured release responses the default ArmParams were fitted to, in
// Channel order.
const std::vector<FitTarget>& measured_recovery_targets();

}  // namespace holoarm
