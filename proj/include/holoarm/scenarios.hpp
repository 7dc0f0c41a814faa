// Scripted flight experiments: lemniscate tracking, payload circle, hover
// disturbance, narrow gap traversal and the drop suite.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "holoarm/controller.hpp"
#include "holoarm/drop.hpp"
#include "holoarm/vehicle_sim.hpp"

namespace holoarm {

enum class ScenarioKind { hover_disturbance, lemniscate, payload_circle, narrow_gap, drop_suite };

std::string to_string(ScenarioKind kind);
ScenarioKind parse_scenario_kind(const std::string& name);
const std::vector<ScenarioKind>& all_scenario_kinds();

struct LemniscateParams {
  double period = 10.0;   // s
  double a = 2.0;         // m, x amplitude
  double b = 2.0;         // m, y amplitude (y = b sin(2wt) / 2)
  double altitude = 1.0;  // m
  int warmup_periods = 1;
  int measured_periods = 3;
};

struct PayloadParams {
  double mass = 0.55;  // kg
  Vec3 offset{0.0, 0.0, -0.05};
  double radius = 1.0;    // m
  double altitude = 0.9;  // m
  int laps = 3;
  double lap_period = 8.0;  // s
};

/// A push of `force` (body frame, N) at `offset` from arm `arm`'s rotor hub.
struct Disturbance {
  double time = 2.0;
  double duration = 0.1;
  int arm = 0;
  Vec3 offset{0.0, 0.087, 0.0};
  Vec3 force = Vec3::Zero();
};

// 2 N along the yaw direction at arm 0's guard tip.
Disturbance default_yaw_push();

struct DisturbanceParams {
  Vec3 hover{0.0, 0.0, 1.0};
  std::vector<Disturbance> impulses{default_yaw_push()};
  double window = 3.0;          // s, recovery must happen within this
  double recover_error = 0.15;  // m
  double recover_tilt = deg2rad(5.0);
};

struct GapParams {
  double width = 0.48;  // m
  double approach_speed = 0.5;  // m/s
  double start_x = -1.5;
  double end_x = 3.0;
  double altitude = 1.0;
  double thickness = 0.15;  // m, wall depth along x
  bool ring_guards = true;  // wall contacts through guard_ring_points()
  double settle = 3.0;     // s of hold after the target stops
  double recover_error = 0.15;  // m, within `window` of crossing the plane
  double window = 3.0;
};

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::lemniscate;
  std::uint64_t seed = 1;
  SimConfig sim;
  double control_rate = 100.0;  // Hz, also the sample rate of the time series
  double crash_tilt = deg2rad(80.0);
  double crash_error = 3.0;  // m, beyond the largest scripted tracking offset
  LemniscateParams lemniscate;
  PayloadParams payload;
  DisturbanceParams disturbance;
  GapParams gap;
  std::vector<double> drop_heights{1.0, 1.5, 3.0};
  DropConfig drop;

  void validate() const;
  int substeps() const;
};

struct Sample {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  Vec3 reference = Vec3::Zero();
  double error = 0.0;     // m
  double tilt_deg = 0.0;
  double yaw_rate = 0.0;  // rad/s, body z
  MotorArray command{};
  std::array<double, kNumArms> beta_lat_deg{};
  double contact_force = 0.0;  // N, sum of wall and ground normals
};

struct DropRow {
  std::string config;  // "compliant" or "rigid"
  double height = 0.0;
  ImpactEvent event;
};

struct RunResult {
  ScenarioKind kind = ScenarioKind::lemniscate;
  double sample_rate = 0.0;  // Hz
  std::vector<Sample> samples;
  std::vector<std::pair<std::string, double>> metrics;
  bool crashed = false;
  double crash_time = -1.0;
  bool success = false;
  bool saturated = false;
  std::vector<DropRow> drops;
  std::string message;

  double metric(const std::string& name) const;  // throws ContractError if absent
  void set_metric(const std::string& name, double value);
};

// Gerono lemniscate. Velocity and acceleration are the analytic derivatives.
Vec3 lemniscate_reference(double t, double period, double a = 2.0, double b = 2.0, double altitude = 1.0);
ControlTarget lemniscate_target(double t, const LemniscateParams& p);

// Contact primitives for wall encounters: body corners plus one guard ring
// (87 mm radius) around each rotor hub.
std::vector<ContactPoint> guard_ring_points();

RunResult run_lemniscate(FlightController& controller, const ScenarioConfig& config);
RunResult run_payload_circle(FlightController& controller, const ScenarioConfig& config);
RunResult run_hover_disturbance(FlightController& controller, const ScenarioConfig& config);
RunResult run_narrow_gap(FlightController& controller, const ScenarioConfig& config);
RunResult run_drop_suite(const ScenarioConfig& config);

RunResult run_scenario(FlightController& controller, const ScenarioConfig& config);

// Time series at the declared sample rate, 9 significant digits.
void write_timeseries_csv(const std::filesystem::path& path, const RunResult& result);
// config,height_m,peak_N,duration_s,impulse_Ns,broke
void write_drop_csv(const std::filesystem::path& path, const std::vector<DropRow>& rows);
// name,value
void write_metrics_csv(const std::filesystem::path& path, const RunResult& result);

std::string format_number(double v);

}  // namespace holoarm
