#include "holoarm/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>

#include <fmt/format.h>

namespace holoarm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

const std::vector<std::pair<ScenarioKind, std::string>>& kind_names() {
  static const std::vector<std::pair<ScenarioKind, std::string>> names{
      {ScenarioKind::hover_disturbance, "hover_disturbance"},
      {ScenarioKind::lemniscate, "lemniscate"},
      {ScenarioKind::payload_circle, "payload_circle"},
      {ScenarioKind::narrow_gap, "narrow_gap"},
      {ScenarioKind::drop_suite, "drop_suite"}};
  return names;
}

}  // namespace

std::string to_string(ScenarioKind kind) {
  for (const auto& [k, n] : kind_names()) {
    if (k == kind) return n;
  }
  return "unknown";
}

ScenarioKind parse_scenario_kind(const std::string& name) {
  for (const auto& [k, n] : kind_names()) {
    if (n == name) return k;
  }
  throw ContractError("unknown scenario kind '" + name +
                      "' (expected hover_disturbance, lemniscate, payload_circle, narrow_gap or drop_suite)");
}

const std::vector<ScenarioKind>& all_scenario_kinds() {
  static const std::vector<ScenarioKind> kinds{ScenarioKind::hover_disturbance, ScenarioKind::lemniscate,
                                               ScenarioKind::payload_circle, ScenarioKind::narrow_gap,
                                               ScenarioKind::drop_suite};
  return kinds;
}

Disturbance default_yaw_push() {
  Disturbance d;
  const Vec3 tip = VehicleParams{}.rotor_positions[0] + d.offset;
  d.force = 2.0 * Vec3(-tip.y(), tip.x(), 0.0).normalized();
  return d;
}

int ScenarioConfig::substeps() const {
  const double ratio = 1.0 / (control_rate * sim.dt);
  const long n = std::lround(ratio);
  require(n >= 1 && std::abs(ratio - double(n)) < 1e-9, "scenario.control_rate: period must be a multiple of sim.dt");
  return static_cast<int>(n);
}

void ScenarioConfig::validate() const {
  sim.validate();
  require(control_rate > 0.0, "scenario.control_rate must be > 0");
  substeps();
  require(crash_tilt > 0.0 && crash_error > 0.0, "scenario crash limits must be > 0");
  switch (kind) {
    case ScenarioKind::lemniscate:
      require(lemniscate.period > 0.0, "lemniscate.period must be > 0");
      require(lemniscate.a >= 0.0 && lemniscate.b >= 0.0, "lemniscate amplitudes must be >= 0");
      require(lemniscate.warmup_periods >= 0 && lemniscate.measured_periods > 0,
              "lemniscate.measured_periods must be > 0");
      break;
    case ScenarioKind::payload_circle:
      require(payload.mass >= 0.0, "payload.mass must be >= 0");
      require(payload.radius > 0.0 && payload.lap_period > 0.0 && payload.laps > 0,
              "payload circle radius, lap_period and laps must be > 0");
      break;
    case ScenarioKind::hover_disturbance:
      require(disturbance.window > 0.0, "disturbance.window must be > 0");
      for (const auto& d : disturbance.impulses) {
        require(d.time >= 0.0 && d.duration >= 0.0, "disturbance time and duration must be >= 0");
        require(d.arm >= -1 && d.arm < kNumArms, "disturbance.arm must be -1..3");
      }
      break;
    case ScenarioKind::narrow_gap:
      require(gap.width > 0.0, "gap.width must be > 0");
      require(gap.approach_speed > 0.0, "gap.approach_speed must be > 0");
      require(gap.end_x > gap.start_x, "gap.end_x must exceed gap.start_x");
      require(gap.window > 0.0 && gap.settle >= 0.0, "gap.window must be > 0");
      break;
    case ScenarioKind::drop_suite:
      require(!drop_heights.empty(), "drop.heights must not be empty");
      for (double h : drop_heights) require(h > 0.0, "drop.heights must be > 0");
      drop.validate();
      break;
  }
}

double RunResult::metric(const std::string& name) const {
  for (const auto& [k, v] : metrics) {
    if (k == name) return v;
  }
  throw ContractError("run result has no metric '" + name + "'");
}

void RunResult::set_metric(const std::string& name, double value) {
  for (auto& [k, v] : metrics) {
    if (k == name) {
      v = value;
      return;
    }
  }
  metrics.emplace_back(name, value);
}

Vec3 lemniscate_reference(double t, double period, double a, double b, double altitude) {
  require(period > 0.0, "lemniscate_reference: period must be > 0");
  const double w = kTwoPi / period;
  return {a * std::sin(w * t), 0.5 * b * std::sin(2.0 * w * t), altitude};
}

ControlTarget lemniscate_target(double t, const LemniscateParams& p) {
  const double w = kTwoPi / p.period;
  ControlTarget c;
  c.position = lemniscate_reference(t, p.period, p.a, p.b, p.altitude);
  c.velocity = {p.a * w * std::cos(w * t), p.b * w * std::cos(2.0 * w * t), 0.0};
  c.acceleration = {-p.a * w * w * std::sin(w * t), -2.0 * p.b * w * w * std::sin(2.0 * w * t), 0.0};
  return c;
}

std::vector<ContactPoint> guard_ring_points() {
  std::vector<ContactPoint> pts;
  for (double sx : {1.0, -1.0}) {
    for (double sy : {1.0, -1.0}) pts.push_back({Vec3(0.06 * sx, 0.06 * sy, -0.026), -1, 0.0, 0.0});
  }
  for (int i = 0; i < kNumArms; ++i) pts.push_back({Vec3::Zero(), i, 0.087, 0.013});
  return pts;
}

namespace {

using TargetFn = std::function<ControlTarget(double)>;

// Flies `controller` after `target` for `duration` seconds, sampling at the
// control rate. Errors count from `measure_from` on.
RunResult fly(FlightController& controller, const ScenarioConfig& cfg, const SimConfig& sim_config,
              const TargetFn& target, double duration, double measure_from) {
  RunResult res;
  res.kind = cfg.kind;
  res.sample_rate = cfg.control_rate;

  const ControlTarget t0 = target(0.0);
  SimState init;
  init.body.position = t0.position;
  init.body.velocity = t0.velocity;
  const double h = hover_command(sim_config.vehicle);
  require(h < 1.0, "vehicle cannot hover: weight exceeds maximum thrust");
  init.motors.actual = {h, h, h, h};
  init.motors.commanded = init.motors.actual;
  VehicleSim sim(sim_config, init);
  controller.reset();

  const int substeps = cfg.substeps();
  const double dt_ctrl = 1.0 / cfg.control_rate;
  const long steps = std::lround(duration * cfg.control_rate);
  std::array<double, kNumArms> pinned{};
  double sum = 0.0;
  long counted = 0;
  double max_err = 0.0;

  auto record = [&](double t, const MotorArray& cmd) {
    const SimState& s = sim.state();
    Sample smp;
    smp.t = t;
    smp.position = s.body.position;
    smp.reference = target(t).position;
    smp.error = (smp.position - smp.reference).norm();
    smp.tilt_deg = rad2deg(tilt_angle(s.body.attitude));
    smp.yaw_rate = s.body.angular_velocity.z();
    smp.command = cmd;
    for (int i = 0; i < kNumArms; ++i) smp.beta_lat_deg[i] = rad2deg(s.arms[i].beta_lat);
    const ContactReport rep = sim.contacts();
    smp.contact_force = rep.ground_normal + rep.wall_normal;
    if (t >= measure_from - 1e-9) {
      sum += smp.error;
      ++counted;
      max_err = std::max(max_err, smp.error);
    }
    res.samples.push_back(smp);
  };
  record(0.0, init.motors.commanded);

  for (long k = 1; k <= steps; ++k) {
    const double t_prev = double(k - 1) * dt_ctrl;
    MotorArray cmd = controller.command(sim.state().body, target(t_prev), dt_ctrl);
    for (double& c : cmd) c = std::isnan(c) ? 0.0 : std::clamp(c, 0.0, 1.0);
    try {
      for (int j = 0; j < substeps; ++j) sim.step(cmd);
    } catch (const NumericalError& e) {
      res.crashed = true;
      res.crash_time = double(k) * dt_ctrl;
      res.message = e.what();
      break;
    }
    for (int i = 0; i < kNumArms; ++i) {
      pinned[i] = cmd[i] >= 0.999 ? pinned[i] + dt_ctrl : 0.0;
      if (pinned[i] > 0.5 + 1e-9) res.saturated = true;
    }
    const double t = double(k) * dt_ctrl;
    record(t, cmd);
    const Sample& last = res.samples.back();
    if (!(last.error <= cfg.crash_error) || !(deg2rad(last.tilt_deg) <= cfg.crash_tilt)) {
      res.crashed = true;
      res.crash_time = t;
      res.message = fmt::format("crash at t={:.2f} s (error {:.2f} m, tilt {:.1f} deg)", t, last.error, last.tilt_deg);
      break;
    }
  }
  res.set_metric("mean_error_m", counted > 0 ? sum / double(counted) : std::numeric_limits<double>::quiet_NaN());
  res.set_metric("max_error_m", max_err);
  res.set_metric("crashed", res.crashed ? 1.0 : 0.0);
  res.set_metric("crash_time_s", res.crash_time);
  res.set_metric("saturated", res.saturated ? 1.0 : 0.0);
  return res;
}

// Time from `t0` after which every sample up to t0 + window stays inside the
// error/tilt band; negative if that never happens or the run ends first.
double recovery_after(const RunResult& r, double t0, double window, double max_error, double max_tilt_deg) {
  double candidate = -1.0;
  bool reached_end = false;
  for (const Sample& s : r.samples) {
    if (s.t < t0 - 1e-9) continue;
    if (s.t > t0 + window + 1e-9) break;
    const bool inside = s.error < max_error && s.tilt_deg < max_tilt_deg;
    if (!inside) candidate = -1.0;
    else if (candidate < 0.0) candidate = s.t;
    if (s.t >= t0 + window - 1e-9) reached_end = true;
  }
  return reached_end && candidate >= 0.0 ? candidate - t0 : -1.0;
}

}  // namespace

RunResult run_lemniscate(FlightController& controller, const ScenarioConfig& config) {
  ScenarioConfig cfg = config;
  cfg.kind = ScenarioKind::lemniscate;
  cfg.validate();
  const LemniscateParams& p = cfg.lemniscate;
  const double measure_from = p.warmup_periods * p.period;
  const double duration = (p.warmup_periods + p.measured_periods) * p.period;
  RunResult r = fly(controller, cfg, cfg.sim, [&](double t) { return lemniscate_target(t, p); }, duration,
                    measure_from);
  r.set_metric("period_s", p.period);
  r.success = !r.crashed;
  return r;
}

RunResult run_payload_circle(FlightController& controller, const ScenarioConfig& config) {
  ScenarioConfig cfg = config;
  cfg.kind = ScenarioKind::payload_circle;
  cfg.validate();
  const PayloadParams& p = cfg.payload;
  SimConfig sim = cfg.sim;
  sim.vehicle = with_payload(cfg.sim.vehicle, Payload{p.mass, p.offset});
  const double w = kTwoPi / p.lap_period;
  auto target = [&](double t) {
    ControlTarget c;
    c.position = {p.radius * std::cos(w * t), p.radius * std::sin(w * t), p.altitude};
    c.velocity = {-p.radius * w * std::sin(w * t), p.radius * w * std::cos(w * t), 0.0};
    c.acceleration = {-p.radius * w * w * std::cos(w * t), -p.radius * w * w * std::sin(w * t), 0.0};
    return c;
  };
  const double max_thrust = kNumArms * sim.vehicle.max_thrust();
  const double weight = sim.vehicle.mass * sim.vehicle.gravity;
  RunResult r;
  if (max_thrust <= weight) {
    r.kind = cfg.kind;
    r.sample_rate = cfg.control_rate;
    r.saturated = true;
    r.crashed = true;
    r.crash_time = 0.0;
    r.message = fmt::format("payload {:.3f} kg: weight {:.2f} N exceeds maximum thrust {:.2f} N", p.mass, weight,
                            max_thrust);
    r.set_metric("mean_error_m", std::numeric_limits<double>::quiet_NaN());
    r.set_metric("crashed", 1.0);
    r.set_metric("saturated", 1.0);
  } else {
    r = fly(controller, cfg, sim, target, p.laps * p.lap_period, 0.0);
  }
  r.set_metric("payload_kg", p.mass);
  r.set_metric("thrust_to_weight", max_thrust / weight);
  r.success = !r.crashed && !r.saturated;
  return r;
}

RunResult run_hover_disturbance(FlightController& controller, const ScenarioConfig& config) {
  ScenarioConfig cfg = config;
  cfg.kind = ScenarioKind::hover_disturbance;
  cfg.validate();
  const DisturbanceParams& p = cfg.disturbance;
  SimConfig sim = cfg.sim;
  double end = 2.0;
  for (const Disturbance& d : p.impulses) {
    sim.pushes.push_back(Push{d.time, d.duration, d.arm, d.offset, d.force});
    end = std::max(end, d.time + p.window + 1.0);
  }
  RunResult r = fly(controller, cfg, sim, [&](double) { return ControlTarget{p.hover}; }, end, 0.0);

  double first = end;
  bool all = !r.crashed;
  for (size_t i = 0; i < p.impulses.size(); ++i) {
    const double t0 = p.impulses[i].time;
    first = std::min(first, t0);
    const double rec = recovery_after(r, t0, p.window, p.recover_error, rad2deg(p.recover_tilt));
    r.set_metric(fmt::format("recovery_time_s_{}", i), rec);
    if (rec < 0.0) all = false;
  }
  double peak = 0.0;
  for (const Sample& s : r.samples) {
    if (s.t >= first - 1e-9) peak = std::max(peak, std::abs(s.yaw_rate));
  }
  r.set_metric("peak_yaw_rate_rad_s", peak);
  r.set_metric("recovered", all ? 1.0 : 0.0);
  r.set_metric("compliant", cfg.sim.compliant ? 1.0 : 0.0);
  r.success = all;
  return r;
}

RunResult run_narrow_gap(FlightController& controller, const ScenarioConfig& config) {
  ScenarioConfig cfg = config;
  cfg.kind = ScenarioKind::narrow_gap;
  cfg.validate();
  const GapParams& p = cfg.gap;
  GapGeometry geom;
  geom.width = p.width;
  geom.thickness = p.thickness;
  geom.validate();
  SimConfig sim = cfg.sim;
  sim.environment.walls = geom.walls();
  if (p.ring_guards) sim.contact.points = guard_ring_points();
  const double travel = (p.end_x - p.start_x) / p.approach_speed;
  auto target = [&](double t) {
    ControlTarget c;
    if (t < travel) {
      c.position = {p.start_x + p.approach_speed * t, 0.0, p.altitude};
      c.velocity = {p.approach_speed, 0.0, 0.0};
    } else {
      c.position = {p.end_x, 0.0, p.altitude};
    }
    return c;
  };
  RunResult r = fly(controller, cfg, sim, target, travel + p.settle + p.window, 0.0);

  double t_cross = -1.0, max_beta = 0.0, peak_wall = 0.0;
  for (const Sample& s : r.samples) {
    for (double b : s.beta_lat_deg) max_beta = std::max(max_beta, std::abs(b));
    peak_wall = std::max(peak_wall, s.contact_force);
    if (t_cross < 0.0 && s.position.x() > geom.plane_x) t_cross = s.t;
  }
  const bool crossed = t_cross >= 0.0 && !r.crashed;
  const double rec = crossed ? recovery_after(r, t_cross, p.window, p.recover_error, 180.0) : -1.0;
  r.set_metric("gap_width_m", p.width);
  r.set_metric("crossed", crossed ? 1.0 : 0.0);
  r.set_metric("cross_time_s", t_cross);
  r.set_metric("recovery_time_s", rec);
  r.set_metric("max_beta_lat_deg", max_beta);
  r.set_metric("peak_contact_N", peak_wall);
  r.set_metric("compliant", cfg.sim.compliant ? 1.0 : 0.0);
  r.success = crossed && rec >= 0.0;
  if (!crossed && !r.crashed) r.message = "blocked: centre of mass never crossed the gap plane";
  return r;
}

RunResult run_drop_suite(const ScenarioConfig& config) {
  ScenarioConfig cfg = config;
  cfg.kind = ScenarioKind::drop_suite;
  cfg.validate();
  RunResult r;
  r.kind = cfg.kind;
  bool trend = true;
  for (double h : cfg.drop_heights) {
    DropConfig d = cfg.drop;
    d.height = h;
    d.compliant = true;
    const ImpactEvent c = drop_test(d);
    d.compliant = false;
    const ImpactEvent g = drop_test(d);
    r.drops.push_back({"compliant", h, c});
    r.drops.push_back({"rigid", h, g});
    r.set_metric(fmt::format("peak_ratio_{}", format_number(h)), c.peak_force / g.peak_force);
    if (!(c.peak_force < g.peak_force)) trend = false;
  }
  r.set_metric("compliant_below_rigid", trend ? 1.0 : 0.0);
  r.success = trend;
  return r;
}

RunResult run_scenario(FlightController& controller, const ScenarioConfig& config) {
  switch (config.kind) {
    case ScenarioKind::hover_disturbance: return run_hover_disturbance(controller, config);
    case ScenarioKind::lemniscate: return run_lemniscate(controller, config);
    case ScenarioKind::payload_circle: return run_payload_circle(controller, config);
    case ScenarioKind::narrow_gap: return run_narrow_gap(controller, config);
    case ScenarioKind::drop_suite: return run_drop_suite(config);
  }
  throw ContractError("run_scenario: bad kind");
}

std::string format_number(double v) { return fmt::format("{:.9g}", v); }

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

void write_timeseries_csv(const std::filesystem::path& path, const RunResult& result) {
  auto out = open_out(path);
  out << "t_s,x_m,y_m,z_m,ref_x_m,ref_y_m,ref_z_m,error_m,tilt_deg,yaw_rate_rad_s,cmd0,cmd1,cmd2,cmd3,"
         "beta_lat0_deg,beta_lat1_deg,beta_lat2_deg,beta_lat3_deg,contact_N\n";
  for (const Sample& s : result.samples) {
    std::string line = format_number(s.t);
    for (int i = 0; i < 3; ++i) line += "," + format_number(s.position[i]);
    for (int i = 0; i < 3; ++i) line += "," + format_number(s.reference[i]);
    line += "," + format_number(s.error) + "," + format_number(s.tilt_deg) + "," + format_number(s.yaw_rate);
    for (double c : s.command) line += "," + format_number(c);
    for (double b : s.beta_lat_deg) line += "," + format_number(b);
    line += "," + format_number(s.contact_force);
    out << line << '\n';
  }
  finish(out, path);
}

void write_drop_csv(const std::filesystem::path& path, const std::vector<DropRow>& rows) {
  auto out = open_out(path);
  out << "config,height_m,peak_N,duration_s,impulse_Ns,broke\n";
  for (const DropRow& r : rows) {
    out << r.config << ',' << format_number(r.height) << ',' << format_number(r.event.peak_force) << ','
        << format_number(r.event.contact_duration) << ',' << format_number(r.event.impulse) << ','
        << (r.event.broke ? "true" : "false") << '\n';
  }
  finish(out, path);
}

void write_metrics_csv(const std::filesystem::path& path, const RunResult& result) {
  auto out = open_out(path);
  out << "name,value\n";
  out << "scenario," << to_string(result.kind) << '\n';
  out << "success," << (result.success ? 1 : 0) << '\n';
  for (const auto& [k, v] : result.metrics) out << k << ',' << format_number(v) << '\n';
  finish(out, path);
}

}  // namespace holoarm
