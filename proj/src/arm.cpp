#include "holoarm/arm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

namespace holoarm {

// Fitted with fit_arm_params at zeta = 0.8, I_eff = 2e-4 kg m^2, m_eff = 0.06 kg
// (see `holoarm fit --defaults`).
ArmParams::ArmParams()
    : k_lat(4.9922763464e-03),
      c_lat(1.5987637378e-03),
      k_up(3.4414269790e-02),
      c_up(4.1976310143e-03),
      k_down(5.8721105493e-03),
      c_down(1.7339321213e-03),
      k_ax(1.6481047602e+00),
      c_ax(5.0313903761e-01) {}

void ArmParams::validate() const {
  require(k_lat > 0 && c_lat > 0 && k_up > 0 && c_up > 0 && k_down > 0 && c_down > 0 &&
              k_ax > 0 && c_ax > 0,
          "arm stiffness and damping values must be > 0");
  require(inertia_eff > 0.0, "arm.inertia_eff must be > 0");
  require(mass_eff > 0.0, "arm.mass_eff must be > 0");
  require(axial_travel_max > 0.0, "arm.axial_travel_max must be > 0");
  require(arm_length > 0.0, "arm.arm_length must be > 0");
  require(bend_limit > 0.0 && bend_limit < std::numbers::pi / 2, "arm.bend_limit must be in (0, 90) deg");
  require(vertical_blend > 0.0 && vertical_blend < bend_limit, "arm.vertical_blend must be in (0, bend_limit)");
}

// ---------------------------------------------------------------------------
// Geometry

ArmFrame arm_frame(int arm_index, const ArmState& state, const VehicleParams& vehicle,
                   const ArmParams& arm) {
  require(arm_index >= 0 && arm_index < kNumArms, "arm index must be in 0..3");
  const Vec3& rotor = vehicle.rotor_positions[arm_index];
  ArmFrame f;
  f.direction = Vec3(rotor.x(), rotor.y(), 0.0).normalized();
  f.pivot = rotor - arm.arm_length * f.direction;
  const Vec3 up_axis = f.direction.cross(Vec3::UnitZ());
  const Mat3 rz = Eigen::AngleAxisd(state.beta_lat, Vec3::UnitZ()).toRotationMatrix();
  const Mat3 ra = Eigen::AngleAxisd(state.beta_vert, up_axis).toRotationMatrix();
  f.bend = rz * ra;
  f.lateral_axis = Vec3::UnitZ();
  f.vertical_axis = rz * up_axis;
  f.twist_axis = f.lateral_axis.cross(f.vertical_axis);
  f.axial_inward = -(f.bend * f.direction);
  return f;
}

Vec3 arm_point(const ArmFrame& frame, const Vec3& nominal_rotor, double s_ax,
               const Vec3& offset_from_hub) {
  // Written as nominal + (R v - v) + s*inward so an undeflected arm
  // reproduces the nominal point exactly.
  const Vec3 v = (nominal_rotor - frame.pivot) + offset_from_hub;
  return (nominal_rotor + offset_from_hub) + (frame.bend * v - v) + s_ax * frame.axial_inward;
}

Vec3 arm_point_velocity(const ArmFrame& frame, const ArmState& state, const Vec3& point) {
  const Vec3 w = state.rate_lat * frame.lateral_axis + state.rate_vert * frame.vertical_axis;
  return w.cross(point - frame.pivot) + state.rate_ax * frame.axial_inward;
}

RotorPose rotor_pose(int arm_index, const ArmState& state, const VehicleParams& vehicle,
                     const ArmParams& arm) {
  const ArmFrame f = arm_frame(arm_index, state, vehicle, arm);
  return {arm_point(f, vehicle.rotor_positions[arm_index], state.s_ax, Vec3::Zero()),
          f.bend * Vec3::UnitZ()};
}

// ---------------------------------------------------------------------------
// Dynamics

namespace {

double up_weight(double beta, double half_width) {
  const double t = std::clamp((beta + half_width) / (2.0 * half_width), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

// Net generalised force on one DOF and whether a stop is carrying it.
struct DofForce {
  double net;
  bool stopped;
};

DofForce dof_force(double x, double rate, double external, double k, double c, double lo,
                   double hi) {
  const double net = external - k * x - c * rate;
  const bool at_hi = x >= hi && rate >= 0.0 && net > 0.0;
  const bool at_lo = x <= lo && rate <= 0.0 && net < 0.0;
  return {net, at_hi || at_lo};
}

}  // namespace

double vertical_stiffness(double beta_vert, const ArmParams& p) {
  const double w = up_weight(beta_vert, p.vertical_blend);
  return w * p.k_up + (1.0 - w) * p.k_down;
}

double vertical_damping(double beta_vert, const ArmParams& p) {
  const double w = up_weight(beta_vert, p.vertical_blend);
  return w * p.c_up + (1.0 - w) * p.c_down;
}

ArmDerivative arm_derivative(const ArmState& s, const ArmLoad& load, const ArmParams& p) {
  const DofForce lat = dof_force(s.beta_lat, s.rate_lat, load.torque_lat, p.k_lat, p.c_lat,
                                 -p.bend_limit, p.bend_limit);
  const DofForce vert = dof_force(s.beta_vert, s.rate_vert, load.torque_vert,
                                  vertical_stiffness(s.beta_vert, p), vertical_damping(s.beta_vert, p),
                                  -p.bend_limit, p.bend_limit);
  const DofForce ax = dof_force(s.s_ax, s.rate_ax, load.force_axial, p.k_ax, p.c_ax, 0.0,
                                p.axial_travel_max);
  ArmDerivative d;
  d.rate_lat = s.rate_lat;
  d.rate_vert = s.rate_vert;
  d.rate_ax = s.rate_ax;
  d.acc_lat = lat.stopped ? 0.0 : lat.net / p.inertia_eff;
  d.acc_vert = vert.stopped ? 0.0 : vert.net / p.inertia_eff;
  d.acc_ax = ax.stopped ? 0.0 : ax.net / p.mass_eff;
  return d;
}

JointReaction joint_reaction(const ArmState& s, const ArmLoad& load, const ArmParams& p) {
  const double kv = vertical_stiffness(s.beta_vert, p);
  const double cv = vertical_damping(s.beta_vert, p);
  const DofForce lat = dof_force(s.beta_lat, s.rate_lat, load.torque_lat, p.k_lat, p.c_lat,
                                 -p.bend_limit, p.bend_limit);
  const DofForce vert = dof_force(s.beta_vert, s.rate_vert, load.torque_vert, kv, cv,
                                  -p.bend_limit, p.bend_limit);
  const DofForce ax = dof_force(s.s_ax, s.rate_ax, load.force_axial, p.k_ax, p.c_ax, 0.0,
                                p.axial_travel_max);
  JointReaction r;
  r.torque_lat = p.k_lat * s.beta_lat + p.c_lat * s.rate_lat + (lat.stopped ? lat.net : 0.0);
  r.torque_vert = kv * s.beta_vert + cv * s.rate_vert + (vert.stopped ? vert.net : 0.0);
  r.force_axial = p.k_ax * s.s_ax + p.c_ax * s.rate_ax + (ax.stopped ? ax.net : 0.0);
  return r;
}

ArmState apply_hard_stops(ArmState s, const ArmParams& p) {
  auto clamp_dof = [](double& x, double& rate, double lo, double hi) {
    if (x >= hi) {
      x = hi;
      rate = std::min(rate, 0.0);
    } else if (x <= lo) {
      x = lo;
      rate = std::max(rate, 0.0);
    }
  };
  clamp_dof(s.beta_lat, s.rate_lat, -p.bend_limit, p.bend_limit);
  clamp_dof(s.beta_vert, s.rate_vert, -p.bend_limit, p.bend_limit);
  clamp_dof(s.s_ax, s.rate_ax, 0.0, p.axial_travel_max);
  return s;
}

void check_finite(const ArmState& s, const char* where) {
  const double v[] = {s.beta_lat, s.beta_vert, s.s_ax, s.rate_lat, s.rate_vert, s.rate_ax};
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericalError(std::string(where) + ": non-finite arm state");
  }
}

namespace {

ArmState advance(const ArmState& s, const ArmDerivative& d, double h) {
  ArmState o;
  o.beta_lat = s.beta_lat + h * d.rate_lat;
  o.beta_vert = s.beta_vert + h * d.rate_vert;
  o.s_ax = s.s_ax + h * d.rate_ax;
  o.rate_lat = s.rate_lat + h * d.acc_lat;
  o.rate_vert = s.rate_vert + h * d.acc_vert;
  o.rate_ax = s.rate_ax + h * d.acc_ax;
  return o;
}

}  // namespace

ArmState arm_step(const ArmState& state, const ArmLoad& load, const ArmParams& params, double dt) {
  require(dt > 0.0, "arm_step: dt must be > 0");
  check_finite(state, "arm_step(input)");
  if (!std::isfinite(load.torque_lat) || !std::isfinite(load.torque_vert) ||
      !std::isfinite(load.force_axial)) {
    throw NumericalError("arm_step(input): non-finite load");
  }
  const ArmDerivative k1 = arm_derivative(state, load, params);
  const ArmDerivative k2 = arm_derivative(advance(state, k1, 0.5 * dt), load, params);
  const ArmDerivative k3 = arm_derivative(advance(state, k2, 0.5 * dt), load, params);
  const ArmDerivative k4 = arm_derivative(advance(state, k3, dt), load, params);
  ArmDerivative sum;
  sum.rate_lat = k1.rate_lat + 2 * k2.rate_lat + 2 * k3.rate_lat + k4.rate_lat;
  sum.rate_vert = k1.rate_vert + 2 * k2.rate_vert + 2 * k3.rate_vert + k4.rate_vert;
  sum.rate_ax = k1.rate_ax + 2 * k2.rate_ax + 2 * k3.rate_ax + k4.rate_ax;
  sum.acc_lat = k1.acc_lat + 2 * k2.acc_lat + 2 * k3.acc_lat + k4.acc_lat;
  sum.acc_vert = k1.acc_vert + 2 * k2.acc_vert + 2 * k3.acc_vert + k4.acc_vert;
  sum.acc_ax = k1.acc_ax + 2 * k2.acc_ax + 2 * k3.acc_ax + k4.acc_ax;
  ArmState out = apply_hard_stops(advance(state, sum, dt / 6.0), params);
  check_finite(out, "arm_step(output)");
  return out;
}

double arm_energy(const ArmState& s, const ArmParams& p) {
  // Vertical potential integrates the blended stiffness (Simpson, 64 panels).
  auto vert_potential = [&](double beta) {
    constexpr int n = 64;
    const double h = beta / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double x = i * h;
      const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      acc += w * vertical_stiffness(x, p) * x;
    }
    return acc * h / 3.0;
  };
  return 0.5 * p.inertia_eff * (s.rate_lat * s.rate_lat + s.rate_vert * s.rate_vert) +
         0.5 * p.mass_eff * s.rate_ax * s.rate_ax + 0.5 * p.k_lat * s.beta_lat * s.beta_lat +
         vert_potential(s.beta_vert) + 0.5 * p.k_ax * s.s_ax * s.s_ax;
}

// ---------------------------------------------------------------------------
// Traces

std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::lateral: return "lateral";
    case Channel::up: return "up";
    case Channel::down: return "down";
    case Channel::axial: return "axial";
  }
  return "?";
}

Channel parse_channel(std::string_view name) {
  if (name == "lateral") return Channel::lateral;
  if (name == "up") return Channel::up;
  if (name == "down") return Channel::down;
  if (name == "axial") return Channel::axial;
  throw ContractError("unknown channel '" + std::string(name) + "' (lateral|up|down|axial)");
}

void RecoveryTrace::validate() const {
  require(timestamps.size() == values.size(), "trace: timestamps/values length mismatch");
  require(timestamps.size() >= 2, "trace: needs at least 2 samples");
  for (size_t i = 1; i < timestamps.size(); ++i) {
    require(timestamps[i] > timestamps[i - 1], "trace: timestamps must be strictly increasing");
  }
}

double default_threshold(Channel channel, double peak) {
  return channel == Channel::axial ? 0.01 * std::abs(peak) : 1.0;
}

std::optional<double> recovery_time(const RecoveryTrace& trace, double threshold, double rest) {
  trace.validate();
  require(threshold >= 0.0, "recovery_time: threshold must be >= 0");
  const auto& t = trace.timestamps;
  const size_t n = t.size();
  std::vector<double> dev(n);
  for (size_t i = 0; i < n; ++i) dev[i] = trace.values[i] - rest;

  size_t peak = 0;
  for (size_t i = 1; i < n; ++i) {
    if (std::abs(dev[i]) > std::abs(dev[peak])) peak = i;
  }
  if (std::abs(dev[peak]) <= threshold) return 0.0;

  for (size_t j = peak + 1; j < n; ++j) {
    if (std::abs(dev[j]) <= threshold) {
      const double prev = dev[j - 1];
      const double level = prev > 0.0 ? threshold : -threshold;
      const double frac = (prev - level) / (prev - dev[j]);
      return t[j - 1] + frac * (t[j] - t[j - 1]) - t[peak];
    }
    // Jumped across the band between samples.
    if ((dev[j - 1] > threshold && dev[j] < -threshold) ||
        (dev[j - 1] < -threshold && dev[j] > threshold)) {
      const double level = dev[j - 1] > 0.0 ? threshold : -threshold;
      const double frac = (dev[j - 1] - level) / (dev[j - 1] - dev[j]);
      return t[j - 1] + frac * (t[j] - t[j - 1]) - t[peak];
    }
  }
  return std::nullopt;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_cell(std::string_view cell, int line, const char* column) {
  cell = trim(cell);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
    throw ParseError(fmt::format("non-numeric {} cell '{}'", column, cell), line);
  }
  return v;
}

}  // namespace

RecoveryTrace load_trace(const std::filesystem::path& path, Channel channel) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace file " + path.string());
  RecoveryTrace trace;
  trace.channel = channel;
  std::string raw;
  int line = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line;
    const std::string_view text = trim(raw);
    if (text.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (text != "t_s,value") {
        throw ParseError(fmt::format("expected header 't_s,value', got '{}'", text), line);
      }
      continue;
    }
    const auto comma = text.find(',');
    if (comma == std::string_view::npos) throw ParseError("missing value column", line);
    if (text.find(',', comma + 1) != std::string_view::npos) {
      throw ParseError("expected exactly two columns", line);
    }
    const double ts = parse_cell(text.substr(0, comma), line, "t_s");
    const double value = parse_cell(text.substr(comma + 1), line, "value");
    if (!trace.timestamps.empty() && ts <= trace.timestamps.back()) {
      throw ParseError(fmt::format("timestamp {} not strictly increasing", ts), line);
    }
    trace.timestamps.push_back(ts);
    trace.values.push_back(value);
  }
  if (!header_seen) throw ParseError("empty trace file " + path.string(), 0);
  if (trace.timestamps.size() < 2) {
    throw ParseError("trace needs at least 2 samples, got " + std::to_string(trace.timestamps.size()), line);
  }
  return trace;
}

void write_trace(const std::filesystem::path& path, const RecoveryTrace& trace) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write trace file " + path.string());
  out << "t_s,value\n";
  for (size_t i = 0; i < trace.timestamps.size(); ++i) {
    out << fmt::format("{:.9g},{:.9g}\n", trace.timestamps[i], trace.values[i]);
  }
}

namespace {

ArmState release_state(Channel channel, double peak) {
  ArmState s;
  switch (channel) {
    case Channel::lateral: s.beta_lat = deg2rad(peak); break;
    case Channel::up: s.beta_vert = deg2rad(std::abs(peak)); break;
    case Channel::down: s.beta_vert = -deg2rad(std::abs(peak)); break;
    case Channel::axial: s.s_ax = std::abs(peak) * 1e-3; break;
  }
  return s;
}

double channel_value(Channel channel, const ArmState& s) {
  switch (channel) {
    case Channel::lateral: return rad2deg(s.beta_lat);
    case Channel::up:
    case Channel::down: return rad2deg(s.beta_vert);
    case Channel::axial: return s.s_ax * 1e3;
  }
  return 0.0;
}

void check_release_peak(Channel channel, double peak, const ArmParams& p) {
  if (channel == Channel::axial) {
    require(std::abs(peak) * 1e-3 <= p.axial_travel_max, "release peak exceeds axial travel");
  } else {
    require(deg2rad(std::abs(peak)) <= p.bend_limit, "release peak exceeds bending limit");
  }
}

}  // namespace

RecoveryTrace simulate_release(const ArmParams& params, Channel channel, double peak,
                               double duration, double dt, int sample_every) {
  require(duration > 0.0 && dt > 0.0 && sample_every >= 1, "simulate_release: bad timing arguments");
  check_release_peak(channel, peak, params);
  RecoveryTrace trace;
  trace.channel = channel;
  ArmState s = release_state(channel, peak);
  const long steps = std::lround(duration / dt);
  trace.timestamps.push_back(0.0);
  trace.values.push_back(channel_value(channel, s));
  for (long i = 1; i <= steps; ++i) {
    s = arm_step(s, ArmLoad{}, params, dt);
    if (i % sample_every == 0) {
      trace.timestamps.push_back(static_cast<double>(i) * dt);
      trace.values.push_back(channel_value(channel, s));
    }
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Identification

double channel_inertia(Channel channel, const ArmParams& p) {
  return channel == Channel::axial ? p.mass_eff : p.inertia_eff;
}

void set_channel(ArmParams& p, Channel channel, double k, double c) {
  switch (channel) {
    case Channel::lateral: p.k_lat = k; p.c_lat = c; break;
    case Channel::up: p.k_up = k; p.c_up = c; break;
    case Channel::down: p.k_down = k; p.c_down = c; break;
    case Channel::axial: p.k_ax = k; p.c_ax = c; break;
  }
}

std::optional<double> release_recovery_time(const ArmParams& base, Channel channel, double peak,
                                            double omega, double zeta, double dt) {
  ArmParams p = base;
  const double inertia = channel_inertia(channel, p);
  set_channel(p, channel, inertia * omega * omega, 2.0 * zeta * inertia * omega);
  check_release_peak(channel, peak, p);

  const double h = std::min(dt, 0.02 / omega);
  const double threshold = default_threshold(channel, peak);
  const double t_max = 40.0 / (zeta * omega);
  ArmState s = release_state(channel, peak);
  double prev_t = 0.0;
  double prev_v = channel_value(channel, s);
  for (long i = 1; static_cast<double>(i) * h <= t_max; ++i) {
    s = arm_step(s, ArmLoad{}, p, h);
    const double t = static_cast<double>(i) * h;
    const double v = channel_value(channel, s);
    if (std::abs(v) <= threshold || (prev_v > threshold && v < -threshold) ||
        (prev_v < -threshold && v > threshold)) {
      const double level = prev_v > 0.0 ? threshold : -threshold;
      return prev_t + (prev_v - level) / (prev_v - v) * (t - prev_t);
    }
    prev_t = t;
    prev_v = v;
  }
  return std::nullopt;
}

FitResult fit_arm_params(const FitTarget& target, const ArmParams& base, const FitConfig& cfg) {
  require(target.recovery_time > 0.0, "fit: recovery_time must be > 0");
  require(std::abs(target.peak_deflection) > default_threshold(target.channel, target.peak_deflection),
          "fit: peak deflection must exceed the recovery threshold");
  require(cfg.zeta_min > 0 && cfg.zeta_min <= cfg.zeta_nominal && cfg.zeta_nominal <= cfg.zeta_max,
          "fit: need 0 < zeta_min <= zeta_nominal <= zeta_max");
  require(cfg.omega_min > 0 && cfg.omega_min < cfg.omega_max, "fit: need 0 < omega_min < omega_max");

  const double goal = target.recovery_time;
  auto time_at = [&](double omega, double zeta) {
    const auto t = release_recovery_time(base, target.channel, target.peak_deflection, omega, zeta, cfg.dt);
    return t.value_or(std::numeric_limits<double>::infinity());
  };
  auto finish = [&](double omega, double zeta, double achieved) {
    const double inertia = channel_inertia(target.channel, base);
    return FitResult{inertia * omega * omega, 2.0 * zeta * inertia * omega, omega, zeta, achieved};
  };

  // Stage 1: natural frequency at the nominal damping ratio; T falls as omega grows.
  const double zeta0 = cfg.zeta_nominal;
  const double t_slow = time_at(cfg.omega_min, zeta0);
  const double t_fast = time_at(cfg.omega_max, zeta0);
  if (goal <= t_slow && goal >= t_fast) {
    double lo = std::log(cfg.omega_min), hi = std::log(cfg.omega_max);
    double omega = 0.0, achieved = 0.0;
    for (int it = 0; it < cfg.max_iter; ++it) {
      omega = std::exp(0.5 * (lo + hi));
      achieved = time_at(omega, zeta0);
      if (std::abs(achieved - goal) <= cfg.rel_tol * goal) break;
      (achieved > goal ? lo : hi) = std::log(omega);
    }
    return finish(omega, zeta0, achieved);
  }

  // Stage 2: pin omega at the violated bound and move the damping ratio;
  // T grows with zeta.
  const bool need_faster = goal < t_fast;
  const double omega = need_faster ? cfg.omega_max : cfg.omega_min;
  double lo = need_faster ? cfg.zeta_min : zeta0;
  double hi = need_faster ? zeta0 : cfg.zeta_max;
  const double t_lo = time_at(omega, lo), t_hi = time_at(omega, hi);
  if (goal < t_lo || goal > t_hi) {
    throw FitInfeasible(fmt::format(
        "fit: recovery time {:.4g} s for channel {} unreachable; attainable range [{:.4g}, {:.4g}] s "
        "within omega [{:.4g}, {:.4g}] rad/s and zeta [{:.3g}, {:.3g}]",
        goal, to_string(target.channel), time_at(cfg.omega_max, cfg.zeta_min),
        time_at(cfg.omega_min, cfg.zeta_max), cfg.omega_min, cfg.omega_max, cfg.zeta_min, cfg.zeta_max));
  }
  double zeta = 0.0, achieved = 0.0;
  for (int it = 0; it < cfg.max_iter; ++it) {
    zeta = 0.5 * (lo + hi);
    achieved = time_at(omega, zeta);
    if (std::abs(achieved - goal) <= cfg.rel_tol * goal) break;
    (achieved > goal ? hi : lo) = zeta;
  }
  return finish(omega, zeta, achieved);
}

const std::vector<FitTarget>& measured_recovery_targets() {
  static const std::vector<FitTarget> targets{{32.0, 0.72, Channel::lateral},
                                              {28.0, 0.27, Channel::up},
                                              {19.0, 0.62, Channel::down},
                                              {3.66, 0.75, Channel::axial}};
  return targets;
}

}  // namespace holoarm
