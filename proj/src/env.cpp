#include "holoarm/env.hpp"

#include <algorithm>
#include <cmath>

namespace holoarm {

int EnvConfig::substeps() const {
  const double ratio = 1.0 / (control_rate * sim.dt);
  const long n = std::lround(ratio);
  require(n >= 1 && std::abs(ratio - double(n)) < 1e-9, "control period must be an integer multiple of sim.dt");
  return static_cast<int>(n);
}

void EnvConfig::validate() const {
  sim.validate();
  require(control_rate > 0.0, "train.control_rate must be > 0");
  require(episode_length > 0.0, "train.episode_length must be > 0");
  require(history >= 0, "train.history must be >= 0");
  require(max_position_error > 0.0 && max_tilt > 0.0, "termination limits must be > 0");
  require(randomization.mass >= 0.0 && randomization.mass < 1.0, "train.rand_mass must be in [0,1)");
  require(randomization.thrust >= 0.0 && randomization.thrust < 1.0, "train.rand_thrust must be in [0,1)");
  require(randomization.arm_stiffness >= 0.0 && randomization.arm_stiffness < 1.0,
          "train.rand_arm_stiffness must be in [0,1)");
  require(init_offset >= 0.0 && init_velocity >= 0.0 && init_tilt >= 0.0 && init_rate >= 0.0,
          "initial-state ranges must be >= 0");
  substeps();
}

Eigen::VectorXd make_observation(const RigidBodyState& state, const Vec3& target,
                                 const std::vector<MotorArray>& history) {
  Eigen::VectorXd obs(18 + 4 * history.size());
  obs.segment<3>(0) = target - state.position;
  const Mat3 r = state.attitude.normalized().toRotationMatrix();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) obs[3 + 3 * i + j] = r(i, j);
  }
  obs.segment<3>(12) = state.velocity;
  obs.segment<3>(15) = state.angular_velocity;
  for (size_t h = 0; h < history.size(); ++h) {
    for (int k = 0; k < kNumArms; ++k) obs[18 + 4 * h + k] = history[h][k];
  }
  return obs;
}

double reward(const RigidBodyState& state, const MotorArray& action, const Vec3& target,
              const RewardWeights& w, double hover_action) {
  double da = 0.0;
  for (double a : action) da += (a - hover_action) * (a - hover_action);
  return w.alive - w.position * (target - state.position).squaredNorm() - w.velocity * state.velocity.squaredNorm() -
         w.angular * state.angular_velocity.squaredNorm() - w.action * da;
}

HoverEnv::HoverEnv(EnvConfig config)
    : config_(std::move(config)), sim_(config_.sim), target_(config_.target),
      hover_action_(hover_command(config_.sim.vehicle)) {
  config_.validate();
}

Eigen::VectorXd HoverEnv::start(const SimConfig& sim_config, const SimState& initial) {
  sim_ = VehicleSim(sim_config, initial);
  history_.assign(config_.history, MotorArray{hover_action_, hover_action_, hover_action_, hover_action_});
  done_ = false;
  steps_ = 0;
  return observation();
}

Eigen::VectorXd HoverEnv::reset(const SimState& initial) {
  target_ = config_.target;
  return start(config_.sim, initial);
}

Eigen::VectorXd HoverEnv::reset(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SimConfig sc = config_.sim;
  const Randomization& dr = config_.randomization;
  if (dr.enabled) {
    const double mass_scale = 1.0 + dr.mass * u(rng);
    sc.vehicle.mass *= mass_scale;
    sc.vehicle.inertia_diag *= mass_scale;
    const double thrust_scale = 1.0 + dr.thrust * u(rng);
    for (double& c : sc.vehicle.thrust_coeffs) c *= thrust_scale;
    const double k_scale = 1.0 + dr.arm_stiffness * u(rng);
    for (double* k : {&sc.arm.k_lat, &sc.arm.k_up, &sc.arm.k_down, &sc.arm.k_ax}) *k *= k_scale;
  }
  target_ = config_.target;

  SimState s;
  Vec3 dir(u(rng), u(rng), u(rng));
  if (dir.norm() < 1e-9) dir = Vec3::UnitX();
  const double radius = config_.init_offset * std::cbrt(0.5 * (u(rng) + 1.0));
  s.body.position = target_ + radius * dir.normalized();
  s.body.velocity = config_.init_velocity * Vec3(u(rng), u(rng), u(rng));
  Vec3 axis(u(rng), u(rng), 0.0);
  if (axis.norm() < 1e-9) axis = Vec3::UnitX();
  const double tilt = config_.init_tilt * 0.5 * (u(rng) + 1.0);
  const double yaw = std::numbers::pi * u(rng);
  s.body.attitude = Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())) * Quat(Eigen::AngleAxisd(tilt, axis.normalized()));
  s.body.angular_velocity = config_.init_rate * Vec3(u(rng), u(rng), u(rng));
  s.motors.actual = {hover_action_, hover_action_, hover_action_, hover_action_};
  s.motors.commanded = s.motors.actual;
  return start(sc, s);
}

Eigen::VectorXd HoverEnv::observation() const { return make_observation(sim_.state().body, target_, history_); }

StepResult HoverEnv::step(const MotorArray& action) {
  require(!done_, "env_step: episode is done, call reset first");
  StepResult res;
  MotorArray a;
  for (int i = 0; i < kNumArms; ++i) {
    const double v = std::isnan(action[i]) ? 0.0 : action[i];
    a[i] = std::clamp(v, 0.0, 1.0);
    if (a[i] != action[i]) res.info.clamped = true;
  }

  bool numerical_failure = false;
  try {
    for (int k = 0, n = config_.substeps(); k < n; ++k) sim_.step(a);
  } catch (const NumericalError&) {
    numerical_failure = true;
  }
  ++steps_;
  if (config_.history > 0) {
    history_.pop_back();
    history_.insert(history_.begin(), a);
  }

  const RigidBodyState& s = sim_.state().body;
  res.info.position_error = (target_ - s.position).norm();
  res.info.crashed = numerical_failure || !(res.info.position_error <= config_.max_position_error) ||
                     !(tilt_angle(s.attitude) <= config_.max_tilt);
  const double elapsed = steps_ / config_.control_rate;
  res.info.truncated = !res.info.crashed && elapsed >= config_.episode_length - 1e-9;
  res.reward = reward(s, a, target_, config_.reward, hover_action_);
  if (res.info.crashed) res.reward += config_.reward.crash;
  if (!std::isfinite(res.reward)) res.reward = config_.reward.crash;
  res.done = res.info.crashed || res.info.truncated;
  done_ = res.done;
  res.observation = observation();
  return res;
}

// ---------------------------------------------------------------------------

PolicyController::PolicyController(PolicyNet net, bool reference_frame, VehicleParams model)
    : net_(std::move(net)), reference_frame_(reference_frame), model_(std::move(model)) {
  reset();
}

void PolicyController::reset() {
  const double h = hover_command(model_);
  history_.assign(net_.history, MotorArray{h, h, h, h});
}

MotorArray PolicyController::command(const RigidBodyState& state, const ControlTarget& target, double) {
  MotorArray a;
  if (!reference_frame_) {
    a = policy_forward(net_, make_observation(state, target.position, history_));
  } else {
    const Vec3 lift = target.acceleration + model_.gravity * Vec3::UnitZ();
    const Quat q = Quat::FromTwoVectors(lift, Vec3::UnitZ());
    RigidBodyState rel;
    rel.position = q * (state.position - target.position);
    rel.velocity = q * (state.velocity - target.velocity);
    rel.attitude = (q * state.attitude).normalized();
    rel.angular_velocity = state.angular_velocity;
    a = policy_forward(net_, make_observation(rel, Vec3::Zero(), history_));
  }
  if (!history_.empty()) {
    history_.pop_back();
    history_.insert(history_.begin(), a);
  }
  if (!reference_frame_) return a;
  const double scale = (target.acceleration + model_.gravity * Vec3::UnitZ()).norm() / model_.gravity;
  if (scale == 1.0) return a;
  MotorArray out;
  for (int i = 0; i < kNumArms; ++i) {
    out[i] = thrust_to_command(std::min(motor_thrust(a[i], model_) * scale, model_.max_thrust()), model_);
  }
  return out;
}

EvalMetrics evaluate(FlightController& controller, const EnvConfig& config, int n_episodes, std::uint64_t seed,
                     double offset) {
  require(n_episodes > 0, "evaluate: n_episodes must be > 0 (no metrics for an empty evaluation)");
  HoverEnv env(config);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  EvalMetrics m;
  m.episodes = n_episodes;
  int crashes = 0, successes = 0;
  for (int ep = 0; ep < n_episodes; ++ep) {
    Vec3 dir(normal(rng), normal(rng), normal(rng));
    if (dir.norm() < 1e-9) dir = Vec3::UnitX();
    SimState s;
    s.body.position = config.target + offset * dir.normalized();
    const double h = env.hover_action();
    s.motors.actual = {h, h, h, h};
    s.motors.commanded = s.motors.actual;
    env.reset(s);
    controller.reset();
    ControlTarget target;
    target.position = config.target;
    double sum = 0.0;
    int n = 0;
    StepResult r;
    do {
      r = env.step(controller.command(env.sim().state().body, target, 1.0 / config.control_rate));
      sum += r.info.position_error;
      m.max_error = std::max(m.max_error, r.info.position_error);
      ++n;
    } while (!r.done);
    const double mean = sum / n;
    m.mean_error += mean;
    if (r.info.crashed) ++crashes;
    else if (mean < 0.1) ++successes;
  }
  m.mean_error /= n_episodes;
  m.crash_rate = double(crashes) / n_episodes;
  m.success_rate = double(successes) / n_episodes;
  return m;
}

}  // namespace holoarm
