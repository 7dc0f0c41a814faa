// Hover environment around the coupled simulator, observation/reward
// definitions, the policy-backed controller and the evaluation harness.
#pragma once

#include <random>
#include <vector>

#include "holoarm/controller.hpp"
#include "holoarm/mlp.hpp"
#include "holoarm/vehicle_sim.hpp"

namespace holoarm {

struct RewardWeights {
  double alive = 2.0;
  double position = 2.0;
  double velocity = 0.05;
  double angular = 0.01;
  double action = 0.2;
  double crash = -10.0;
};

struct Randomization {
  bool enabled = true;
  double mass = 0.10;           // relative half-range
  double thrust = 0.10;
  double arm_stiffness = 0.20;
};

struct EnvConfig {
  SimConfig sim;
  double control_rate = 100.0;   // Hz
  double episode_length = 5.0;   // s
  int history = 2;
  RewardWeights reward;
  Randomization randomization;
  double max_position_error = 3.0;  // m
  double max_tilt = deg2rad(80.0);
  Vec3 target{0.0, 0.0, 1.0};
  // Training start distribution.
  double init_offset = 0.5;       // m, radius of the position offset ball
  double init_velocity = 0.3;     // m/s per axis
  double init_tilt = deg2rad(15.0);
  double init_rate = 0.5;         // rad/s per axis

  int substeps() const;
  int obs_dim() const { return 18 + 4 * history; }
  void validate() const;
};

// [target - p (3), R row-major (9), v (3), omega body (3), history newest
// first (4H)]. Arm state is not part of the observation.
Eigen::VectorXd make_observation(const RigidBodyState& state, const Vec3& target,
                                 const std::vector<MotorArray>& history);

// Per-step shaping reward without the crash term.
double reward(const RigidBodyState& state, const MotorArray& action, const Vec3& target,
              const RewardWeights& weights, double hover_action);

struct StepInfo {
  bool clamped = false;    // action had entries outside [0,1]
  bool crashed = false;
  bool truncated = false;  // episode time limit
  double position_error = 0.0;
};

struct StepResult {
  Eigen::VectorXd observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

class HoverEnv {
 public:
  explicit HoverEnv(EnvConfig config);

  // Samples domain randomisation (if enabled) and a start state.
  Eigen::VectorXd reset(std::mt19937_64& rng);
  // Nominal parameters, given start state.
  Eigen::VectorXd reset(const SimState& initial);

  StepResult step(const MotorArray& action);

  bool done() const { return done_; }
  double time() const { return sim_.state().time; }
  const VehicleSim& sim() const { return sim_; }
  const EnvConfig& config() const { return config_; }
  double hover_action() const { return hover_action_; }
  void set_target(const Vec3& target) { target_ = target; }
  const Vec3& target() const { return target_; }
  Eigen::VectorXd observation() const;

 private:
  Eigen::VectorXd start(const SimConfig& sim_config, const SimState& initial);

  EnvConfig config_;
  VehicleSim sim_;
  Vec3 target_;
  std::vector<MotorArray> history_;
  double hover_action_;
  bool done_ = true;
  int steps_ = 0;
};

/// Runs a policy network as a flight controller.
///
/// With `reference_frame` on, the state is expressed in the frame moving with
/// the target: velocity relative to the target velocity, axes tilted so that
/// g + target acceleration points down, and thrusts rescaled by
/// |g + a| / g. A stationary target reduces this to the plain observation.
class PolicyController : public FlightController {
 public:
  explicit PolicyController(PolicyNet net, bool reference_frame = true, VehicleParams model = {});
  void reset() override;
  MotorArray command(const RigidBodyState& state, const ControlTarget& target, double dt) override;

 private:
  PolicyNet net_;
  bool reference_frame_;
  VehicleParams model_;
  std::vector<MotorArray> history_;
};

struct EvalMetrics {
  int episodes = 0;
  double mean_error = 0.0;  // m, average over episodes of the per-episode mean
  double max_error = 0.0;   // m, largest single-sample error
  double success_rate = 0.0;
  double crash_rate = 0.0;
};

// Hover episodes at nominal parameters from offsets of `offset` metres in
// seeded random directions. Success: no crash and episode mean error < 0.1 m.
EvalMetrics evaluate(FlightController& controller, const EnvConfig& config, int n_episodes, std::uint64_t seed,
                     double offset = 0.3);

}  // namespace holoarm
