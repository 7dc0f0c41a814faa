// Clipped-surrogate actor-critic (PPO) with GAE over a set of hover
// environments. Single synchronisation point per iteration; every
// environment owns its own seeded stream, so logs are seed-deterministic.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "holoarm/env.hpp"

namespace holoarm {

struct PpoConfig {
  std::uint64_t seed = 1;
  long total_steps = 2'000'000;
  int num_envs = 32;
  int horizon = 128;
  int epochs = 5;
  int minibatch = 1024;
  double gamma = 0.99;
  double lambda = 0.95;
  double clip = 0.2;
  double policy_lr = 3e-4;
  double value_lr = 1e-3;
  double entropy_coef = 0.0;
  double max_grad_norm = 0.5;
  double reward_scale = 0.1;
  int hidden = 64;
  int hidden_layers = 2;
  double init_log_std = -1.6;  // std ~0.2 in command units
  double min_log_std = -4.0;
  int eval_every = 10;         // iterations
  int eval_episodes = 10;
  std::uint64_t eval_seed = 12345;
  EnvConfig env;

  void validate() const;
};

struct TrainLogRow {
  int iter = 0;
  long steps = 0;
  double mean_return = 0.0;  // completed episodes this iteration, NaN if none
  double eval_err_m = 0.0;   // latest evaluation mean position error
};

struct TrainResult {
  PolicyNet policy;          // best evaluated policy (initial policy for zero steps)
  std::vector<TrainLogRow> log;
  double best_eval_err = 0.0;
  bool diverged = false;
  std::string message;
};

TrainResult train(const PpoConfig& config, const std::function<void(const TrainLogRow&)>& on_iteration = {});

// Adam on a flat parameter vector.
struct Adam {
  Eigen::VectorXd m, v;
  long t = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr);
};

}  // namespace holoarm
