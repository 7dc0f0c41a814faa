#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "holoarm/ppo.hpp"

using namespace holoarm;

namespace {

// Central differences of sum(w .* f(x)) over every flat parameter.
Eigen::VectorXd numeric_gradient(Mlp net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& w, double h = 1e-6) {
  const Eigen::VectorXd p0 = net.params();
  Eigen::VectorXd g(p0.size());
  for (Eigen::Index i = 0; i < p0.size(); ++i) {
    Eigen::VectorXd p = p0;
    p[i] += h;
    net.set_params(p);
    const double up = (w.array() * net.forward_batch(x).array()).sum();
    p[i] -= 2.0 * h;
    net.set_params(p);
    const double down = (w.array() * net.forward_batch(x).array()).sum();
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double relative_gap(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-12});
}

PpoConfig tiny_ppo(std::uint64_t seed) {
  PpoConfig c;
  c.seed = seed;
  c.num_envs = 4;
  c.horizon = 64;
  c.total_steps = 4 * 64 * 3;
  c.minibatch = 128;
  c.epochs = 2;
  c.hidden = 16;
  c.eval_every = 1;
  c.eval_episodes = 2;
  return c;
}

}  // namespace

TEST(Mlp, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  for (OutputSquash sq : {OutputSquash::linear, OutputSquash::sigmoid}) {
    Mlp net({5, 8, 6, 3}, sq);
    net.init(rng, 0.5);
    std::normal_distribution<double> n01;
    for (int i = 0; i < net.num_layers(); ++i) net.bias(i) = net.bias(i).unaryExpr([&](double) { return 0.1 * n01(rng); });
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 7);
    const Eigen::MatrixXd w = Eigen::MatrixXd::Random(3, 7);
    Mlp::Cache cache;
    net.forward_batch(x, &cache);
    EXPECT_LT(relative_gap(net.backward(cache, w), numeric_gradient(net, x, w)), 1e-6);
  }
}

TEST(Mlp, ParamsRoundTripAndLayout) {
  std::mt19937_64 rng(3);
  Mlp net({4, 3, 2}, OutputSquash::linear);
  net.init(rng);
  EXPECT_EQ(net.num_params(), 4 * 3 + 3 + 3 * 2 + 2);
  const Eigen::VectorXd p = net.params();
  EXPECT_DOUBLE_EQ(p[1], net.weight(0)(1, 0));  // column-major
  EXPECT_DOUBLE_EQ(p[12], net.bias(0)[0]);
  Mlp other({4, 3, 2}, OutputSquash::linear);
  other.set_params(p);
  const Eigen::VectorXd x = Eigen::VectorXd::Random(4);
  EXPECT_EQ(other.forward(x), net.forward(x));
  EXPECT_THROW(other.set_params(Eigen::VectorXd::Zero(3)), ContractError);
}

TEST(Policy, SaveLoadIsExact) {
  std::mt19937_64 rng(11);
  const PolicyNet net = make_policy(26, 16, 2, 2, rng, 0.43, -1.6);
  const auto path = std::filesystem::temp_directory_path() / "holoarm_test_policy.txt";
  save_policy(path, net);
  const PolicyNet back = load_policy(path);
  EXPECT_EQ(back.mean.params(), net.mean.params());
  EXPECT_EQ(back.log_std, net.log_std);
  EXPECT_EQ(back.history, 2);
  const Eigen::VectorXd obs = Eigen::VectorXd::Random(26);
  EXPECT_EQ(policy_forward(back, obs), policy_forward(net, obs));
  EXPECT_THROW(policy_forward(net, Eigen::VectorXd::Zero(25)), ContractError);
  std::filesystem::remove(path);
  EXPECT_THROW(load_policy(path), IoError);
}

TEST(Policy, InitialActionNearRequested) {
  std::mt19937_64 rng(5);
  const PolicyNet net = make_policy(26, 64, 2, 2, rng, 0.43, -1.6);
  for (double a : policy_forward(net, Eigen::VectorXd::Zero(26))) EXPECT_NEAR(a, 0.43, 1e-9);
}

TEST(Env, ObservationLayout) {
  RigidBodyState s;
  s.position = Vec3(0.1, 0.2, 0.7);
  s.velocity = Vec3(1.0, 2.0, 3.0);
  s.angular_velocity = Vec3(-1.0, -2.0, -3.0);
  s.attitude = Quat(Eigen::AngleAxisd(0.3, Vec3::UnitZ()));
  const std::vector<MotorArray> hist{{0.1, 0.2, 0.3, 0.4}, {0.5, 0.6, 0.7, 0.8}};
  const Eigen::VectorXd o = make_observation(s, Vec3(0.0, 0.0, 1.0), hist);
  ASSERT_EQ(o.size(), 26);
  EXPECT_NEAR(o[0], -0.1, 1e-15);
  EXPECT_NEAR(o[2], 0.3, 1e-15);
  EXPECT_NEAR(o[3], std::cos(0.3), 1e-12);   // R(0,0)
  EXPECT_NEAR(o[4], -std::sin(0.3), 1e-12);  // R(0,1)
  EXPECT_DOUBLE_EQ(o[13], 2.0);
  EXPECT_DOUBLE_EQ(o[17], -3.0);
  EXPECT_DOUBLE_EQ(o[18], 0.1);
  EXPECT_DOUBLE_EQ(o[25], 0.8);
}

TEST(Env, RewardTerms) {
  RewardWeights w;
  RigidBodyState s;
  s.position = Vec3(0.0, 0.0, 1.0);
  EXPECT_DOUBLE_EQ(reward(s, {0.4, 0.4, 0.4, 0.4}, s.position, w, 0.4), w.alive);
  s.velocity = Vec3(0.0, 2.0, 0.0);
  const double r = reward(s, {0.5, 0.4, 0.4, 0.4}, Vec3(0.3, 0.0, 1.0), w, 0.4);
  EXPECT_NEAR(r, w.alive - w.position * 0.09 - w.velocity * 4.0 - w.action * 0.01, 1e-12);
}

TEST(Env, HoverActionHoldsAndEpisodeTruncates) {
  EnvConfig cfg;
  cfg.randomization.enabled = false;
  HoverEnv env(cfg);
  SimState start;
  start.body.position = cfg.target;
  const double u = hover_command(cfg.sim.vehicle);
  start.motors.actual = {u, u, u, u};
  env.reset(start);
  StepResult r;
  int steps = 0;
  while (!env.done()) {
    r = env.step({u, u, u, u});
    ++steps;
  }
  EXPECT_TRUE(r.info.truncated);
  EXPECT_FALSE(r.info.crashed);
  EXPECT_EQ(steps, static_cast<int>(std::lround(cfg.episode_length * cfg.control_rate)));
  EXPECT_LT(r.info.position_error, 0.01);
  EXPECT_THROW(env.step({u, u, u, u}), ContractError);
}

TEST(Env, ClampedActionIsFlagged) {
  EnvConfig cfg;
  HoverEnv env(cfg);
  std::mt19937_64 rng(1);
  env.reset(rng);
  EXPECT_TRUE(env.step({1.5, 0.4, 0.4, -0.2}).info.clamped);
}

TEST(Adam, ConstantGradientMovesByLearningRate) {
  Adam adam;
  Eigen::VectorXd p = Eigen::VectorXd::Zero(3);
  const Eigen::VectorXd g = Eigen::Vector3d(2.0, -0.5, 1e-3);
  for (int i = 0; i < 10; ++i) adam.step(p, g, 0.01);
  // Bias-corrected moments equal g and g^2 for a constant gradient.
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(p[i], -10 * 0.01 * g[i] / (std::abs(g[i]) + adam.eps), 1e-9);
}

TEST(Eval, PdHoldsHover) {
  PdController pd(VehicleParams{});
  const EvalMetrics m = evaluate(pd, EnvConfig{}, 5, 777, 0.3);
  EXPECT_EQ(m.episodes, 5);
  EXPECT_EQ(m.crash_rate, 0.0);
  EXPECT_LT(m.mean_error, 0.1);
}

TEST(Ppo, ShortRunIsSeedDeterministic) {
  const TrainResult a = train(tiny_ppo(4));
  const TrainResult b = train(tiny_ppo(4));
  const TrainResult c = train(tiny_ppo(5));
  ASSERT_EQ(a.log.size(), 3u);
  ASSERT_EQ(b.log.size(), a.log.size());
  for (size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].steps, b.log[i].steps);
    EXPECT_EQ(a.log[i].eval_err_m, b.log[i].eval_err_m);
    EXPECT_TRUE(a.log[i].mean_return == b.log[i].mean_return ||
                (std::isnan(a.log[i].mean_return) && std::isnan(b.log[i].mean_return)));
  }
  EXPECT_EQ(a.policy.mean.params(), b.policy.mean.params());
  EXPECT_NE(a.policy.mean.params(), c.policy.mean.params());
  EXPECT_FALSE(a.diverged);
}

TEST(Ppo, RejectsBadConfig) {
  PpoConfig c = tiny_ppo(1);
  c.clip = 0.0;
  EXPECT_THROW(c.validate(), ContractError);
  c = tiny_ppo(1);
  c.gamma = 1.5;
  EXPECT_THROW(c.validate(), ContractError);
}
