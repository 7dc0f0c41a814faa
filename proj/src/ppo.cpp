#include "holoarm/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

namespace holoarm {

void PpoConfig::validate() const {
  env.validate();
  require(total_steps >= 0, "train.total_steps must be >= 0");
  require(num_envs > 0 && horizon > 0 && epochs > 0 && minibatch > 0, "train: batch sizes must be > 0");
  require(gamma > 0.0 && gamma <= 1.0 && lambda >= 0.0 && lambda <= 1.0, "train: gamma/lambda out of range");
  require(clip > 0.0, "train.clip must be > 0");
  require(policy_lr > 0.0 && value_lr > 0.0, "train: learning rates must be > 0");
  require(hidden > 0 && hidden_layers >= 1, "train: network sizes must be > 0");
  require(eval_every > 0 && eval_episodes > 0, "train: evaluation settings must be > 0");
}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr) {
  if (m.size() != params.size()) {
    m = Eigen::VectorXd::Zero(params.size());
    v = Eigen::VectorXd::Zero(params.size());
  }
  ++t;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1, double(t));
  const double c2 = 1.0 - std::pow(beta2, double(t));
  params.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

void clip_norm(Eigen::VectorXd& g, double max_norm) {
  const double n = g.norm();
  if (n > max_norm) g *= max_norm / n;
}

double eval_error(const PolicyNet& policy, const PpoConfig& cfg, double* crash_rate) {
  PolicyController ctl(policy);
  const EvalMetrics m = evaluate(ctl, cfg.env, cfg.eval_episodes, cfg.eval_seed);
  *crash_rate = m.crash_rate;
  return m.mean_error;
}

}  // namespace

TrainResult train(const PpoConfig& cfg, const std::function<void(const TrainLogRow&)>& on_iteration) {
  cfg.validate();
  const int obs_dim = cfg.env.obs_dim();
  std::mt19937_64 init_rng(cfg.seed);
  const double hover = hover_command(cfg.env.sim.vehicle);
  PolicyNet policy = make_policy(obs_dim, cfg.hidden, cfg.hidden_layers, cfg.env.history, init_rng, hover,
                                 cfg.init_log_std);
  std::vector<int> vsizes{obs_dim};
  for (int i = 0; i < cfg.hidden_layers; ++i) vsizes.push_back(cfg.hidden);
  vsizes.push_back(1);
  Mlp value(vsizes, OutputSquash::linear);
  value.init(init_rng, 1.0);

  TrainResult result;
  result.policy = policy;
  result.best_eval_err = std::numeric_limits<double>::infinity();
  if (cfg.total_steps == 0) return result;

  const int n_env = cfg.num_envs;
  long batch_steps = long(n_env) * cfg.horizon;
  int horizon = cfg.horizon;
  long iterations = cfg.total_steps / batch_steps;
  if (iterations == 0) {
    iterations = 1;
    horizon = static_cast<int>((cfg.total_steps + n_env - 1) / n_env);
    batch_steps = long(n_env) * horizon;
  }
  const int batch = static_cast<int>(batch_steps);

  std::vector<HoverEnv> envs;
  std::vector<std::mt19937_64> rngs;
  Eigen::MatrixXd obs(obs_dim, n_env);
  std::vector<double> running_return(n_env, 0.0);
  for (int e = 0; e < n_env; ++e) {
    envs.emplace_back(cfg.env);
    std::seed_seq seq{cfg.seed, std::uint64_t(e) + 1000};
    rngs.emplace_back(seq);
    obs.col(e) = envs[e].reset(rngs[e]);
  }
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9E3779B97F4A7C15ull);
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::MatrixXd buf_obs(obs_dim, batch);
  Eigen::MatrixXd buf_act(kNumArms, batch);
  Eigen::VectorXd buf_logp(batch), buf_val(batch), buf_rew(batch), buf_adv(batch), buf_ret(batch);
  std::vector<char> buf_done(batch);

  Adam policy_opt, value_opt;
  Eigen::VectorXd pparams(policy.mean.num_params() + kNumArms);
  double last_eval = std::numeric_limits<double>::quiet_NaN();
  long steps = 0;

  for (long it = 0; it < iterations; ++it) {
    std::vector<double> finished;
    // Rollout. Column index = t * n_env + e.
    for (int t = 0; t < horizon; ++t) {
      const Eigen::MatrixXd mu = policy.mean.forward_batch(obs);
      const Eigen::MatrixXd v = value.forward_batch(obs);
      const Eigen::VectorXd sigma = policy.log_std.array().exp();
      for (int e = 0; e < n_env; ++e) {
        const int col = t * n_env + e;
        MotorArray a;
        double logp = 0.0;
        for (int k = 0; k < kNumArms; ++k) {
          const double eps = normal(rngs[e]);
          a[k] = mu(k, e) + sigma[k] * eps;
          buf_act(k, col) = a[k];
          logp += -0.5 * eps * eps - policy.log_std[k] - 0.5 * kLog2Pi;
        }
        buf_obs.col(col) = obs.col(e);
        buf_logp[col] = logp;
        buf_val[col] = v(0, e);
        StepResult r = envs[e].step(a);
        running_return[e] += r.reward;
        double rew = r.reward * cfg.reward_scale;
        if (r.info.truncated) rew += cfg.gamma * value.forward(r.observation)[0];
        buf_rew[col] = rew;
        buf_done[col] = r.done;
        if (r.done) {
          finished.push_back(running_return[e]);
          running_return[e] = 0.0;
          obs.col(e) = envs[e].reset(rngs[e]);
        } else {
          obs.col(e) = r.observation;
        }
      }
    }
    steps += batch;

    // GAE, per environment, backwards in time.
    const Eigen::MatrixXd last_v = value.forward_batch(obs);
    for (int e = 0; e < n_env; ++e) {
      double gae = 0.0;
      double next_v = last_v(0, e);
      for (int t = horizon - 1; t >= 0; --t) {
        const int col = t * n_env + e;
        const double nonterminal = buf_done[col] ? 0.0 : 1.0;
        const double delta = buf_rew[col] + cfg.gamma * next_v * nonterminal - buf_val[col];
        gae = delta + cfg.gamma * cfg.lambda * nonterminal * gae;
        buf_adv[col] = gae;
        buf_ret[col] = gae + buf_val[col];
        next_v = buf_val[col];
      }
    }
    const double adv_mean = buf_adv.mean();
    const double adv_std = std::sqrt((buf_adv.array() - adv_mean).square().mean()) + 1e-8;
    const Eigen::VectorXd adv = (buf_adv.array() - adv_mean) / adv_std;

    // Updates.
    std::vector<int> index(batch);
    std::iota(index.begin(), index.end(), 0);
    const int mb = std::min(cfg.minibatch, batch);
    bool bad = false;
    for (int epoch = 0; epoch < cfg.epochs && !bad; ++epoch) {
      std::shuffle(index.begin(), index.end(), shuffle_rng);
      for (int start = 0; start + mb <= batch; start += mb) {
        Eigen::MatrixXd x(obs_dim, mb), act(kNumArms, mb);
        Eigen::VectorXd old_logp(mb), a_mb(mb), ret(mb);
        for (int j = 0; j < mb; ++j) {
          const int c = index[start + j];
          x.col(j) = buf_obs.col(c);
          act.col(j) = buf_act.col(c);
          old_logp[j] = buf_logp[c];
          a_mb[j] = adv[c];
          ret[j] = buf_ret[c];
        }

        Mlp::Cache pc;
        const Eigen::MatrixXd mu = policy.mean.forward_batch(x, &pc);
        const Eigen::VectorXd inv_var = (-2.0 * policy.log_std.array()).exp();
        Eigen::MatrixXd d_mu = Eigen::MatrixXd::Zero(kNumArms, mb);
        Eigen::VectorXd d_logstd = Eigen::VectorXd::Constant(kNumArms, -cfg.entropy_coef);
        for (int j = 0; j < mb; ++j) {
          double logp = 0.0;
          for (int k = 0; k < kNumArms; ++k) {
            const double d = act(k, j) - mu(k, j);
            logp += -0.5 * d * d * inv_var[k] - policy.log_std[k] - 0.5 * kLog2Pi;
          }
          const double ratio = std::exp(logp - old_logp[j]);
          const double A = a_mb[j];
          const bool clipped = (A > 0.0 && ratio > 1.0 + cfg.clip) || (A < 0.0 && ratio < 1.0 - cfg.clip);
          if (clipped) continue;
          const double scale = -ratio * A / mb;  // d(-surrogate)/d(logp)
          for (int k = 0; k < kNumArms; ++k) {
            const double d = act(k, j) - mu(k, j);
            d_mu(k, j) = scale * d * inv_var[k];
            d_logstd[k] += scale * (d * d * inv_var[k] - 1.0);
          }
        }
        Eigen::VectorXd pgrad(pparams.size());
        pgrad << policy.mean.backward(pc, d_mu), d_logstd;

        Mlp::Cache vc;
        const Eigen::MatrixXd vpred = value.forward_batch(x, &vc);
        const Eigen::MatrixXd d_v = ((vpred.row(0).transpose() - ret) / mb).transpose();
        Eigen::VectorXd vgrad = value.backward(vc, d_v);

        if (!pgrad.allFinite() || !vgrad.allFinite()) {
          bad = true;
          break;
        }
        clip_norm(pgrad, cfg.max_grad_norm);
        clip_norm(vgrad, cfg.max_grad_norm);

        pparams << policy.mean.params(), policy.log_std;
        policy_opt.step(pparams, pgrad, cfg.policy_lr);
        Eigen::VectorXd vparams = value.params();
        value_opt.step(vparams, vgrad, cfg.value_lr);
        if (!pparams.allFinite() || !vparams.allFinite()) {
          bad = true;
          break;
        }
        policy.mean.set_params(pparams.head(policy.mean.num_params()));
        policy.log_std = pparams.tail(kNumArms).cwiseMax(cfg.min_log_std);
        value.set_params(vparams);
      }
    }
    if (bad) {
      result.diverged = true;
      result.message = fmt::format("non-finite gradient or parameters at iteration {}; returning last good checkpoint",
                                   it);
      if (!std::isfinite(result.best_eval_err)) result.policy = policy;
      return result;
    }

    const bool last = it + 1 == iterations;
    if ((it + 1) % cfg.eval_every == 0 || last) {
      double crash_rate = 0.0;
      last_eval = eval_error(policy, cfg, &crash_rate);
      if (crash_rate == 0.0 && last_eval < result.best_eval_err) {
        result.best_eval_err = last_eval;
        result.policy = policy;
      }
    }
    TrainLogRow row{static_cast<int>(it), steps,
                    finished.empty() ? std::numeric_limits<double>::quiet_NaN()
                                     : std::accumulate(finished.begin(), finished.end(), 0.0) / finished.size(),
                    last_eval};
    result.log.push_back(row);
    if (on_iteration) on_iteration(row);
  }
  if (!std::isfinite(result.best_eval_err)) result.policy = policy;
  return result;
}

}  // namespace holoarm
