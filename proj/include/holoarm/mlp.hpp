// Small dense networks with tanh hidden layers, batched through Eigen, with a
// hand-written backward pass.
#pragma once

#include <filesystem>
#include <random>
#include <vector>

#include "holoarm/common.hpp"

namespace holoarm {

enum class OutputSquash { linear = 0, sigmoid = 1 };

class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> sizes, OutputSquash output);

  const std::vector<int>& sizes() const { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  OutputSquash output() const { return output_; }
  int num_layers() const { return static_cast<int>(weights_.size()); }

  // Flat layout, per layer: weights column-major (out x in), then biases.
  Eigen::Index num_params() const;
  Eigen::VectorXd params() const;
  void set_params(const Eigen::VectorXd& flat);

  // Gaussian weights with std 1/sqrt(fan_in), zero biases; the last layer is
  // scaled by `output_gain`.
  void init(std::mt19937_64& rng, double output_gain = 1.0);

  Eigen::MatrixXd& weight(int layer) { return weights_[layer]; }
  Eigen::VectorXd& bias(int layer) { return biases_[layer]; }

  struct Cache {
    std::vector<Eigen::MatrixXd> activations;  // [0] = input, back() = output
  };

  // Columns are samples: x is in x N, result out x N.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x, Cache* cache = nullptr) const;
  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;

  // Gradient of sum(d_out .* output) w.r.t. the flat parameters.
  Eigen::VectorXd backward(const Cache& cache, const Eigen::MatrixXd& d_out) const;

 private:
  std::vector<int> sizes_;
  OutputSquash output_ = OutputSquash::linear;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

/// Motor-effort policy: sigmoid-squashed mean in [0,1]^4 and a learned
/// per-action log standard deviation used only while training.
struct PolicyNet {
  Mlp mean;
  Eigen::VectorXd log_std;
  int history = 2;  // action history length the observation was built with
};

// Deterministic action for an observation. Throws ContractError on a
// dimension mismatch.
MotorArray policy_forward(const PolicyNet& net, const Eigen::VectorXd& obs);

PolicyNet make_policy(int obs_dim, int hidden, int hidden_layers, int history, std::mt19937_64& rng,
                      double initial_action, double initial_log_std);

// Text checkpoint: layout header then one parameter per line at full
// precision.
void save_policy(const std::filesystem::path& path, const PolicyNet& net);
PolicyNet load_policy(const std::filesystem::path& path);

}  // namespace holoarm
