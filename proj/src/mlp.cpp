#include "holoarm/mlp.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace holoarm {

Mlp::Mlp(std::vector<int> sizes, OutputSquash output) : sizes_(std::move(sizes)), output_(output) {
  require(sizes_.size() >= 2, "Mlp: need at least input and output sizes");
  for (int s : sizes_) require(s > 0, "Mlp: layer sizes must be > 0");
  for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
    weights_.push_back(Eigen::MatrixXd::Zero(sizes_[l + 1], sizes_[l]));
    biases_.push_back(Eigen::VectorXd::Zero(sizes_[l + 1]));
  }
}

Eigen::Index Mlp::num_params() const {
  Eigen::Index n = 0;
  for (size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
  return n;
}

Eigen::VectorXd Mlp::params() const {
  Eigen::VectorXd flat(num_params());
  Eigen::Index k = 0;
  for (size_t l = 0; l < weights_.size(); ++l) {
    flat.segment(k, weights_[l].size()) = Eigen::Map<const Eigen::VectorXd>(weights_[l].data(), weights_[l].size());
    k += weights_[l].size();
    flat.segment(k, biases_[l].size()) = biases_[l];
    k += biases_[l].size();
  }
  return flat;
}

void Mlp::set_params(const Eigen::VectorXd& flat) {
  require(flat.size() == num_params(), fmt::format("Mlp: expected {} parameters, got {}", num_params(), flat.size()));
  Eigen::Index k = 0;
  for (size_t l = 0; l < weights_.size(); ++l) {
    Eigen::Map<Eigen::VectorXd>(weights_[l].data(), weights_[l].size()) = flat.segment(k, weights_[l].size());
    k += weights_[l].size();
    biases_[l] = flat.segment(k, biases_[l].size());
    k += biases_[l].size();
  }
}

void Mlp::init(std::mt19937_64& rng, double output_gain) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (size_t l = 0; l < weights_.size(); ++l) {
    const double scale = (l + 1 == weights_.size() ? output_gain : 1.0) / std::sqrt(double(weights_[l].cols()));
    for (Eigen::Index j = 0; j < weights_[l].cols(); ++j) {
      for (Eigen::Index i = 0; i < weights_[l].rows(); ++i) weights_[l](i, j) = scale * normal(rng);
    }
    biases_[l].setZero();
  }
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& x, Cache* cache) const {
  require(x.rows() == input_dim(), fmt::format("Mlp: input has {} rows, expected {}", x.rows(), input_dim()));
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(x);
  }
  Eigen::MatrixXd a = x;
  for (size_t l = 0; l < weights_.size(); ++l) {
    Eigen::MatrixXd z = weights_[l] * a;
    z.colwise() += biases_[l];
    if (l + 1 < weights_.size()) {
      a = z.array().tanh().matrix();
    } else if (output_ == OutputSquash::sigmoid) {
      a = (1.0 / (1.0 + (-z.array()).exp())).matrix();
    } else {
      a = std::move(z);
    }
    if (cache) cache->activations.push_back(a);
  }
  return a;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const { return forward_batch(x); }

Eigen::VectorXd Mlp::backward(const Cache& cache, const Eigen::MatrixXd& d_out) const {
  const size_t layers = weights_.size();
  require(cache.activations.size() == layers + 1, "Mlp::backward: cache does not match network");
  require(d_out.rows() == output_dim() && d_out.cols() == cache.activations.back().cols(),
          "Mlp::backward: gradient shape mismatch");
  Eigen::VectorXd grad(num_params());
  std::vector<Eigen::Index> offsets(layers);
  Eigen::Index k = 0;
  for (size_t l = 0; l < layers; ++l) {
    offsets[l] = k;
    k += weights_[l].size() + biases_[l].size();
  }

  Eigen::MatrixXd delta;
  const Eigen::MatrixXd& out = cache.activations.back();
  if (output_ == OutputSquash::sigmoid) {
    delta = (d_out.array() * out.array() * (1.0 - out.array())).matrix();
  } else {
    delta = d_out;
  }
  for (size_t li = layers; li-- > 0;) {
    const Eigen::MatrixXd& a_in = cache.activations[li];
    const Eigen::MatrixXd dw = delta * a_in.transpose();
    grad.segment(offsets[li], dw.size()) = Eigen::Map<const Eigen::VectorXd>(dw.data(), dw.size());
    grad.segment(offsets[li] + dw.size(), biases_[li].size()) = delta.rowwise().sum();
    if (li > 0) {
      const Eigen::MatrixXd da = weights_[li].transpose() * delta;
      delta = (da.array() * (1.0 - a_in.array().square())).matrix();
    }
  }
  return grad;
}

// ---------------------------------------------------------------------------

MotorArray policy_forward(const PolicyNet& net, const Eigen::VectorXd& obs) {
  require(obs.size() == net.mean.input_dim(),
          fmt::format("policy_forward: observation has {} entries, network expects {}", obs.size(),
                      net.mean.input_dim()));
  require(net.mean.output_dim() == kNumArms, "policy_forward: network must output 4 actions");
  const Eigen::VectorXd y = net.mean.forward(obs);
  MotorArray a;
  for (int i = 0; i < kNumArms; ++i) a[i] = std::clamp(y[i], 0.0, 1.0);
  return a;
}

PolicyNet make_policy(int obs_dim, int hidden, int hidden_layers, int history, std::mt19937_64& rng,
                      double initial_action, double initial_log_std) {
  require(initial_action > 0.0 && initial_action < 1.0, "make_policy: initial action must be in (0,1)");
  std::vector<int> sizes{obs_dim};
  for (int i = 0; i < hidden_layers; ++i) sizes.push_back(hidden);
  sizes.push_back(kNumArms);
  PolicyNet net{Mlp(sizes, OutputSquash::sigmoid), Eigen::VectorXd::Constant(kNumArms, initial_log_std), history};
  net.mean.init(rng, 0.01);
  net.mean.bias(net.mean.num_layers() - 1).setConstant(std::log(initial_action / (1.0 - initial_action)));
  return net;
}

void save_policy(const std::filesystem::path& path, const PolicyNet& net) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write policy checkpoint " + path.string());
  out << "holoarm-policy 1\nlayers";
  for (int s : net.mean.sizes()) out << ' ' << s;
  out << "\nactivation tanh\noutput " << (net.mean.output() == OutputSquash::sigmoid ? "sigmoid" : "linear")
      << "\nhistory " << net.history << "\nlog_std";
  for (Eigen::Index i = 0; i < net.log_std.size(); ++i) out << ' ' << fmt::format("{:.17g}", net.log_std[i]);
  const Eigen::VectorXd p = net.mean.params();
  out << "\nparams " << p.size() << '\n';
  for (Eigen::Index i = 0; i < p.size(); ++i) out << fmt::format("{:.17g}\n", p[i]);
  if (!out) throw IoError("failed writing policy checkpoint " + path.string());
}

namespace {

std::istringstream expect_line(std::istream& in, int& line, const std::string& key) {
  std::string text;
  if (!std::getline(in, text)) throw ParseError("unexpected end of checkpoint, wanted '" + key + "'", line + 1);
  ++line;
  std::istringstream ss(text);
  std::string word;
  ss >> word;
  if (word != key) throw ParseError("expected '" + key + "', got '" + word + "'", line);
  return ss;
}

}  // namespace

PolicyNet load_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open policy checkpoint " + path.string());
  int line = 0;
  auto magic = expect_line(in, line, "holoarm-policy");
  int version = 0;
  if (!(magic >> version) || version != 1) throw ParseError("unsupported checkpoint version", line);

  auto layers = expect_line(in, line, "layers");
  std::vector<int> sizes;
  for (int s; layers >> s;) sizes.push_back(s);
  if (sizes.size() < 2 || sizes.back() != kNumArms) throw ParseError("bad layer sizes", line);

  auto act = expect_line(in, line, "activation");
  std::string activation;
  act >> activation;
  if (activation != "tanh") throw ParseError("unsupported activation '" + activation + "'", line);

  auto outl = expect_line(in, line, "output");
  std::string squash;
  outl >> squash;
  if (squash != "sigmoid" && squash != "linear") throw ParseError("unsupported output '" + squash + "'", line);

  auto hist = expect_line(in, line, "history");
  int history = -1;
  if (!(hist >> history) || history < 0) throw ParseError("bad history length", line);

  auto ls = expect_line(in, line, "log_std");
  std::vector<double> log_std;
  for (double v; ls >> v;) log_std.push_back(v);
  if (log_std.size() != static_cast<size_t>(kNumArms)) throw ParseError("log_std needs 4 values", line);

  auto pl = expect_line(in, line, "params");
  long count = -1;
  if (!(pl >> count)) throw ParseError("bad parameter count", line);

  PolicyNet net{Mlp(sizes, squash == "sigmoid" ? OutputSquash::sigmoid : OutputSquash::linear),
                Eigen::Map<Eigen::VectorXd>(log_std.data(), kNumArms), history};
  if (count != net.mean.num_params()) {
    throw ParseError(fmt::format("parameter count {} does not match layers ({})", count, net.mean.num_params()), line);
  }
  Eigen::VectorXd p(count);
  std::string text;
  for (long i = 0; i < count; ++i) {
    if (!std::getline(in, text)) throw ParseError("checkpoint truncated", line + 1);
    ++line;
    try {
      size_t used = 0;
      p[i] = std::stod(text, &used);
      if (used != text.size() || !std::isfinite(p[i])) throw std::invalid_argument(text);
    } catch (const std::exception&) {
      throw ParseError("non-numeric parameter '" + text + "'", line);
    }
  }
  net.mean.set_params(p);
  return net;
}

}  // namespace holoarm
