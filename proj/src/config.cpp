#include "holoarm/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

namespace holoarm {

namespace {

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw ConfigError(key, "expected a number, got '" + text + "'");
  if (!std::isfinite(v)) throw ConfigError(key, "value must be finite");
  return v;
}

long long parse_integer(const std::string& key, const std::string& text) {
  long long v = 0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw ConfigError(key, "expected an integer, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(key, "expected true or false, got '" + text + "'");
}

std::string show(double v) { return fmt::format("{}", v); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct KeyDef {
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  // Returns an error message, empty when the value is acceptable.
  std::function<std::string(const ExperimentConfig&)> check;
};

using DoubleRef = std::function<double&(ExperimentConfig&)>;

enum class Range { any, positive, nonneg, unit, fraction };

std::string range_error(double v, Range r) {
  switch (r) {
    case Range::any: return "";
    case Range::positive: return v > 0.0 ? "" : fmt::format("must be > 0 (got {})", v);
    case Range::nonneg: return v >= 0.0 ? "" : fmt::format("must be >= 0 (got {})", v);
    case Range::unit: return v >= 0.0 && v <= 1.0 ? "" : fmt::format("must be in [0, 1] (got {})", v);
    case Range::fraction: return v >= 0.0 && v < 1.0 ? "" : fmt::format("must be in [0, 1) (got {})", v);
  }
  return "";
}

KeyDef num(std::string key, DoubleRef ref, Range range, double scale = 1.0) {
  KeyDef d;
  d.key = key;
  d.get = [ref, scale](const ExperimentConfig& c) {
    const double v = ref(const_cast<ExperimentConfig&>(c)) / scale;
    return scale == 1.0 ? show(v) : fmt::format("{:.12g}", v);
  };
  d.set = [ref, scale, key](ExperimentConfig& c, const std::string& v) { ref(c) = parse_double(key, v) * scale; };
  d.check = [ref, range, scale](const ExperimentConfig& c) {
    return range_error(ref(const_cast<ExperimentConfig&>(c)) / scale, range);
  };
  return d;
}

template <typename Int>
KeyDef integer(std::string key, std::function<Int&(ExperimentConfig&)> ref, long long min_value) {
  KeyDef d;
  d.key = key;
  d.get = [ref](const ExperimentConfig& c) { return std::to_string(ref(const_cast<ExperimentConfig&>(c))); };
  d.set = [ref, key, min_value](ExperimentConfig& c, const std::string& v) {
    const long long x = parse_integer(key, v);
    if (x < min_value) throw ConfigError(key, fmt::format("must be >= {} (got {})", min_value, x));
    ref(c) = static_cast<Int>(x);
  };
  d.check = [ref, min_value](const ExperimentConfig& c) {
    const long long x = static_cast<long long>(ref(const_cast<ExperimentConfig&>(c)));
    return x >= min_value ? std::string() : fmt::format("must be >= {} (got {})", min_value, x);
  };
  return d;
}

KeyDef seed_key(std::string key, std::function<std::uint64_t&(ExperimentConfig&)> ref) {
  KeyDef d;
  d.key = key;
  d.get = [ref](const ExperimentConfig& c) { return std::to_string(ref(const_cast<ExperimentConfig&>(c))); };
  d.set = [ref, key](ExperimentConfig& c, const std::string& v) {
    std::uint64_t x = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
    }
    ref(c) = x;
  };
  d.check = [](const ExperimentConfig&) { return std::string(); };
  return d;
}

KeyDef flag(std::string key, std::function<bool&(ExperimentConfig&)> ref) {
  KeyDef d;
  d.key = key;
  d.get = [ref](const ExperimentConfig& c) { return ref(const_cast<ExperimentConfig&>(c)) ? "true" : "false"; };
  d.set = [ref, key](ExperimentConfig& c, const std::string& v) { ref(c) = parse_bool(key, v); };
  d.check = [](const ExperimentConfig&) { return std::string(); };
  return d;
}

const std::vector<KeyDef>& registry() {
  using C = ExperimentConfig;
  static const std::vector<KeyDef> keys = [] {
    std::vector<KeyDef> k;
    k.push_back(seed_key("seed", [](C& c) -> std::uint64_t& { return c.seed; }));
    // Vehicle (identified constants).
    k.push_back(num("mass", [](C& c) -> double& { return c.vehicle.mass; }, Range::positive));
    k.push_back(num("motor_tau", [](C& c) -> double& { return c.vehicle.motor_time_constant; }, Range::positive));
    k.push_back(num("thrust_c0", [](C& c) -> double& { return c.vehicle.thrust_coeffs[0]; }, Range::any));
    k.push_back(num("thrust_c1", [](C& c) -> double& { return c.vehicle.thrust_coeffs[1]; }, Range::any));
    k.push_back(num("thrust_c2", [](C& c) -> double& { return c.vehicle.thrust_coeffs[2]; }, Range::any));
    k.push_back(num("inertia_xx", [](C& c) -> double& { return c.vehicle.inertia_diag[0]; }, Range::positive));
    k.push_back(num("inertia_yy", [](C& c) -> double& { return c.vehicle.inertia_diag[1]; }, Range::positive));
    k.push_back(num("inertia_zz", [](C& c) -> double& { return c.vehicle.inertia_diag[2]; }, Range::positive));
    k.push_back(num("yaw_torque_coeff", [](C& c) -> double& { return c.vehicle.yaw_torque_coeff; }, Range::nonneg));
    k.push_back(num("gravity", [](C& c) -> double& { return c.vehicle.gravity; }, Range::nonneg));
    k.push_back(num("linear_drag", [](C& c) -> double& { return c.vehicle.linear_drag; }, Range::nonneg));
    // Arms.
    k.push_back(num("arm.k_lat", [](C& c) -> double& { return c.arm.k_lat; }, Range::positive));
    k.push_back(num("arm.c_lat", [](C& c) -> double& { return c.arm.c_lat; }, Range::nonneg));
    k.push_back(num("arm.k_up", [](C& c) -> double& { return c.arm.k_up; }, Range::positive));
    k.push_back(num("arm.c_up", [](C& c) -> double& { return c.arm.c_up; }, Range::nonneg));
    k.push_back(num("arm.k_down", [](C& c) -> double& { return c.arm.k_down; }, Range::positive));
    k.push_back(num("arm.c_down", [](C& c) -> double& { return c.arm.c_down; }, Range::nonneg));
    k.push_back(num("arm.k_ax", [](C& c) -> double& { return c.arm.k_ax; }, Range::positive));
    k.push_back(num("arm.c_ax", [](C& c) -> double& { return c.arm.c_ax; }, Range::nonneg));
    k.push_back(num("arm.inertia_eff", [](C& c) -> double& { return c.arm.inertia_eff; }, Range::positive));
    k.push_back(num("arm.mass_eff", [](C& c) -> double& { return c.arm.mass_eff; }, Range::positive));
    k.push_back(num("arm.axial_travel_max", [](C& c) -> double& { return c.arm.axial_travel_max; }, Range::positive));
    k.push_back(num("arm.length", [](C& c) -> double& { return c.arm.arm_length; }, Range::positive));
    k.push_back(num("arm.bend_limit_deg", [](C& c) -> double& { return c.arm.bend_limit; }, Range::positive,
                    deg2rad(1.0)));
    // Contact.
    k.push_back(num("contact.k_n", [](C& c) -> double& { return c.contact.k_n; }, Range::positive));
    k.push_back(num("contact.c_n", [](C& c) -> double& { return c.contact.c_n; }, Range::nonneg));
    k.push_back(num("contact.mu", [](C& c) -> double& { return c.contact.mu; }, Range::nonneg));
    k.push_back(num("contact.c_t", [](C& c) -> double& { return c.contact.c_t; }, Range::nonneg));
    k.push_back(num("contact.failure_threshold", [](C& c) -> double& { return c.contact.failure_threshold; },
                    Range::positive));
    // Simulation.
    k.push_back(num("sim.dt", [](C& c) -> double& { return c.dt; }, Range::positive));
    k.push_back(flag("sim.compliant", [](C& c) -> bool& { return c.compliant; }));
    // Training.
    k.push_back(integer<long>("train.total_steps", [](C& c) -> long& { return c.train.total_steps; }, 0));
    k.push_back(integer<int>("train.num_envs", [](C& c) -> int& { return c.train.num_envs; }, 1));
    k.push_back(integer<int>("train.horizon", [](C& c) -> int& { return c.train.horizon; }, 1));
    k.push_back(integer<int>("train.epochs", [](C& c) -> int& { return c.train.epochs; }, 1));
    k.push_back(integer<int>("train.minibatch", [](C& c) -> int& { return c.train.minibatch; }, 1));
    k.push_back(num("train.gamma", [](C& c) -> double& { return c.train.gamma; }, Range::unit));
    k.push_back(num("train.lambda", [](C& c) -> double& { return c.train.lambda; }, Range::unit));
    k.push_back(num("train.clip", [](C& c) -> double& { return c.train.clip; }, Range::positive));
    k.push_back(num("train.policy_lr", [](C& c) -> double& { return c.train.policy_lr; }, Range::positive));
    k.push_back(num("train.value_lr", [](C& c) -> double& { return c.train.value_lr; }, Range::positive));
    k.push_back(num("train.entropy_coef", [](C& c) -> double& { return c.train.entropy_coef; }, Range::any));
    k.push_back(num("train.max_grad_norm", [](C& c) -> double& { return c.train.max_grad_norm; }, Range::positive));
    k.push_back(num("train.reward_scale", [](C& c) -> double& { return c.train.reward_scale; }, Range::positive));
    k.push_back(integer<int>("train.hidden", [](C& c) -> int& { return c.train.hidden; }, 1));
    k.push_back(integer<int>("train.hidden_layers", [](C& c) -> int& { return c.train.hidden_layers; }, 1));
    k.push_back(num("train.init_log_std", [](C& c) -> double& { return c.train.init_log_std; }, Range::any));
    k.push_back(num("train.min_log_std", [](C& c) -> double& { return c.train.min_log_std; }, Range::any));
    k.push_back(integer<int>("train.eval_every", [](C& c) -> int& { return c.train.eval_every; }, 1));
    k.push_back(integer<int>("train.eval_episodes", [](C& c) -> int& { return c.train.eval_episodes; }, 1));
    k.push_back(seed_key("train.eval_seed", [](C& c) -> std::uint64_t& { return c.train.eval_seed; }));
    k.push_back(num("train.control_rate", [](C& c) -> double& { return c.train.env.control_rate; }, Range::positive));
    k.push_back(num("train.episode_length", [](C& c) -> double& { return c.train.env.episode_length; },
                    Range::positive));
    k.push_back(integer<int>("train.history", [](C& c) -> int& { return c.train.env.history; }, 0));
    k.push_back(flag("train.randomize", [](C& c) -> bool& { return c.train.env.randomization.enabled; }));
    k.push_back(num("train.rand_mass", [](C& c) -> double& { return c.train.env.randomization.mass; },
                    Range::fraction));
    k.push_back(num("train.rand_thrust", [](C& c) -> double& { return c.train.env.randomization.thrust; },
                    Range::fraction));
    k.push_back(num("train.rand_arm_stiffness",
                    [](C& c) -> double& { return c.train.env.randomization.arm_stiffness; }, Range::fraction));
    k.push_back(num("train.init_offset", [](C& c) -> double& { return c.train.env.init_offset; }, Range::nonneg));
    k.push_back(num("train.init_velocity", [](C& c) -> double& { return c.train.env.init_velocity; },
                    Range::nonneg));
    k.push_back(num("train.init_tilt_deg", [](C& c) -> double& { return c.train.env.init_tilt; }, Range::nonneg,
                    deg2rad(1.0)));
    k.push_back(num("train.init_rate", [](C& c) -> double& { return c.train.env.init_rate; }, Range::nonneg));
    k.push_back(num("reward.alive", [](C& c) -> double& { return c.train.env.reward.alive; }, Range::any));
    k.push_back(num("reward.position", [](C& c) -> double& { return c.train.env.reward.position; }, Range::nonneg));
    k.push_back(num("reward.velocity", [](C& c) -> double& { return c.train.env.reward.velocity; }, Range::nonneg));
    k.push_back(num("reward.angular", [](C& c) -> double& { return c.train.env.reward.angular; }, Range::nonneg));
    k.push_back(num("reward.action", [](C& c) -> double& { return c.train.env.reward.action; }, Range::nonneg));
    k.push_back(num("reward.crash", [](C& c) -> double& { return c.train.env.reward.crash; }, Range::any));
    // Evaluation.
    k.push_back(integer<int>("eval.episodes", [](C& c) -> int& { return c.eval.episodes; }, 1));
    k.push_back(num("eval.offset", [](C& c) -> double& { return c.eval.offset; }, Range::nonneg));
    k.push_back(seed_key("eval.seed", [](C& c) -> std::uint64_t& { return c.eval.seed; }));
    // Scenarios.
    k.push_back(num("scenario.control_rate", [](C& c) -> double& { return c.scenario.control_rate; },
                    Range::positive));
    k.push_back(num("lemniscate.period", [](C& c) -> double& { return c.scenario.lemniscate.period; },
                    Range::positive));
    k.push_back(num("lemniscate.a", [](C& c) -> double& { return c.scenario.lemniscate.a; }, Range::nonneg));
    k.push_back(num("lemniscate.b", [](C& c) -> double& { return c.scenario.lemniscate.b; }, Range::nonneg));
    k.push_back(num("lemniscate.altitude", [](C& c) -> double& { return c.scenario.lemniscate.altitude; },
                    Range::any));
    k.push_back(integer<int>("lemniscate.warmup_periods",
                             [](C& c) -> int& { return c.scenario.lemniscate.warmup_periods; }, 0));
    k.push_back(integer<int>("lemniscate.measured_periods",
                             [](C& c) -> int& { return c.scenario.lemniscate.measured_periods; }, 1));
    k.push_back(num("payload.mass", [](C& c) -> double& { return c.scenario.payload.mass; }, Range::nonneg));
    k.push_back(num("payload.offset_z", [](C& c) -> double& { return c.scenario.payload.offset[2]; }, Range::any));
    k.push_back(num("payload.radius", [](C& c) -> double& { return c.scenario.payload.radius; }, Range::positive));
    k.push_back(num("payload.altitude", [](C& c) -> double& { return c.scenario.payload.altitude; }, Range::any));
    k.push_back(integer<int>("payload.laps", [](C& c) -> int& { return c.scenario.payload.laps; }, 1));
    k.push_back(num("payload.lap_period", [](C& c) -> double& { return c.scenario.payload.lap_period; },
                    Range::positive));
    k.push_back(num("disturbance.time", [](C& c) -> double& { return c.scenario.disturbance.impulses[0].time; },
                    Range::nonneg));
    k.push_back(num("disturbance.duration",
                    [](C& c) -> double& { return c.scenario.disturbance.impulses[0].duration; }, Range::nonneg));
    k.push_back(integer<int>("disturbance.arm", [](C& c) -> int& { return c.scenario.disturbance.impulses[0].arm; },
                             0));
    {
      KeyDef d;
      d.key = "disturbance.force";
      d.get = [](const C& c) { return show(c.scenario.disturbance.impulses[0].force.norm()); };
      d.set = [](C& c, const std::string& v) {
        Disturbance& imp = c.scenario.disturbance.impulses[0];
        const double f = parse_double("disturbance.force", v);
        const Vec3 tip = c.vehicle.rotor_positions[imp.arm % kNumArms] + imp.offset;
        imp.force = f * Vec3(-tip.y(), tip.x(), 0.0).normalized();
      };
      d.check = [](const C& c) { return range_error(c.scenario.disturbance.impulses[0].force.norm(), Range::nonneg); };
      k.push_back(d);
    }
    k.push_back(num("disturbance.window", [](C& c) -> double& { return c.scenario.disturbance.window; },
                    Range::positive));
    k.push_back(num("gap.width", [](C& c) -> double& { return c.scenario.gap.width; }, Range::positive));
    k.push_back(num("gap.approach_speed", [](C& c) -> double& { return c.scenario.gap.approach_speed; },
                    Range::positive));
    k.push_back(num("gap.start_x", [](C& c) -> double& { return c.scenario.gap.start_x; }, Range::any));
    k.push_back(num("gap.end_x", [](C& c) -> double& { return c.scenario.gap.end_x; }, Range::any));
    k.push_back(num("gap.altitude", [](C& c) -> double& { return c.scenario.gap.altitude; }, Range::any));
    k.push_back(num("gap.thickness", [](C& c) -> double& { return c.scenario.gap.thickness; }, Range::positive));
    k.push_back(num("gap.window", [](C& c) -> double& { return c.scenario.gap.window; }, Range::positive));
    // Drops.
    {
      KeyDef d;
      d.key = "drop.heights";
      d.get = [](const C& c) {
        std::string s;
        for (double h : c.scenario.drop_heights) s += (s.empty() ? "" : ",") + show(h);
        return s;
      };
      d.set = [](C& c, const std::string& v) {
        std::vector<double> hs;
        std::stringstream ss(v);
        for (std::string item; std::getline(ss, item, ',');) hs.push_back(parse_double("drop.heights", trim(item)));
        if (hs.empty()) throw ConfigError("drop.heights", "needs at least one height");
        c.scenario.drop_heights = hs;
      };
      d.check = [](const C& c) {
        if (c.scenario.drop_heights.empty()) return std::string("needs at least one height");
        for (double h : c.scenario.drop_heights) {
          if (!(h > 0.0)) return fmt::format("heights must be > 0 (got {})", h);
        }
        return std::string();
      };
      k.push_back(d);
    }
    k.push_back(num("drop.mass", [](C& c) -> double& { return c.drop.mass; }, Range::positive));
    k.push_back(num("drop.dt", [](C& c) -> double& { return c.drop.dt; }, Range::positive));
    k.push_back(num("drop.max_time", [](C& c) -> double& { return c.drop.max_time; }, Range::positive));
    return k;
  }();
  return keys;
}

const KeyDef& find_key(const std::string& key) {
  for (const KeyDef& d : registry()) {
    if (d.key == key) return d;
  }
  throw ConfigError(key, "unknown key");
}

// Re-raises a nested validation failure against the key that owns it.
template <typename F>
void checked(const std::string& key, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const ContractError& e) {
    throw ConfigError(key, e.what());
  }
}

}  // namespace

SimConfig ExperimentConfig::sim() const {
  SimConfig s;
  s.vehicle = vehicle;
  s.arm = arm;
  s.contact = contact;
  s.compliant = compliant;
  s.dt = dt;
  return s;
}

EnvConfig ExperimentConfig::env() const {
  EnvConfig e = train.env;
  e.sim = sim();
  return e;
}

PpoConfig ExperimentConfig::ppo() const {
  PpoConfig p = train;
  p.seed = seed;
  p.env = env();
  return p;
}

ScenarioConfig ExperimentConfig::scenario_config(ScenarioKind kind) const {
  ScenarioConfig s = scenario;
  s.kind = kind;
  s.seed = seed;
  s.sim = sim();
  s.drop = drop_config();
  return s;
}

DropConfig ExperimentConfig::drop_config() const {
  DropConfig d = drop;
  d.vehicle = vehicle;
  d.arm = arm;
  d.contact = contact;
  return d;
}

void ExperimentConfig::validate() const {
  for (const KeyDef& d : registry()) {
    const std::string err = d.check(*this);
    if (!err.empty()) throw ConfigError(d.key, err);
  }
  checked("mass", [&] { vehicle.validate(); });
  checked("arm", [&] { arm.validate(); });
  checked("contact", [&] { contact.validate(); });
  checked("sim.dt", [&] { sim().validate(); });
  checked("train", [&] { ppo().validate(); });
  for (ScenarioKind k : all_scenario_kinds()) {
    checked(to_string(k), [&] { scenario_config(k).validate(); });
  }
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const KeyDef& d : registry()) out.push_back(d.key);
  return out;
}

void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value) {
  find_key(key).set(config, value);
}

std::string get_config_value(const ExperimentConfig& config, const std::string& key) {
  return find_key(key).get(config);
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  std::vector<std::string> seen;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value', got '" + body + "'", line);
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) throw ParseError("missing key before '='", line);
    if (value.empty()) throw ParseError("missing value for '" + key + "'", line);
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) throw ParseError("duplicate key '" + key + "'", line);
    seen.push_back(key);
    const KeyDef* def = nullptr;
    for (const KeyDef& d : registry()) {
      if (d.key == key) def = &d;
    }
    if (!def) throw ParseError("unknown key '" + key + "'", line);
    def->set(cfg, value);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string resolved_echo(const ExperimentConfig& config) {
  std::string out;
  for (const KeyDef& d : registry()) out += d.key + " = " + d.get(config) + "\n";
  return out;
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string config_hash(const ExperimentConfig& config) { return sha256_hex(resolved_echo(config)); }

}  // namespace holoarm
