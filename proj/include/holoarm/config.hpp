// Flat key-value experiment configuration: `key = value` lines, dotted
// namespaces, `#` comments. Every key has a built-in default; the resolved
// echo lists all keys and hashes to the manifest's config digest.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "holoarm/env.hpp"
#include "holoarm/ppo.hpp"
#include "holoarm/scenarios.hpp"

namespace holoarm {

// Invalid value for a known key. Carries the key name.
class ConfigError : public ContractError {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : ContractError(key + ": " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct EvalSettings {
  int episodes = 20;
  double offset = 0.3;  // m
  std::uint64_t seed = 777;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  VehicleParams vehicle;
  ArmParams arm;
  ContactParams contact;
  double dt = 2.5e-3;
  bool compliant = true;
  PpoConfig train;
  EvalSettings eval;
  ScenarioConfig scenario;
  DropConfig drop;

  // Nested configs with the shared vehicle/arm/contact/dt/seed filled in.
  SimConfig sim() const;
  EnvConfig env() const;
  PpoConfig ppo() const;
  ScenarioConfig scenario_config(ScenarioKind kind) const;
  DropConfig drop_config() const;

  // Range checks per key, then the cross-field checks. Throws ConfigError.
  void validate() const;
};

// All keys in echo order.
std::vector<std::string> config_keys();

void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);
std::string get_config_value(const ExperimentConfig& config, const std::string& key);

// Missing file: IoError. Unknown keys and malformed lines: ParseError with
// the line number. Out-of-range values: ConfigError naming the key.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text);

// `key = value` for every key, in config_keys() order.
std::string resolved_echo(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);  // hex SHA-256 of the echo

std::string sha256_hex(const std::string& data);

}  // namespace holoarm
