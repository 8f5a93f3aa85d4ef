#pragma once

// Flat key=value configuration files ('#' starts a comment). Unknown keys
// and malformed values throw ConfigError naming the key and line.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "psj/attack.hpp"
#include "psj/scenario.hpp"

namespace psj {

struct ExperimentSpec {
  ScenarioSpec scenario;
  NoiseModel noise = NoiseModel::kNone;
  std::vector<double> levels{0.0};
  int instances = 1;
  int first_instance = 0;
  std::uint64_t seed = 0;
  int workers = 0;  // 0 = available parallelism
  AttackConfig attack;
};

/// Ordered key -> (value, line) pairs as read from the file.
struct ConfigEntry {
  std::string value;
  int line = 0;
};
using ConfigMap = std::map<std::string, ConfigEntry>;

ConfigMap parse_key_values(const std::string& text);

/// Applies entries onto `spec` (defaults for absent keys).
void apply_config(const ConfigMap& entries, ExperimentSpec& spec);
ExperimentSpec parse_config(const std::string& text);
ExperimentSpec load_config(const std::string& path);

/// Canonical key=value text covering every key; parse_config of it
/// reproduces the spec.
std::string to_config_text(const ExperimentSpec& spec);

/// All keys accepted by apply_config.
const std::vector<std::string>& config_keys();

/// 64-bit FNV-1a of the text, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

/// Shortest round-trip decimal form ("inf" for infinity).
std::string format_double(double v);

}  // namespace psj
