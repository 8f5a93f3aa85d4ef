#pragma once

// Synthetic attack scenarios: a fixed classifier, per-instance attacked
// inputs, noise wrappers, and start points found on the noise-free
// counterpart.

#include <cstdint>
#include <string>

#include "psj/oracle.hpp"

namespace psj {

enum class NoiseModel { kNone, kFlip, kTemperature, kInputNoise };

std::string to_string(NoiseModel m);
/// none | flip | temperature | input-noise. Throws ConfigError.
NoiseModel parse_noise_model(const std::string& name);

struct ScenarioSpec {
  std::string oracle = "linear";  // linear | planar | external:ADDR
  int dim = 784;
  int classes = 10;
  double planar_s = kInf;     // base sigmoid of the planar oracle
  double planar_eps = 0.0;
  double planar_offset = 1.0; // signed distance of x_star from the plane, in |.|/sqrt(d) units
  std::uint64_t seed = 0;     // classifier and instance draws
  int timeout_ms = 30000;     // external oracles
};

struct Instance {
  int id = 0;
  PointVec x_star;
  int target_class = 0;
  bool clean_correct = true;  // majority-vote counterpart labels x_star as c
};

class Scenario {
 public:
  explicit Scenario(ScenarioSpec spec);

  const ScenarioSpec& spec() const noexcept { return spec_; }
  bool external() const noexcept;

  /// Deterministic in (spec.seed, id).
  Instance instance(int id) const;

  /// Noisy handle for one run. Wrapper and base randomness derive from
  /// oracle_seed.
  OraclePtr oracle(const Instance& inst, NoiseModel noise, double level,
                   std::uint64_t oracle_seed) const;

  /// Start point on the adversarial side, found on the noise-free
  /// counterpart (majority-vote classifier) so every noise level of an
  /// instance starts from the same point.
  PointVec start_point(const Instance& inst) const;

 private:
  OraclePtr base(const Instance& inst, double temperature, std::uint64_t seed) const;

  ScenarioSpec spec_;
  std::vector<double> weights_;  // linear: classes x dim
  PointVec normal_;              // planar
};

}  // namespace psj
