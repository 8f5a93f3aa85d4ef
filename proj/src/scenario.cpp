#include "psj/scenario.hpp"

#include <cmath>

#include "psj/attack.hpp"
#include "psj/external_oracle.hpp"

namespace psj {
namespace {

constexpr std::uint64_t kTagWeights = 0x77;
constexpr std::uint64_t kTagInstance = 0x1a5;
constexpr std::uint64_t kTagStart = 0x57a;

}  // namespace

std::string to_string(NoiseModel m) {
  switch (m) {
    case NoiseModel::kNone: return "none";
    case NoiseModel::kFlip: return "flip";
    case NoiseModel::kTemperature: return "temperature";
    case NoiseModel::kInputNoise: return "input-noise";
  }
  return "none";
}

NoiseModel parse_noise_model(const std::string& name) {
  if (name == "none") return NoiseModel::kNone;
  if (name == "flip") return NoiseModel::kFlip;
  if (name == "temperature") return NoiseModel::kTemperature;
  if (name == "input-noise") return NoiseModel::kInputNoise;
  throw ConfigError("unknown noise model '" + name + "' (expected none, flip, temperature, input-noise)");
}

Scenario::Scenario(ScenarioSpec spec) : spec_(std::move(spec)) {
  if (spec_.dim < 1) throw InvalidInput("scenario: dim must be >= 1");
  if (external()) return;
  Engine eng = make_engine(spec_.seed, kTagWeights);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double d = spec_.dim;
  if (spec_.oracle == "linear") {
    if (spec_.classes < 2) throw InvalidInput("scenario: classes must be >= 2");
    weights_.resize(static_cast<std::size_t>(spec_.classes) * static_cast<std::size_t>(spec_.dim));
    for (auto& w : weights_) w = normal(eng) / std::sqrt(d);
  } else if (spec_.oracle == "planar") {
    normal_.resize(static_cast<std::size_t>(spec_.dim));
    for (auto& v : normal_) v = normal(eng);
    const double len = norm2(normal_);
    for (auto& v : normal_) v /= len;
    // One more pass so the norm is 1 to the last ulp.
    const double len2 = norm2(normal_);
    for (auto& v : normal_) v /= len2;
  } else {
    throw ConfigError("unknown oracle '" + spec_.oracle + "' (expected planar, linear, external:ADDR)");
  }
}

bool Scenario::external() const noexcept { return spec_.oracle.rfind("external:", 0) == 0; }

Instance Scenario::instance(int id) const {
  Instance inst;
  inst.id = id;
  Engine eng = make_engine(mix_seed(spec_.seed, kTagInstance), static_cast<std::uint64_t>(id));
  std::normal_distribution<double> normal(0.0, 1.0);
  inst.x_star.resize(static_cast<std::size_t>(spec_.dim));
  for (auto& v : inst.x_star) v = normal(eng);
  if (spec_.oracle == "linear") {
    LinearLogitOracle probe({spec_.classes, spec_.dim, weights_,
                             std::vector<double>(static_cast<std::size_t>(spec_.classes), 0.0), 0.0, 0},
                            0);
    inst.target_class = probe.argmax_class(inst.x_star);
  } else if (spec_.oracle == "planar") {
    // Shift x_star so it sits at the requested offset on the positive side.
    const double off = dot(inst.x_star, normal_);
    const double want = spec_.planar_offset * std::sqrt(static_cast<double>(spec_.dim));
    for (std::size_t i = 0; i < inst.x_star.size(); ++i) inst.x_star[i] += (want - off) * normal_[i];
    inst.clean_correct = spec_.planar_offset > 0.0;
  }
  return inst;
}

OraclePtr Scenario::base(const Instance& inst, double temperature, std::uint64_t seed) const {
  if (spec_.oracle == "linear") {
    LinearLogitSpec ls;
    ls.classes = spec_.classes;
    ls.dim = spec_.dim;
    ls.weights = weights_;
    ls.biases.assign(static_cast<std::size_t>(spec_.classes), 0.0);
    ls.temperature = temperature;
    ls.target_class = inst.target_class;
    return std::make_shared<LinearLogitOracle>(std::move(ls), seed);
  }
  if (temperature != 0.0) throw ConfigError("temperature noise needs the linear oracle");
  PlanarSigmoidSpec ps;
  ps.normal = normal_;
  ps.on_plane = inst.x_star;
  const double back = spec_.planar_offset * std::sqrt(static_cast<double>(spec_.dim));
  for (std::size_t i = 0; i < ps.on_plane.size(); ++i) ps.on_plane[i] -= back * normal_[i];
  ps.s = spec_.planar_s;
  ps.eps = spec_.planar_eps;
  return std::make_shared<PlanarSigmoidOracle>(std::move(ps), seed);
}

OraclePtr Scenario::oracle(const Instance& inst, NoiseModel noise, double level,
                           std::uint64_t oracle_seed) const {
  if (external()) {
    if (noise != NoiseModel::kNone && level != 0.0)
      throw ConfigError("noise wrappers are not applied to external oracles");
    return external_oracle(spec_.oracle.substr(9), spec_.dim, spec_.timeout_ms);
  }
  const std::uint64_t base_seed = mix_seed(oracle_seed, 1);
  const std::uint64_t wrap_seed = mix_seed(oracle_seed, 2);
  switch (noise) {
    case NoiseModel::kNone: return base(inst, 0.0, base_seed);
    case NoiseModel::kFlip:
      return wrap_flip(base(inst, 0.0, base_seed), level,
                       spec_.oracle == "linear" ? spec_.classes : 2, wrap_seed);
    case NoiseModel::kTemperature: return base(inst, level, base_seed);
    case NoiseModel::kInputNoise: return wrap_input_noise(base(inst, 0.0, base_seed), level, wrap_seed);
  }
  throw ConfigError("unknown noise model");
}

PointVec Scenario::start_point(const Instance& inst) const {
  const std::uint64_t seed = mix_seed(mix_seed(spec_.seed, kTagStart), static_cast<std::uint64_t>(inst.id));
  if (external()) {
    OraclePtr o = oracle(inst, NoiseModel::kNone, 0.0, seed);
    return find_initial_adversarial(*o, inst.x_star, seed);
  }
  OraclePtr counterpart;
  if (spec_.oracle == "planar") {
    PlanarSigmoidSpec ps = static_cast<const PlanarSigmoidOracle&>(*base(inst, 0.0, seed)).spec();
    ps.s = kInf;
    ps.eps = 0.0;
    counterpart = std::make_shared<PlanarSigmoidOracle>(std::move(ps), seed);
  } else {
    counterpart = base(inst, 0.0, seed);
  }
  return find_initial_adversarial(*counterpart, inst.x_star, seed);
}

}  // namespace psj
