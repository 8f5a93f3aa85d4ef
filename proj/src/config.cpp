#include "psj/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace psj {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const ConfigEntry& e, const std::string& want) {
  throw ConfigError("line " + std::to_string(e.line) + ": key '" + key + "' expects " + want +
                    ", got '" + e.value + "'");
}

double to_double(const std::string& key, const ConfigEntry& e) {
  if (e.value == "inf") return kInf;
  double v = 0.0;
  const char* end = e.value.data() + e.value.size();
  auto [p, ec] = std::from_chars(e.value.data(), end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v)) bad_value(key, e, "a number");
  return v;
}

std::int64_t to_int(const std::string& key, const ConfigEntry& e) {
  std::int64_t v = 0;
  const char* end = e.value.data() + e.value.size();
  auto [p, ec] = std::from_chars(e.value.data(), end, v);
  if (ec != std::errc() || p != end) bad_value(key, e, "an integer");
  return v;
}

bool to_bool(const std::string& key, const ConfigEntry& e) {
  if (e.value == "true" || e.value == "1") return true;
  if (e.value == "false" || e.value == "0") return false;
  bad_value(key, e, "true or false");
}

std::vector<double> to_list(const std::string& key, const ConfigEntry& e) {
  std::vector<double> out;
  std::stringstream ss(e.value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) bad_value(key, e, "a comma-separated list of numbers");
    out.push_back(to_double(key, ConfigEntry{item, e.line}));
  }
  if (out.empty()) bad_value(key, e, "a non-empty list");
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_double(v[i]);
  }
  return out;
}

using Setter = std::function<void(ExperimentSpec&, const std::string&, const ConfigEntry&)>;
using Getter = std::function<std::string(const ExperimentSpec&)>;
struct KeyDef {
  std::string key;
  Setter set;
  Getter get;
};

#define PSJ_DOUBLE(name, field)                                                                \
  KeyDef{name, [](ExperimentSpec& s, const std::string& k, const ConfigEntry& e) {             \
           s.field = to_double(k, e);                                                          \
         },                                                                                    \
         [](const ExperimentSpec& s) { return format_double(s.field); }}
#define PSJ_INT(name, field, type)                                                             \
  KeyDef{name, [](ExperimentSpec& s, const std::string& k, const ConfigEntry& e) {             \
           s.field = static_cast<type>(to_int(k, e));                                          \
         },                                                                                    \
         [](const ExperimentSpec& s) { return std::to_string(s.field); }}
#define PSJ_BOOL(name, field)                                                                  \
  KeyDef{name, [](ExperimentSpec& s, const std::string& k, const ConfigEntry& e) {             \
           s.field = to_bool(k, e);                                                            \
         },                                                                                    \
         [](const ExperimentSpec& s) { return std::string(s.field ? "true" : "false"); }}

const std::vector<KeyDef>& key_defs() {
  static const std::vector<KeyDef> defs = {
      // scenario
      KeyDef{"oracle", [](ExperimentSpec& s, const std::string&, const ConfigEntry& e) { s.scenario.oracle = e.value; },
             [](const ExperimentSpec& s) { return s.scenario.oracle; }},
      PSJ_INT("dim", scenario.dim, int),
      PSJ_INT("classes", scenario.classes, int),
      PSJ_DOUBLE("planar_s", scenario.planar_s),
      PSJ_DOUBLE("planar_eps", scenario.planar_eps),
      PSJ_DOUBLE("planar_offset", scenario.planar_offset),
      PSJ_INT("timeout_ms", scenario.timeout_ms, int),
      KeyDef{"noise",
             [](ExperimentSpec& s, const std::string& k, const ConfigEntry& e) {
               try {
                 s.noise = parse_noise_model(e.value);
               } catch (const ConfigError&) {
                 bad_value(k, e, "none, flip, temperature or input-noise");
               }
             },
             [](const ExperimentSpec& s) { return to_string(s.noise); }},
      KeyDef{"levels", [](ExperimentSpec& s, const std::string& k, const ConfigEntry& e) { s.levels = to_list(k, e); },
             [](const ExperimentSpec& s) { return join(s.levels); }},
      PSJ_INT("instances", instances, int),
      PSJ_INT("first_instance", first_instance, int),
      PSJ_INT("seed", seed, std::uint64_t),
      PSJ_INT("workers", workers, int),
      // attack
      KeyDef{"variant",
             [](ExperimentSpec& s, const std::string& k, const ConfigEntry& e) {
               try {
                 s.attack.variant = parse_variant(e.value);
               } catch (const ConfigError&) {
                 bad_value(k, e, "psj, hsj, hsj-r or psj-truegrad");
               }
             },
             [](const ExperimentSpec& s) { return to_string(s.attack.variant); }},
      PSJ_INT("iterations", attack.iterations, int),
      PSJ_DOUBLE("n0_det", attack.n0_det),
      PSJ_DOUBLE("r_mult", attack.r_mult),
      PSJ_DOUBLE("enlarge", attack.enlarge),
      PSJ_DOUBLE("radius_divisor", attack.radius_divisor),
      PSJ_DOUBLE("theta_det", attack.theta_det),
      PSJ_DOUBLE("cdet_beta_scale", attack.cdet_beta_scale),
      PSJ_INT("n_floor", attack.n_floor, std::int64_t),
      PSJ_INT("grad_batch", attack.grad_batch, int),
      PSJ_INT("gp_max_halvings", attack.gp_max_halvings, int),
      PSJ_INT("hsj_repeats", attack.hsj_repeats, int),
      PSJ_BOOL("hsj_enlarged_radius", attack.hsj_enlarged_radius),
      PSJ_BOOL("shrink_priors", attack.shrink_priors),
      PSJ_DOUBLE("fd_rel_step", attack.fd_rel_step),
      PSJ_DOUBLE("border_u_limit", attack.border_u_limit),
      // grid
      PSJ_DOUBLE("z_min", attack.grid.z_min),
      PSJ_DOUBLE("z_max", attack.grid.z_max),
      PSJ_INT("n_z", attack.grid.n_z, int),
      PSJ_DOUBLE("log10_s_min", attack.grid.log10_s_min),
      PSJ_DOUBLE("log10_s_max", attack.grid.log10_s_max),
      PSJ_INT("n_s", attack.grid.n_s, int),
      KeyDef{"eps_values",
             [](ExperimentSpec& s, const std::string& k, const ConfigEntry& e) { s.attack.grid.eps_values = to_list(k, e); },
             [](const ExperimentSpec& s) { return join(s.attack.grid.eps_values); }},
      PSJ_INT("n_x", attack.grid.n_x, int),
      // bin search
      KeyDef{"acquisition",
             [](ExperimentSpec& s, const std::string& k, const ConfigEntry& e) {
               if (e.value == "mi") {
                 s.attack.bin.acquisition = Acquisition::kMutualInformation;
               } else if (e.value == "ei") {
                 s.attack.bin.acquisition = Acquisition::kExpectedImprovement;
               } else {
                 bad_value(k, e, "mi or ei");
               }
             },
             [](const ExperimentSpec& s) { return to_string(s.attack.bin.acquisition); }},
      PSJ_INT("k", attack.bin.k, int),
      PSJ_INT("m", attack.bin.m, int),
      PSJ_INT("max_queries", attack.bin.max_queries, std::int64_t),
      PSJ_BOOL("band_sampling", attack.bin.band_sampling),
      PSJ_DOUBLE("mi_prune", attack.bin.mi_prune),
      PSJ_DOUBLE("n_max", attack.bin.size.n_max),
      KeyDef{"size_mode",
             [](ExperimentSpec& s, const std::string& k, const ConfigEntry& e) {
               if (e.value == "posterior") {
                 s.attack.bin.size.mode = QuerySizeMode::kPosterior;
               } else if (e.value == "z-marginal") {
                 s.attack.bin.size.mode = QuerySizeMode::kZMarginal;
               } else {
                 bad_value(k, e, "posterior or z-marginal");
               }
             },
             [](const ExperimentSpec& s) {
               return std::string(s.attack.bin.size.mode == QuerySizeMode::kPosterior ? "posterior" : "z-marginal");
             }},
  };
  return defs;
}

#undef PSJ_DOUBLE
#undef PSJ_INT
#undef PSJ_BOOL

}  // namespace

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ConfigMap parse_key_values(const std::string& text) {
  ConfigMap out;
  std::stringstream ss(text);
  std::string raw;
  int line = 0;
  while (std::getline(ss, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line) + ": expected key=value, got '" + body + "'");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line) + ": empty key");
    if (out.count(key))
      throw ConfigError("line " + std::to_string(line) + ": duplicate key '" + key + "'");
    out[key] = ConfigEntry{value, line};
  }
  return out;
}

void apply_config(const ConfigMap& entries, ExperimentSpec& spec) {
  const auto& defs = key_defs();
  for (const auto& [key, entry] : entries) {
    auto it = std::find_if(defs.begin(), defs.end(), [&](const KeyDef& d) { return d.key == key; });
    if (it == defs.end())
      throw ConfigError("line " + std::to_string(entry.line) + ": unknown config key '" + key + "'");
    it->set(spec, key, entry);
  }
}

ExperimentSpec parse_config(const std::string& text) {
  ExperimentSpec spec;
  apply_config(parse_key_values(text), spec);
  return spec;
}

ExperimentSpec load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_config_text(const ExperimentSpec& spec) {
  std::string out;
  for (const auto& d : key_defs()) out += d.key + " = " + d.get(spec) + "\n";
  return out;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& d : key_defs()) k.push_back(d.key);
    return k;
  }();
  return keys;
}

}  // namespace psj
