#include "psj/trace_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace psj {
namespace {

using nlohmann::json;

json num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double get_num(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    throw InvalidInput("trace: bad number '" + s + "'");
  }
  return j.get<double>();
}

json params_to_json(const SigmoidParams& p) {
  return json{{"z", num(p.z)}, {"s", num(p.s)}, {"eps", num(p.eps)}};
}

SigmoidParams params_from_json(const json& j) {
  return SigmoidParams{get_num(j.at("z")), get_num(j.at("s")), get_num(j.at("eps"))};
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  return out;
}

}  // namespace

json record_to_json(const IterationRecord& r) {
  json j;
  j["t"] = r.t;
  j["point"] = r.point;
  j["segment_start"] = r.segment_start;
  j["estimates"] = params_to_json(r.estimates);
  j["c_det"] = r.c_det;
  j["n_t"] = r.n_t;
  j["queries"] = {{"bin_search", r.queries.bin_search},
                  {"gradient", r.queries.gradient},
                  {"step", r.queries.step}};
  j["wall"] = {{"bin_search", r.wall.bin_search}, {"gradient", r.wall.gradient}, {"step", r.wall.step}};
  j["queries_cum"] = r.queries_cum;
  j["border_distance"] = r.border_distance ? json(*r.border_distance) : json(nullptr);
  j["crossing_found"] = r.crossing_found;
  j["raw_distance"] = r.raw_distance;
  j["bin_stop"] = r.bin_stop;
  j["z_mass_near"] = r.z_mass_near;
  j["n_capped"] = r.n_capped;
  j["gp_capped"] = r.gp_capped;
  return j;
}

IterationRecord record_from_json(const json& j) {
  IterationRecord r;
  r.t = j.at("t").get<int>();
  r.point = j.at("point").get<PointVec>();
  r.segment_start = j.at("segment_start").get<PointVec>();
  r.estimates = params_from_json(j.at("estimates"));
  r.c_det = j.at("c_det").get<double>();
  r.n_t = j.at("n_t").get<std::int64_t>();
  const auto& q = j.at("queries");
  r.queries = {q.at("bin_search").get<std::int64_t>(), q.at("gradient").get<std::int64_t>(),
               q.at("step").get<std::int64_t>()};
  if (j.contains("wall")) {
    const auto& w = j.at("wall");
    r.wall = {w.at("bin_search").get<double>(), w.at("gradient").get<double>(), w.at("step").get<double>()};
  }
  r.queries_cum = j.at("queries_cum").get<std::int64_t>();
  if (!j.at("border_distance").is_null()) r.border_distance = j.at("border_distance").get<double>();
  r.crossing_found = j.at("crossing_found").get<bool>();
  r.raw_distance = j.at("raw_distance").get<double>();
  r.bin_stop = j.at("bin_stop").get<std::string>();
  r.z_mass_near = j.at("z_mass_near").get<double>();
  r.n_capped = j.at("n_capped").get<bool>();
  r.gp_capped = j.at("gp_capped").get<bool>();
  return r;
}

json meta_to_json(const AttackTrace& trace, const ExperimentSpec& context) {
  ExperimentSpec spec = context;
  spec.attack = trace.config;
  json cfg = json::object();
  for (const auto& [key, entry] : parse_key_values(to_config_text(spec))) cfg[key] = entry.value;
  json j;
  j["version"] = kEngineVersion;
  j["config"] = cfg;
  j["config_hash"] = fnv1a_hex(to_config_text(spec));
  j["seed"] = trace.seed;
  j["variant"] = to_string(trace.config.variant);
  j["records"] = trace.records.size();
  j["final_point"] = trace.final_point;
  j["final_estimates"] = params_to_json(trace.final_estimates);
  j["early_termination"] = trace.early_termination;
  j["non_converged"] = trace.non_converged;
  j["termination_reason"] = trace.termination_reason;
  j["transport_error"] = trace.transport_error ? json(*trace.transport_error) : json(nullptr);
  j["probe_available"] = trace.probe_available;
  j["total_queries"] = trace.total_queries;
  return j;
}

AttackTrace meta_from_json(const json& j) {
  AttackTrace t;
  std::string text;
  for (const auto& [key, value] : j.at("config").items()) text += key + "=" + value.get<std::string>() + "\n";
  t.config = parse_config(text).attack;
  t.seed = j.at("seed").get<std::uint64_t>();
  t.final_point = j.at("final_point").get<PointVec>();
  t.final_estimates = params_from_json(j.at("final_estimates"));
  t.early_termination = j.at("early_termination").get<bool>();
  t.non_converged = j.at("non_converged").get<bool>();
  t.termination_reason = j.at("termination_reason").get<std::string>();
  if (!j.at("transport_error").is_null()) t.transport_error = j.at("transport_error").get<std::string>();
  t.probe_available = j.at("probe_available").get<bool>();
  t.total_queries = j.at("total_queries").get<std::int64_t>();
  return t;
}

void write_trace(const std::string& prefix, const AttackTrace& trace, const ExperimentSpec& context) {
  {
    auto out = open_out(prefix + ".jsonl");
    for (const auto& r : trace.records) out << record_to_json(r).dump() << "\n";
  }
  auto meta = open_out(prefix + ".meta.json");
  meta << meta_to_json(trace, context).dump(2) << "\n";
}

AttackTrace read_trace(const std::string& prefix) {
  std::ifstream meta(prefix + ".meta.json");
  if (!meta) throw InvalidInput("cannot read '" + prefix + ".meta.json'");
  AttackTrace t = meta_from_json(json::parse(meta));
  std::ifstream in(prefix + ".jsonl");
  if (!in) throw InvalidInput("cannot read '" + prefix + ".jsonl'");
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) t.records.push_back(record_from_json(json::parse(line)));
  return t;
}

json strip_wall_times(json j) {
  if (j.is_object()) {
    j.erase("wall");
    for (auto& [k, v] : j.items()) v = strip_wall_times(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = strip_wall_times(v);
  }
  return j;
}

}  // namespace psj
