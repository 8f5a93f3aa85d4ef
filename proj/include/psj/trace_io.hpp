#pragma once

// Attack traces on disk: <prefix>.jsonl holds one JSON object per
// iteration, <prefix>.meta.json the config, seed, final outputs and flags.
// Doubles are written in shortest round-trip form; infinities as "inf".

#include <string>

#include "psj/attack.hpp"
#include "psj/config.hpp"

#include <json.hpp>

namespace psj {

inline constexpr const char* kEngineVersion = "0.1.0";

nlohmann::json record_to_json(const IterationRecord& rec);
IterationRecord record_from_json(const nlohmann::json& j);

/// `context` supplies the non-attack keys of the config snapshot.
nlohmann::json meta_to_json(const AttackTrace& trace, const ExperimentSpec& context);
/// Fills everything but the records.
AttackTrace meta_from_json(const nlohmann::json& j);

void write_trace(const std::string& prefix, const AttackTrace& trace,
                 const ExperimentSpec& context);
AttackTrace read_trace(const std::string& prefix);

/// Removes every "wall" member (recursively) so traces can be compared
/// byte for byte.
nlohmann::json strip_wall_times(nlohmann::json j);

}  // namespace psj
