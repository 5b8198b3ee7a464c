#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "navsec/attack.hpp"
#include "navsec/metrics.hpp"
#include "navsec/reasoner.hpp"
#include "navsec/verbalizer.hpp"
#include "navsec/vocab.hpp"
#include "navsec/world.hpp"

namespace navsec {

inline constexpr int kSchemaVersion = 1;

using json = nlohmann::json;

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
/// Parses a JSON document and checks `schema_version` (and `kind` when given).
json read_json_file(const std::string& path, const std::string& kind = {});
/// Writes `j` with two-space indentation and a trailing newline.
void write_json_file(const std::string& path, const json& j);
void check_schema(const json& j, const std::string& kind);

json world_to_json(const NavGraph& g);
NavGraph world_from_json(const json& j);

json route_to_json(const RouteInstance& r);
RouteInstance route_from_json(const json& j);
json routes_to_json(const std::vector<RouteInstance>& routes);
std::vector<RouteInstance> routes_from_json(const json& j);

json prompt_to_json(const Prompt& p);
Prompt prompt_from_json(const json& j);

json attack_config_to_json(const AttackConfig& cfg);
AttackConfig attack_config_from_json(const json& j, const AttackConfig& base = {});
json attack_result_to_json(const AttackResult& r, const Vocab& vocab);
AttackResult attack_result_from_json(const json& j);
json attack_results_to_json(const std::vector<std::optional<AttackResult>>& results,
                            const std::vector<RouteInstance>& routes, const Vocab& vocab);
std::vector<std::optional<AttackResult>> attack_results_from_json(const json& j,
                                                                  const std::vector<RouteInstance>& routes);

json trace_to_json(const EpisodeTrace& t);
EpisodeTrace trace_from_json(const json& j);
json metrics_to_json(const MetricsReport& m);
MetricsReport metrics_from_json(const json& j);

/// Binary checkpoint: magic "NAVSEC01", header fields, then every tensor as a
/// u64 length followed by little-endian f64 values. The vocabulary goes to
/// `<path>.vocab.json`.
void save_checkpoint(const std::string& path, const ReasonerParams& params, const Vocab& vocab);
std::pair<ReasonerParams, Vocab> load_checkpoint(const std::string& path);

}  // namespace navsec
