#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "geq/oracle.hpp"
#include "geq/solvers.hpp"
#include "geq/types.hpp"

namespace geq {

/// Library version baked in at build time.
std::string version();

/// Everything needed to reproduce and audit one CLI run.
struct RunReport {
  std::string version;
  std::string command;
  std::string mode;
  std::uint64_t seed = 0;
  SolverConfig config;
  std::string economy_digest;
  std::vector<EquilibriumResult> results;
  std::optional<NegishiResult> negishi;
  double wall_time_seconds = 0.0;
  std::vector<std::string> warnings;
};

nlohmann::json to_json(const SolverConfig& config);
SolverConfig config_from_json(const nlohmann::json& j);

/// Applies "key=value" to a config. Keys use the dashed names of to_json;
/// weights take a comma-separated list. Throws invalid_config.
void apply_override(SolverConfig& config, std::string_view assignment);

nlohmann::json to_json(const EquilibriumResult& result);
EquilibriumResult result_from_json(const nlohmann::json& j);

nlohmann::json to_json(const NegishiResult& result);
NegishiResult negishi_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& j);

}  // namespace geq
