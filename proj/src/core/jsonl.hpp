#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "core/types.hpp"

namespace tcshpt {

using Json = nlohmann::ordered_json;

Json to_json(const Goal& goal);
Json to_json(const ParamDef& def);
Json to_json(const SearchSpace& space);
Json to_json(const Configuration& config);
Json to_json(const TrialResult& result);
Json to_json(const TrialRecord& record);
Json to_json(const ParamValue& value);

Goal goal_from_json(const Json& j);
ParamDef param_def_from_json(const Json& j);
SearchSpace space_from_json(const Json& j);
Configuration config_from_json(const Json& j);
TrialResult trial_result_from_json(const Json& j);
TrialRecord trial_record_from_json(const Json& j);
ParamValue param_value_from_json(const Json& j);

// JSONL layout: line 1 is a header object
//   {run_id, seed, goal, space, created_at, format_version: 1}
// and every following line is one trial record. UTF-8, no BOM.
std::string log_to_jsonl(const ExperimentLog& log);
ExperimentLog log_from_jsonl(const std::string& text);

void save_log(const ExperimentLog& log, const std::filesystem::path& path);
ExperimentLog load_log(const std::filesystem::path& path);

// Current UTC time as ISO 8601 ("2026-08-15T19:38:00Z").
std::string now_iso8601();

}  // namespace tcshpt
