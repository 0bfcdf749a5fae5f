#pragma once

// JSON file formats (see README.md) and the bundle file that ties
// them together for the command-line tool. Loaders throw ConfigError with the
// offending file and field in the message.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hypmix/environment.hpp"
#include "hypmix/experiment.hpp"
#include "hypmix/learner_model.hpp"
#include "hypmix/remote_backend.hpp"
#include "hypmix/synthetic_policy.hpp"

namespace hypmix {

using json = nlohmann::json;

json read_json_file(const std::filesystem::path& path);

EnvironmentSpec environment_from_json(const json& j);

// Classes, characteristics and hypotheses. Hypotheses that fail validation
// are still loaded; validate_catalog reports them.
Catalog catalog_from_json(const json& j);
json catalog_to_json(const Catalog& catalog);
std::vector<std::string> validate_catalog(const Catalog& catalog);

// Action list entries are canonical tokens ("measure-f1-x", "submit",
// "exit") or the groups "@productive" and "@measurements".
std::vector<ActionCategory> actions_from_json(const json& j);

// {"hypotheses": [...], "persona": {...}}. Persona levels are taken as
// written, so out-of-range values surface through validate().
LearnerModel learner_model_from_json(const json& j, const Catalog& catalog);

EditGraph edit_graph_from_json(const json& j, const Catalog& catalog);

ExperimentPlan plan_from_json(const json& j);

SyntheticPolicy policy_from_json(const json& j);
// Either {"default": policy, "rules": [...]} or a bare policy.
PolicySchedule schedule_from_json(const json& j);

RemoteConfig remote_config_from_json(const json& j);

json record_to_json(const RunRecord& record);
RunRecord record_from_json(const json& j);
std::vector<RunRecord> read_records(const std::filesystem::path& path);

json report_to_json(const CalibrationReport& report);
CalibrationReport report_from_json(const json& j);

json test_result_to_json(const TestResult& result);

// The file the CLI's --config points at. Paths inside it are relative to it.
struct Bundle {
  std::filesystem::path path;
  EnvironmentSpec environment = EnvironmentSpec::builtin();
  Catalog catalog = Catalog::builtin();
  std::optional<LearnerModel> learner_model;
  std::optional<json> edit_graph;  // built lazily: needs the catalog and may be invalid
  ExperimentPlan plan;
  std::string backend = "synthetic";  // "synthetic" | "remote"
  PolicySchedule policy;
  RemoteConfig remote;
  std::optional<std::filesystem::path> cache_dir;
  std::filesystem::path out_dir = "out";
};

Bundle load_bundle(const std::filesystem::path& path);

}  // namespace hypmix
