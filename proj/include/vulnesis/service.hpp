#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include <json.hpp>

#include "vulnesis/domain.hpp"
#include "vulnesis/geo.hpp"
#include "vulnesis/ingest.hpp"
#include "vulnesis/typology.hpp"

namespace vulnesis {

/// The workflow surface shared by the HTTP service and the CLI. Every method
/// loads the last committed project, delegates to the module operations and,
/// for mutations, commits through the store under the project lock before
/// returning. Failures surface as vulnesis::Error.
class Workbench {
 public:
  using json = nlohmann::json;

  explicit Workbench(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  json list_projects() const;
  json create_project(const json& body);
  json project_summary(const std::string& id) const;
  Project load(const std::string& id) const;

  json import_cadastre(const std::string& id, std::string_view csv_text,
                       const ColumnMap& mapping = {});
  json load_cartography(const std::string& id, LayerKind kind, const std::string& key_property,
                        std::string_view geojson_text);

  json types(const std::string& id) const;
  /// {"action": "register"|"alias", "category", "code", "label", "alias",
  ///  "scope": "project"|"system"}
  json type_action(const std::string& id, const json& body);
  json masters() const;

  json subtypologies(const std::string& id) const;
  json typologies(const std::string& id) const;
  /// {"name", "description"} creates; {"master_id"} imports.
  json create_typology(const std::string& id, const json& body);
  json delete_typology(const std::string& id, const std::string& typology_id);
  json assign_keys(const std::string& id, const std::string& typology_id, const json& body);
  json unassign_keys(const std::string& id, const std::string& typology_id, const json& body);

  json sample(const std::string& id, const json& body);
  /// report 'A' (building matrix) or 'B' (survey form).
  std::string field_forms(const std::string& id, char report) const;
  json field_data(const std::string& id, const json& record);
  json field_data_csv(const std::string& id, std::string_view csv_text);

  json scenarios(const std::string& id) const;
  json define_scenario(const std::string& id, const json& body);
  json run_scenario(const std::string& id, const std::string& scenario_id);
  json propagate(const std::string& id);

  json buildings(const std::string& id, const BuildingFilter& filter) const;
  std::string map(const std::string& id, const Metric& metric, Granularity granularity) const;

  /// {"target": "<ProjectState>"}
  json set_state(const std::string& id, const json& body);
  json set_scale(const std::string& id, const json& body);
  json set_thresholds(const std::string& id, const json& body);
  json recompute(const std::string& id);

 private:
  template <typename F>
  json mutate(const std::string& id, F&& apply);
  template <typename F>
  json mutate_with_masters(const std::string& id, F&& apply);

  std::mutex& project_mutex(const std::string& id);

  std::filesystem::path root_;
  std::mutex registry_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> project_mutexes_;
  std::mutex masters_mutex_;
};

/// Adds "schema_version" to object bodies.
nlohmann::json with_schema(nlohmann::json body);

FieldRecord field_record_from_json(const nlohmann::json& doc);
SampleSpec sample_spec_from_json(const nlohmann::json& doc);

}  // namespace vulnesis
