#pragma once

#include <json.hpp>

#include "vulnesis/domain.hpp"
#include "vulnesis/ingest.hpp"

namespace vulnesis::serialize {

using nlohmann::json;

// Readers throw vulnesis::Error (CorruptFile, UnknownKind) or
// nlohmann::json::exception on malformed input; the store adds file names
// and positions.

json scale_to_json(const VulnerabilityScale& scale);
VulnerabilityScale scale_from_json(const json& doc);

json survey_to_json(const SurveyRecord& survey);
SurveyRecord survey_from_json(const json& doc);

/// Single-table document: "kind" discriminates Cadastral and Independent,
/// and only the fields legal for the kind are written or accepted.
json building_to_json(const Building& building);
Building building_from_json(const json& doc);

json typology_to_json(const Typology& typology);
Typology typology_from_json(const json& doc);

json scenario_to_json(const Scenario& scenario, bool with_damages = true);
Scenario scenario_from_json(const json& doc);

json masters_to_json(const Masters& masters);
Masters masters_from_json(const json& doc);

json aliases_to_json(const TypeAliases& aliases);
TypeAliases aliases_from_json(const json& doc);

json layer_to_geojson(const MapLayer& layer);

/// project.json content: metadata, state, scale, thresholds and flags.
json project_meta_to_json(const Project& project);
void project_meta_from_json(const json& doc, Project& project);

json level_to_json(const std::optional<Level>& level);

}  // namespace vulnesis::serialize
