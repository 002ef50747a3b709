#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "vulnesis/domain.hpp"

namespace vulnesis {

/// Even-odd containment over all rings (holes supported). Points on an edge
/// count as inside. Throws DegenerateRing.
bool point_in_polygon(Point p, std::span<const Ring> rings);

struct BlockAssignment {
  std::map<BuildingId, std::string> blocks;
  std::vector<BuildingId> unassigned;
};

/// Geometry first, then the cadastral block code when the layer knows it.
/// Throws NoBlocksLayer.
BlockAssignment assign_blocks(const Project& project);

enum class Granularity { Building, Block, Project };

std::string_view to_string(Granularity g) noexcept;
Granularity parse_granularity(std::string_view text);

struct Metric {
  enum class Kind { Vulnerability, Damage };
  Kind kind = Kind::Vulnerability;
  std::string scenario_id;  // Damage only

  static Metric vulnerability() { return {}; }
  static Metric damage(std::string scenario) { return {Kind::Damage, std::move(scenario)}; }
  std::string_view name() const noexcept;
};

struct AggregateFeature {
  std::string key;
  std::optional<double> value;
  std::optional<Level> level;  // absent: no-data
  std::size_t n = 0;           // members holding the metric
  std::size_t members = 0;
  // Building granularity only.
  std::optional<BuildingId> building_id;
  ViSource vi_source = ViSource::None;
};

struct AggregateResult {
  Granularity granularity = Granularity::Building;
  Metric metric;
  std::vector<AggregateFeature> features;
};

/// Per-building values, block means or the project mean. Throws StaleProject
/// and UnknownScenario.
AggregateResult aggregate(const Project& project, const Metric& metric, Granularity granularity);

/// GeoJSON FeatureCollection with features in key order. Throws MissingLayer
/// when the granularity has no geometry source.
std::string export_map(const Project& project, const Metric& metric, Granularity granularity);

enum class SurveyKind { Encuestadas, NoEncuestadas };

struct BuildingFilter {
  std::optional<std::set<BuildingId>> ids;
  std::optional<SurveyKind> survey_kind;
  std::optional<bool> edited;
  std::optional<std::string> typology_id;
  std::optional<std::string> vuln_level;

  bool empty() const;
};

struct FilterResult {
  std::vector<Building> buildings;  // ascending id
  std::size_t total = 0;
  std::size_t filtered = 0;
};

/// Conjunction of the present criteria; an empty filter returns everything.
/// Throws UnknownTypology and UnknownLevel.
FilterResult filter_buildings(const Project& project, const BuildingFilter& filter);

/// A building counts as surveyed ("encuestada") once selected for the survey
/// or once survey data exists for it.
bool is_encuestada(const Building& b) noexcept;

}  // namespace vulnesis
