#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace vulnesis {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::size_t kParameterCount = 11;

using BuildingId = std::int64_t;

/// Unknown JSON members kept verbatim (serialized text) so that files written
/// by newer releases survive a load/save cycle.
using OpaqueFields = std::map<std::string, std::string>;

enum class ProjectState {
  Created,
  TypesReconciled,
  TypologiesDefined,
  Sampled,
  FieldWork,
  UploadingResults,
  Closed,
};

inline constexpr std::array<ProjectState, 7> kAllStates = {
    ProjectState::Created,   ProjectState::TypesReconciled, ProjectState::TypologiesDefined,
    ProjectState::Sampled,   ProjectState::FieldWork,       ProjectState::UploadingResults,
    ProjectState::Closed,
};

enum class SurveyClass : std::uint8_t { A = 0, B = 1, C = 2, D = 3 };

enum class TypeCategory { Wall, Roof, Use, State };

inline constexpr std::array<TypeCategory, 4> kAllCategories = {
    TypeCategory::Wall, TypeCategory::Roof, TypeCategory::Use, TypeCategory::State};

enum class BuildingKind { Cadastral, Independent };

enum class ViSource { None, Direct, Propagated };

enum class LayerKind { Parcels, Blocks, ProjectArea };

std::string_view to_string(ProjectState s) noexcept;
std::string_view to_string(SurveyClass c) noexcept;
std::string_view to_string(TypeCategory c) noexcept;
std::string_view to_string(BuildingKind k) noexcept;
std::string_view to_string(ViSource s) noexcept;
std::string_view to_string(LayerKind k) noexcept;

// Parsers throw Error{BadRequest} on unknown names.
ProjectState parse_project_state(std::string_view text);
SurveyClass parse_survey_class(std::string_view text);
TypeCategory parse_type_category(std::string_view text);
BuildingKind parse_building_kind(std::string_view text);
ViSource parse_vi_source(std::string_view text);
LayerKind parse_layer_kind(std::string_view text);

/// One row of the vulnerability scale: class values K for A..D and weight W.
struct ScaleRow {
  std::string name;
  std::array<double, 4> k{};
  double w = 1.0;

  double value(SurveyClass c) const { return k[static_cast<std::size_t>(c)]; }
  friend bool operator==(const ScaleRow&, const ScaleRow&) = default;
};

struct VulnerabilityScale {
  std::vector<ScaleRow> rows;

  /// Benedetti-Petrini eleven-parameter scale (maximum index 382.5).
  static VulnerabilityScale benedetti_petrini();

  /// Sum of k[D]*w, the largest attainable index.
  double max_vi() const;

  friend bool operator==(const VulnerabilityScale&, const VulnerabilityScale&) = default;
};

/// Optional raw measurements from the field form. Ratios may exceed 1.
struct RawMeasurements {
  std::optional<double> floors;              // N
  std::optional<double> total_area;          // At, m2
  std::optional<double> resistant_area_x;    // Ax, m2
  std::optional<double> resistant_area_y;    // Ay, m2
  std::optional<double> masonry_shear;       // tk, Ton/m2
  std::optional<double> storey_height;       // h, m
  std::optional<double> masonry_weight;      // Pm, Ton/m3
  std::optional<double> diaphragm_weight;    // Ps, Ton/m2
  std::optional<double> plan_ratio_a;        // b1 = a/L
  std::optional<double> plan_ratio_b;        // b2 = b/L
  std::optional<double> porch_pct;
  std::optional<double> t_over_h;
  std::optional<double> delta_m_over_m_pct;
  std::optional<double> l_over_s;

  friend bool operator==(const RawMeasurements&, const RawMeasurements&) = default;
};

/// Field names as printed on the survey form, in form order.
inline constexpr std::array<std::string_view, 14> kRawFieldNames = {
    "N", "At", "Ax", "Ay", "tk", "h", "Pm", "Ps", "b1", "b2",
    "porch_pct", "T_over_H", "deltaM_over_M_pct", "L_over_S"};

std::optional<double>& raw_field(RawMeasurements& raw, std::size_t index);
const std::optional<double>& raw_field(const RawMeasurements& raw, std::size_t index);

struct SurveyRecord {
  std::array<SurveyClass, kParameterCount> classes{};
  RawMeasurements raw;
  std::string observer_id;
  std::string date;

  friend bool operator==(const SurveyRecord&, const SurveyRecord&) = default;
};

struct CadastralKey {
  std::string departamento;
  std::string centro;
  std::string distrito;
  std::string manzana;
  std::string lote;
  std::string edificacion;

  /// Six codes joined by '-'; used as the parcel key.
  std::string text() const;
  const std::string& block() const { return manzana; }

  auto operator<=>(const CadastralKey&) const = default;
  bool operator==(const CadastralKey&) const = default;
};

struct SubTypologyKey {
  std::string wall_type;
  std::string roof_type;
  std::string use_type;
  std::string state_type;
  bool pre_cutoff = false;

  /// "WALL|ROOF|USE|STATE|pre" or "...|post".
  std::string text() const;
  static SubTypologyKey parse(std::string_view text);

  auto operator<=>(const SubTypologyKey&) const = default;
  bool operator==(const SubTypologyKey&) const = default;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct Building {
  BuildingKind kind = BuildingKind::Cadastral;
  BuildingId id = 0;
  std::optional<CadastralKey> cadastral_key;
  std::string wall_type;
  std::string roof_type;
  std::string use_type;
  std::string state_type;
  int construction_year = 0;
  std::optional<SubTypologyKey> subtypology;
  std::optional<std::string> typology_id;
  bool selected_for_survey = false;
  bool surveyed = false;
  bool edited = false;
  std::optional<Point> coord;
  std::optional<std::string> photo_id;
  std::optional<SurveyRecord> survey;
  std::optional<double> vi;
  std::optional<double> vi_norm;
  ViSource vi_source = ViSource::None;
  OpaqueFields extra;

  friend bool operator==(const Building&, const Building&) = default;
};

struct Level {
  std::string name;
  int ordinal = 0;
  friend bool operator==(const Level&, const Level&) = default;
};

struct TypologyStats {
  std::size_t count = 0;
  std::size_t surveyed = 0;
  std::optional<double> avg_vi_norm;
  std::optional<double> total_vi;
  std::optional<Level> level;  // absent means "no-data"

  friend bool operator==(const TypologyStats&, const TypologyStats&) = default;
};

struct Typology {
  std::string id;
  std::string name;
  std::string description;
  std::set<SubTypologyKey> keys;
  std::optional<double> sample_quota;
  TypologyStats stats;
  OpaqueFields extra;

  friend bool operator==(const Typology&, const Typology&) = default;
};

struct ScenarioMeta {
  std::optional<double> latitude;
  std::optional<double> longitude;
  std::optional<double> depth_km;
  std::optional<double> magnitude;
  friend bool operator==(const ScenarioMeta&, const ScenarioMeta&) = default;
};

struct Damage {
  double d = 0.0;
  Level level;
  friend bool operator==(const Damage&, const Damage&) = default;
};

struct Scenario {
  std::string id;
  std::string name;
  double ag = 0.0;
  ScenarioMeta meta;
  std::map<BuildingId, Damage> damages;
  OpaqueFields extra;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

using Ring = std::vector<Point>;
using Polygon = std::vector<Ring>;  // outer ring followed by holes

struct LayerFeature {
  std::string key;
  std::vector<Polygon> polygons;

  /// All rings of all polygons, for even-odd containment.
  std::vector<Ring> rings() const;
  friend bool operator==(const LayerFeature&, const LayerFeature&) = default;
};

struct MapLayer {
  LayerKind kind = LayerKind::Blocks;
  std::string key_property;
  std::vector<LayerFeature> features;
  friend bool operator==(const MapLayer&, const MapLayer&) = default;
};

/// Per-project alias overrides: category -> alias -> master code.
using TypeAliases = std::map<TypeCategory, std::map<std::string, std::string>>;

struct Project {
  std::string id;
  std::string name;
  std::string description;
  std::string author;
  std::string date;
  ProjectState state = ProjectState::Created;
  VulnerabilityScale scale = VulnerabilityScale::benedetti_petrini();
  int cutoff_year = 1972;
  std::array<double, 2> vuln_thresholds{33.3, 66.6};
  std::array<double, 4> damage_thresholds{0.15, 0.35, 0.6, 0.9};
  bool stale = false;
  std::string stale_reason;
  std::string rng_identity;
  std::vector<Building> buildings;  // ascending id
  std::vector<Typology> typologies;
  std::vector<Scenario> scenarios;
  std::map<LayerKind, MapLayer> layers;
  TypeAliases aliases;
  OpaqueFields extra;

  Building* find_building(BuildingId id);
  const Building* find_building(BuildingId id) const;
  Typology* find_typology(std::string_view typology_id);
  const Typology* find_typology(std::string_view typology_id) const;
  Scenario* find_scenario(std::string_view scenario_id);
  const Scenario* find_scenario(std::string_view scenario_id) const;
  const MapLayer* layer(LayerKind kind) const;

  BuildingId next_building_id() const;
  bool has_any_vi() const;

  friend bool operator==(const Project&, const Project&) = default;
};

/// Checks threshold ordering; throws Error{InvalidThresholds}.
void validate_thresholds(const Project& project);

/// Generates "<prefix><n>" with n one past the largest numeric suffix in use.
std::string next_id(std::string_view prefix, const std::vector<std::string>& taken);

}  // namespace vulnesis
