#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vulnesis/domain.hpp"

namespace vulnesis {

// ---------------------------------------------------------------------------
// Type masters

struct TypeEntry {
  std::string code;
  std::string label;
  std::set<std::string> aliases;
  friend bool operator==(const TypeEntry&, const TypeEntry&) = default;
};

struct TypeMaster {
  TypeCategory category = TypeCategory::Wall;
  std::map<std::string, TypeEntry> entries;  // by code

  /// Code for a raw value, matching codes first and then aliases.
  std::optional<std::string> resolve(std::string_view raw) const;
  friend bool operator==(const TypeMaster&, const TypeMaster&) = default;
};

struct TypologyMaster {
  std::string id;
  std::string name;
  std::string description;
  friend bool operator==(const TypologyMaster&, const TypologyMaster&) = default;
};

/// System-wide catalogues shared by every project under one root.
struct Masters {
  std::map<TypeCategory, TypeMaster> types;
  std::vector<TypologyMaster> typologies;

  Masters();
  TypeMaster& type_master(TypeCategory category) { return types.at(category); }
  const TypeMaster& type_master(TypeCategory category) const { return types.at(category); }
  const TypologyMaster* find_typology(std::string_view id) const;

  friend bool operator==(const Masters&, const Masters&) = default;
};

/// Throws DuplicateCode.
TypeMaster& register_type(TypeMaster& master, const std::string& code, const std::string& label);

/// Throws UnknownCode. An alias already pointing elsewhere is moved.
TypeMaster& add_alias(TypeMaster& master, const std::string& alias, const std::string& code);

/// Project-scoped alias; the target code must exist in the system master.
void add_project_alias(Project& project, const Masters& masters, TypeCategory category,
                       const std::string& alias, const std::string& code);

/// Resolves raw type strings through project aliases, then the system master.
class TypeResolver {
 public:
  TypeResolver(const Masters& masters, const TypeAliases& aliases)
      : masters_(masters), aliases_(aliases) {}

  std::optional<std::string> resolve(TypeCategory category, std::string_view raw) const;

 private:
  const Masters& masters_;
  const TypeAliases& aliases_;
};

// ---------------------------------------------------------------------------
// Cadastre parsing

struct ColumnMap {
  std::string departamento = "dep";
  std::string centro = "centro";
  std::string distrito = "distrito";
  std::string manzana = "manzana";
  std::string lote = "lote";
  std::string edificacion = "edificacion";
  std::string wall = "pared";
  std::string roof = "techo";
  std::string use = "uso";
  std::string state = "estado";
  std::string year = "anio";
};

struct CadastreRow {
  CadastralKey key;
  std::string wall_type;
  std::string roof_type;
  std::string use_type;
  std::string state_type;
  int construction_year = 0;
  std::size_t row_number = 0;
};

struct RowError {
  std::size_t row_number = 0;
  std::string reason;  // BadYear, MissingKeyField, MissingTypeField, DuplicateKey, FieldCount
  std::string message;
};

struct CadastreParse {
  std::vector<CadastreRow> rows;
  std::vector<RowError> errors;
};

/// Every data record becomes one row or one row error. Throws MissingColumn
/// before any row is processed.
CadastreParse parse_cadastre(std::string_view csv_text, const ColumnMap& mapping = {});

/// Replaces the cadastral inventory with fresh buildings numbered 1..N.
/// Legal only in state Created.
void import_cadastre(Project& project, std::span<const CadastreRow> rows);

using TypeCounts = std::map<TypeCategory, std::map<std::string, std::size_t>>;

TypeCounts discover_types(std::span<const CadastreRow> rows);
TypeCounts discover_types(const Project& project);

struct ReconcileReport {
  std::map<TypeCategory, std::map<std::string, std::string>> matched;  // raw -> code
  std::map<TypeCategory, std::vector<std::string>> unmatched;

  bool complete() const;
};

ReconcileReport reconcile_types(const TypeCounts& discovered, const Masters& masters,
                                const TypeAliases& aliases = {});

struct SubTypologyCount {
  SubTypologyKey key;
  std::size_t count = 0;
};

SubTypologyKey derive_subtypology(const Building& building, const TypeResolver& resolver,
                                  int cutoff_year);

/// Tags every cadastral building with its key and returns the keys with
/// counts in key order. Throws UnreconciledTypes.
std::vector<SubTypologyCount> discover_subtypologies(Project& project, const Masters& masters);

/// Key counts of already-tagged buildings, without re-deriving.
std::vector<SubTypologyCount> subtypology_counts(const Project& project);

// ---------------------------------------------------------------------------
// Cartography

struct CartographyReport {
  LayerKind kind = LayerKind::Blocks;
  std::size_t feature_count = 0;
  std::vector<std::string> missing_in_layer;      // referenced by buildings only
  std::vector<std::string> missing_in_buildings;  // present in the layer only
};

MapLayer parse_layer(std::string_view geojson_text, LayerKind kind, const std::string& key_property);

/// Stores the layer and reports key mismatches against the buildings
/// (block codes for Blocks, full cadastral keys for Parcels).
CartographyReport load_cartography(Project& project, std::string_view geojson_text, LayerKind kind,
                                   const std::string& key_property);

CartographyReport match_report(const Project& project, LayerKind kind);

// ---------------------------------------------------------------------------
// Field data

struct FieldRecord {
  std::optional<BuildingId> id;  // absent: new independent building
  std::optional<Point> coord;
  std::optional<std::string> photo_id;
  std::array<std::optional<SurveyClass>, kParameterCount> classes{};
  RawMeasurements raw;
  std::string observer_id;
  std::string date;
  // cadastral corrections
  std::optional<std::string> wall_type;
  std::optional<std::string> roof_type;
  std::optional<std::string> use_type;
  std::optional<std::string> state_type;
  std::optional<int> construction_year;
};

struct FieldIngestResult {
  BuildingId id = 0;
  bool created = false;
  bool surveyed = false;
  bool corrected = false;
  bool retagged = false;
};

FieldIngestResult ingest_field_data(Project& project, const Masters& masters,
                                    const FieldRecord& record);

struct FieldDataParse {
  std::vector<FieldRecord> records;
  std::vector<std::size_t> record_rows;  // source line of each record
  std::vector<RowError> errors;
};

/// Field-data batch: id (or NEW), x, y, photo, p1..p11, the raw form fields,
/// observer, date and optional pared/techo/uso/estado/anio corrections.
FieldDataParse parse_field_data(std::string_view csv_text);

}  // namespace vulnesis
