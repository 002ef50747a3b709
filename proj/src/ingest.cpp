#include "vulnesis/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include <json.hpp>

#include "vulnesis/csv.hpp"
#include "vulnesis/error.hpp"
#include "vulnesis/risk.hpp"
#include "vulnesis/typology.hpp"
#include "vulnesis/workflow.hpp"

namespace vulnesis {

using nlohmann::json;

namespace {

std::optional<int> parse_int(std::string_view text) {
  text = csv::trim(text);
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::optional<double> parse_double(std::string_view text) {
  text = csv::trim(text);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

std::string& type_field(Building& b, TypeCategory category) {
  switch (category) {
    case TypeCategory::Wall: return b.wall_type;
    case TypeCategory::Roof: return b.roof_type;
    case TypeCategory::Use: return b.use_type;
    case TypeCategory::State: return b.state_type;
  }
  return b.wall_type;
}

const std::string& type_field(const Building& b, TypeCategory category) {
  return type_field(const_cast<Building&>(b), category);
}

const std::string& type_field(const CadastreRow& r, TypeCategory category) {
  switch (category) {
    case TypeCategory::Wall: return r.wall_type;
    case TypeCategory::Roof: return r.roof_type;
    case TypeCategory::Use: return r.use_type;
    case TypeCategory::State: return r.state_type;
  }
  return r.wall_type;
}

/// Header lookup: column name -> index.
class Header {
 public:
  explicit Header(const csv::Record& names) {
    for (std::size_t i = 0; i < names.size(); ++i) index_.emplace(std::string(csv::trim(names[i])), i);
  }
  std::optional<std::size_t> find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t require(const std::string& name) const {
    auto idx = find(name);
    if (!idx) throw Error(ErrorCode::MissingColumn, "missing required column '" + name + "'");
    return *idx;
  }

 private:
  std::map<std::string, std::size_t> index_;
};

std::string cell(const csv::Record& record, std::optional<std::size_t> index) {
  if (!index || *index >= record.size()) return {};
  return std::string(csv::trim(record[*index]));
}

std::vector<Point> parse_ring(const json& coords) {
  if (!coords.is_array()) throw Error(ErrorCode::BadRequest, "ring is not an array");
  std::vector<Point> ring;
  ring.reserve(coords.size());
  for (const auto& pos : coords) {
    if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) {
      throw Error(ErrorCode::BadRequest, "position must be [x, y]");
    }
    ring.push_back({pos[0].get<double>(), pos[1].get<double>()});
  }
  if (ring.size() < 4 || !(ring.front() == ring.back())) {
    throw Error(ErrorCode::DegenerateRing, "ring needs at least 4 positions with first == last");
  }
  return ring;
}

Polygon parse_polygon(const json& coords) {
  if (!coords.is_array() || coords.empty()) throw Error(ErrorCode::BadRequest, "empty polygon");
  Polygon polygon;
  for (const auto& ring : coords) polygon.push_back(parse_ring(ring));
  return polygon;
}

}  // namespace

// ---------------------------------------------------------------------------

std::optional<std::string> TypeMaster::resolve(std::string_view raw) const {
  const std::string value(csv::trim(raw));
  if (entries.count(value)) return value;
  for (const auto& [code, entry] : entries) {
    if (entry.aliases.count(value)) return code;
  }
  return std::nullopt;
}

Masters::Masters() {
  for (auto category : kAllCategories) types[category].category = category;
}

const TypologyMaster* Masters::find_typology(std::string_view id) const {
  for (const auto& t : typologies) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

TypeMaster& register_type(TypeMaster& master, const std::string& code, const std::string& label) {
  const std::string trimmed(csv::trim(code));
  if (trimmed.empty()) throw Error(ErrorCode::BadRequest, "type code must not be empty");
  if (master.entries.count(trimmed)) {
    throw Error(ErrorCode::DuplicateCode, std::string(to_string(master.category)) + " code '" +
                                              trimmed + "' already registered");
  }
  master.entries.emplace(trimmed, TypeEntry{trimmed, label, {}});
  return master;
}

TypeMaster& add_alias(TypeMaster& master, const std::string& alias, const std::string& code) {
  auto it = master.entries.find(code);
  if (it == master.entries.end()) {
    throw Error(ErrorCode::UnknownCode,
                std::string(to_string(master.category)) + " code '" + code + "' does not exist");
  }
  const std::string trimmed(csv::trim(alias));
  for (auto& [other_code, entry] : master.entries) entry.aliases.erase(trimmed);
  it->second.aliases.insert(trimmed);
  return master;
}

void add_project_alias(Project& project, const Masters& masters, TypeCategory category,
                       const std::string& alias, const std::string& code) {
  if (!masters.type_master(category).entries.count(code)) {
    throw Error(ErrorCode::UnknownCode,
                std::string(to_string(category)) + " code '" + code + "' does not exist");
  }
  project.aliases[category][std::string(csv::trim(alias))] = code;
}

std::optional<std::string> TypeResolver::resolve(TypeCategory category, std::string_view raw) const {
  auto cat = aliases_.find(category);
  if (cat != aliases_.end()) {
    auto hit = cat->second.find(std::string(csv::trim(raw)));
    if (hit != cat->second.end()) return hit->second;
  }
  return masters_.type_master(category).resolve(raw);
}

// ---------------------------------------------------------------------------

CadastreParse parse_cadastre(std::string_view csv_text, const ColumnMap& mapping) {
  auto records = csv::read(csv_text);
  if (records.empty()) throw Error(ErrorCode::MissingColumn, "cadastre has no header row");
  const Header header(records.front().fields);
  const std::array<std::size_t, 11> cols = {
      header.require(mapping.departamento), header.require(mapping.centro),
      header.require(mapping.distrito),     header.require(mapping.manzana),
      header.require(mapping.lote),         header.require(mapping.edificacion),
      header.require(mapping.wall),         header.require(mapping.roof),
      header.require(mapping.use),          header.require(mapping.state),
      header.require(mapping.year)};
  const std::size_t needed = *std::max_element(cols.begin(), cols.end()) + 1;

  CadastreParse out;
  std::set<CadastralKey> seen;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const std::size_t row_number = rec.line;
    auto fail = [&](std::string reason, std::string message) {
      out.errors.push_back({row_number, std::move(reason), std::move(message)});
    };
    if (rec.fields.size() < needed) {
      fail("FieldCount", "expected at least " + std::to_string(needed) + " fields, found " +
                             std::to_string(rec.fields.size()));
      continue;
    }
    auto get = [&](std::size_t i) { return std::string(csv::trim(rec.fields[cols[i]])); };

    CadastreRow row;
    row.row_number = row_number;
    row.key = {get(0), get(1), get(2), get(3), get(4), get(5)};
    row.wall_type = get(6);
    row.roof_type = get(7);
    row.use_type = get(8);
    row.state_type = get(9);

    const std::array<const std::string*, 6> key_parts = {
        &row.key.departamento, &row.key.centro, &row.key.distrito,
        &row.key.manzana,      &row.key.lote,   &row.key.edificacion};
    if (std::any_of(key_parts.begin(), key_parts.end(), [](auto* s) { return s->empty(); })) {
      fail("MissingKeyField", "cadastral key has an empty component");
      continue;
    }
    if (row.wall_type.empty() || row.roof_type.empty() || row.use_type.empty() ||
        row.state_type.empty()) {
      fail("MissingTypeField", "wall, roof, use and state types are required");
      continue;
    }
    auto year = parse_int(get(10));
    if (!year) {
      fail("BadYear", "construction year '" + get(10) + "' is not an integer");
      continue;
    }
    row.construction_year = *year;
    if (!seen.insert(row.key).second) {
      fail("DuplicateKey", "cadastral key " + row.key.text() + " appears more than once");
      continue;
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

void import_cadastre(Project& project, std::span<const CadastreRow> rows) {
  if (project.state != ProjectState::Created) {
    throw Error(ErrorCode::WrongState, "cadastre can only be imported while the project is Created");
  }
  std::vector<Building> buildings;
  buildings.reserve(rows.size());
  BuildingId id = 1;
  for (const auto& row : rows) {
    Building b;
    b.kind = BuildingKind::Cadastral;
    b.id = id++;
    b.cadastral_key = row.key;
    b.wall_type = row.wall_type;
    b.roof_type = row.roof_type;
    b.use_type = row.use_type;
    b.state_type = row.state_type;
    b.construction_year = row.construction_year;
    buildings.push_back(std::move(b));
  }
  project.buildings = std::move(buildings);
  project.typologies.clear();
  for (auto& s : project.scenarios) s.damages.clear();
}

TypeCounts discover_types(std::span<const CadastreRow> rows) {
  TypeCounts counts;
  for (auto category : kAllCategories) {
    auto& bucket = counts[category];
    for (const auto& row : rows) ++bucket[type_field(row, category)];
  }
  return counts;
}

TypeCounts discover_types(const Project& project) {
  TypeCounts counts;
  for (auto category : kAllCategories) {
    auto& bucket = counts[category];
    for (const auto& b : project.buildings) {
      if (b.kind != BuildingKind::Cadastral) continue;
      ++bucket[type_field(b, category)];
    }
  }
  return counts;
}

bool ReconcileReport::complete() const {
  return std::all_of(unmatched.begin(), unmatched.end(),
                     [](const auto& entry) { return entry.second.empty(); });
}

ReconcileReport reconcile_types(const TypeCounts& discovered, const Masters& masters,
                                const TypeAliases& aliases) {
  const TypeResolver resolver(masters, aliases);
  ReconcileReport report;
  for (const auto& [category, values] : discovered) {
    auto& matched = report.matched[category];
    auto& unmatched = report.unmatched[category];
    for (const auto& [raw, count] : values) {
      if (auto code = resolver.resolve(category, raw)) {
        matched.emplace(raw, *code);
      } else {
        unmatched.push_back(raw);
      }
    }
  }
  return report;
}

SubTypologyKey derive_subtypology(const Building& building, const TypeResolver& resolver,
                                  int cutoff_year) {
  SubTypologyKey key;
  const std::array<std::pair<TypeCategory, std::string*>, 4> slots = {{
      {TypeCategory::Wall, &key.wall_type},
      {TypeCategory::Roof, &key.roof_type},
      {TypeCategory::Use, &key.use_type},
      {TypeCategory::State, &key.state_type},
  }};
  for (const auto& [category, slot] : slots) {
    const std::string& raw = type_field(building, category);
    auto code = resolver.resolve(category, raw);
    if (!code) {
      throw Error(ErrorCode::UnreconciledTypes, std::string(to_string(category)) + " value '" +
                                                    raw + "' is not reconciled");
    }
    *slot = *code;
  }
  key.pre_cutoff = building.construction_year < cutoff_year;
  return key;
}

std::vector<SubTypologyCount> discover_subtypologies(Project& project, const Masters& masters) {
  const TypeResolver resolver(masters, project.aliases);
  std::vector<SubTypologyKey> keys;
  keys.reserve(project.buildings.size());
  for (const auto& b : project.buildings) {
    if (b.kind == BuildingKind::Cadastral) {
      keys.push_back(derive_subtypology(b, resolver, project.cutoff_year));
    }
  }
  std::size_t i = 0;
  for (auto& b : project.buildings) {
    if (b.kind == BuildingKind::Cadastral) b.subtypology = keys[i++];
  }
  return subtypology_counts(project);
}

std::vector<SubTypologyCount> subtypology_counts(const Project& project) {
  std::map<SubTypologyKey, std::size_t> counts;
  for (const auto& b : project.buildings) {
    if (b.kind == BuildingKind::Cadastral && b.subtypology) ++counts[*b.subtypology];
  }
  std::vector<SubTypologyCount> out;
  out.reserve(counts.size());
  for (auto& [key, count] : counts) out.push_back({key, count});
  return out;
}

// ---------------------------------------------------------------------------

MapLayer parse_layer(std::string_view geojson_text, LayerKind kind, const std::string& key_property) {
  json doc = json::parse(geojson_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
      !doc.contains("features") || !doc["features"].is_array()) {
    throw Error(ErrorCode::NotAFeatureCollection, "input is not a GeoJSON FeatureCollection");
  }
  MapLayer layer;
  layer.kind = kind;
  layer.key_property = key_property;
  std::set<std::string> keys;
  std::size_t index = 0;
  for (const auto& feature : doc["features"]) {
    const auto missing_key = [&] {
      return Error(ErrorCode::MissingKeyProperty,
                   "feature " + std::to_string(index) + " lacks property '" + key_property + "'");
    };
    if (!feature.is_object() || !feature.contains("properties") ||
        !feature["properties"].is_object()) {
      throw missing_key();
    }
    const auto& props = feature["properties"];
    auto it = props.find(key_property);
    if (it == props.end() || it->is_null()) throw missing_key();

    LayerFeature out;
    out.key = it->is_string() ? it->get<std::string>() : it->dump();
    if (!keys.insert(out.key).second) {
      throw Error(ErrorCode::BadRequest, "duplicate key '" + out.key + "' in layer");
    }
    const auto& geometry = feature.value("geometry", json());
    const std::string type = geometry.is_object() ? geometry.value("type", "") : "";
    if (type == "Polygon") {
      out.polygons.push_back(parse_polygon(geometry["coordinates"]));
    } else if (type == "MultiPolygon") {
      const auto& coords = geometry["coordinates"];
      if (!coords.is_array() || coords.empty()) {
        throw Error(ErrorCode::BadRequest, "empty MultiPolygon");
      }
      for (const auto& polygon : coords) out.polygons.push_back(parse_polygon(polygon));
    } else {
      throw Error(ErrorCode::BadRequest, "feature " + std::to_string(index) +
                                             ": only Polygon and MultiPolygon geometries are accepted");
    }
    layer.features.push_back(std::move(out));
    ++index;
  }
  if (kind == LayerKind::ProjectArea && layer.features.size() != 1) {
    throw Error(ErrorCode::BadRequest, "a ProjectArea layer holds exactly one feature");
  }
  std::sort(layer.features.begin(), layer.features.end(),
            [](const auto& a, const auto& b) { return a.key < b.key; });
  return layer;
}

CartographyReport match_report(const Project& project, LayerKind kind) {
  CartographyReport report;
  report.kind = kind;
  const MapLayer* layer = project.layer(kind);
  if (!layer) return report;
  report.feature_count = layer->features.size();
  if (kind == LayerKind::ProjectArea) return report;

  std::set<std::string> referenced;
  for (const auto& b : project.buildings) {
    if (!b.cadastral_key) continue;
    referenced.insert(kind == LayerKind::Blocks ? b.cadastral_key->block() : b.cadastral_key->text());
  }
  std::set<std::string> present;
  for (const auto& f : layer->features) present.insert(f.key);
  std::set_difference(referenced.begin(), referenced.end(), present.begin(), present.end(),
                      std::back_inserter(report.missing_in_layer));
  std::set_difference(present.begin(), present.end(), referenced.begin(), referenced.end(),
                      std::back_inserter(report.missing_in_buildings));
  return report;
}

CartographyReport load_cartography(Project& project, std::string_view geojson_text, LayerKind kind,
                                   const std::string& key_property) {
  project.layers[kind] = parse_layer(geojson_text, kind, key_property);
  return match_report(project, kind);
}

// ---------------------------------------------------------------------------

FieldIngestResult ingest_field_data(Project& project, const Masters& masters,
                                    const FieldRecord& record) {
  if (project.state != ProjectState::FieldWork && project.state != ProjectState::UploadingResults) {
    throw Error(ErrorCode::WrongState, "field data is accepted during FieldWork or UploadingResults");
  }
  const auto present = static_cast<std::size_t>(
      std::count_if(record.classes.begin(), record.classes.end(),
                    [](const auto& c) { return c.has_value(); }));
  if (present != 0 && present != kParameterCount) {
    throw Error(ErrorCode::IncompleteSurvey, "survey has " + std::to_string(present) +
                                                 " of 11 parameter classes");
  }
  for (std::size_t i = 0; i < kRawFieldNames.size(); ++i) {
    const auto& v = raw_field(record.raw, i);
    if (v && !(*v >= 0.0)) {
      throw Error(ErrorCode::OutOfRange, std::string(kRawFieldNames[i]) + " must be >= 0");
    }
  }

  FieldIngestResult result;
  Building updated;
  if (record.id) {
    const Building* existing = project.find_building(*record.id);
    if (!existing) {
      throw Error(ErrorCode::UnknownBuilding, "no building with id " + std::to_string(*record.id));
    }
    updated = *existing;
  } else {
    updated.kind = BuildingKind::Independent;
    updated.id = project.next_building_id();
    result.created = true;
  }
  result.id = updated.id;

  if (record.coord) updated.coord = record.coord;
  if (record.photo_id) updated.photo_id = record.photo_id;

  // Cadastral corrections.
  const std::array<std::pair<TypeCategory, const std::optional<std::string>*>, 4> corrections = {{
      {TypeCategory::Wall, &record.wall_type},
      {TypeCategory::Roof, &record.roof_type},
      {TypeCategory::Use, &record.use_type},
      {TypeCategory::State, &record.state_type},
  }};
  bool changed = false;
  for (const auto& [category, value] : corrections) {
    if (!*value) continue;
    std::string& field = type_field(updated, category);
    const std::string trimmed(csv::trim(**value));
    if (field != trimmed) {
      field = trimmed;
      changed = true;
    }
  }
  if (record.construction_year && *record.construction_year != updated.construction_year) {
    updated.construction_year = *record.construction_year;
    changed = true;
  }
  if (changed && !result.created) {
    updated.edited = true;
    result.corrected = true;
  }
  if (updated.kind == BuildingKind::Cadastral && changed) {
    const TypeResolver resolver(masters, project.aliases);
    auto key = derive_subtypology(updated, resolver, project.cutoff_year);
    if (!updated.subtypology || !(*updated.subtypology == key)) {
      updated.subtypology = key;
      result.retagged = true;
    }
  }

  if (present == kParameterCount) {
    SurveyRecord survey;
    for (std::size_t i = 0; i < kParameterCount; ++i) survey.classes[i] = *record.classes[i];
    survey.raw = record.raw;
    survey.observer_id = record.observer_id;
    survey.date = record.date;
    updated.vi = compute_vi(survey.classes, project.scale);
    updated.vi_norm = normalize_vi(*updated.vi, project.scale);
    updated.vi_source = ViSource::Direct;
    updated.survey = std::move(survey);
    updated.surveyed = true;
    result.surveyed = true;
  }

  // All validation is done; commit.
  if (result.created) {
    project.buildings.push_back(std::move(updated));
  } else {
    *project.find_building(result.id) = std::move(updated);
  }
  if (result.retagged) {
    mark_stale(project, "subtypology of building " + std::to_string(result.id) + " changed");
  }
  if (result.surveyed) refresh_typology_stats(project);
  return result;
}

FieldDataParse parse_field_data(std::string_view csv_text) {
  auto records = csv::read(csv_text);
  if (records.empty()) throw Error(ErrorCode::MissingColumn, "field data has no header row");
  const Header header(records.front().fields);
  const auto id_col = header.require("id");
  const auto x_col = header.find("x");
  const auto y_col = header.find("y");
  const auto photo_col = header.find("photo");
  std::array<std::optional<std::size_t>, kParameterCount> class_cols;
  for (std::size_t i = 0; i < kParameterCount; ++i) {
    class_cols[i] = header.find("p" + std::to_string(i + 1));
  }
  std::array<std::optional<std::size_t>, kRawFieldNames.size()> raw_cols;
  for (std::size_t i = 0; i < kRawFieldNames.size(); ++i) {
    raw_cols[i] = header.find(std::string(kRawFieldNames[i]));
  }
  const auto observer_col = header.find("observer");
  const auto date_col = header.find("date");
  const std::array<std::optional<std::size_t>, 4> type_cols = {
      header.find("pared"), header.find("techo"), header.find("uso"), header.find("estado")};
  const auto year_col = header.find("anio");

  FieldDataParse out;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r].fields;
    const std::size_t row_number = records[r].line;
    auto fail = [&](std::string reason, std::string message) {
      out.errors.push_back({row_number, std::move(reason), std::move(message)});
    };
    FieldRecord record;
    const std::string id_text = cell(rec, id_col);
    if (id_text != "NEW") {
      auto id = parse_double(id_text);
      if (!id || *id != std::floor(*id)) {
        fail("BadId", "id '" + id_text + "' is neither an integer nor NEW");
        continue;
      }
      record.id = static_cast<BuildingId>(*id);
    }
    const std::string x = cell(rec, x_col);
    const std::string y = cell(rec, y_col);
    if (!x.empty() || !y.empty()) {
      auto px = parse_double(x);
      auto py = parse_double(y);
      if (!px || !py) {
        fail("BadCoordinate", "coordinates must be numeric");
        continue;
      }
      record.coord = Point{*px, *py};
    }
    if (auto photo = cell(rec, photo_col); !photo.empty()) record.photo_id = photo;

    bool ok = true;
    for (std::size_t i = 0; i < kParameterCount && ok; ++i) {
      const std::string value = cell(rec, class_cols[i]);
      if (value.empty()) continue;
      if (value.size() != 1 || value[0] < 'A' || value[0] > 'D') {
        fail("BadClass", "p" + std::to_string(i + 1) + " must be one of A, B, C, D");
        ok = false;
        break;
      }
      record.classes[i] = static_cast<SurveyClass>(value[0] - 'A');
    }
    for (std::size_t i = 0; i < kRawFieldNames.size() && ok; ++i) {
      const std::string value = cell(rec, raw_cols[i]);
      if (value.empty()) continue;
      auto number = parse_double(value);
      if (!number) {
        fail("BadNumber", std::string(kRawFieldNames[i]) + " is not numeric");
        ok = false;
        break;
      }
      raw_field(record.raw, i) = number;
    }
    if (!ok) continue;
    record.observer_id = cell(rec, observer_col);
    record.date = cell(rec, date_col);
    std::array<std::optional<std::string>*, 4> targets = {&record.wall_type, &record.roof_type,
                                                         &record.use_type, &record.state_type};
    for (std::size_t i = 0; i < 4; ++i) {
      if (auto v = cell(rec, type_cols[i]); !v.empty()) *targets[i] = v;
    }
    if (auto year = cell(rec, year_col); !year.empty()) {
      auto parsed = parse_int(year);
      if (!parsed) {
        fail("BadYear", "construction year '" + year + "' is not an integer");
        continue;
      }
      record.construction_year = parsed;
    }
    out.records.push_back(std::move(record));
    out.record_rows.push_back(row_number);
  }
  return out;
}

}  // namespace vulnesis
