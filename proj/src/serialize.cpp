#include "vulnesis/serialize.hpp"

#include <algorithm>
#include <set>

#include "vulnesis/error.hpp"
#include "vulnesis/risk.hpp"

namespace vulnesis::serialize {

namespace {

using Known = std::set<std::string_view>;

OpaqueFields collect_extra(const json& doc, const Known& known) {
  OpaqueFields extra;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!known.count(it.key())) extra.emplace(it.key(), it.value().dump());
  }
  return extra;
}

void merge_extra(json& doc, const OpaqueFields& extra) {
  for (const auto& [key, text] : extra) {
    if (!doc.contains(key)) doc[key] = json::parse(text);
  }
}

template <typename T>
void put_optional(json& doc, const char* key, const std::optional<T>& value) {
  if (value) doc[key] = *value;
}

template <typename T>
std::optional<T> get_optional(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

Level level_by_name(const std::vector<Level>& levels, const std::string& name) {
  for (const auto& l : levels) {
    if (l.name == name) return l;
  }
  throw Error(ErrorCode::CorruptFile, "unknown level '" + name + "'");
}

json key_to_json(const CadastralKey& k) {
  return {{"departamento", k.departamento}, {"centro", k.centro}, {"distrito", k.distrito},
          {"manzana", k.manzana},           {"lote", k.lote},     {"edificacion", k.edificacion}};
}

CadastralKey key_from_json(const json& doc) {
  return {doc.at("departamento").get<std::string>(), doc.at("centro").get<std::string>(),
          doc.at("distrito").get<std::string>(),     doc.at("manzana").get<std::string>(),
          doc.at("lote").get<std::string>(),         doc.at("edificacion").get<std::string>()};
}

const Known kBuildingCommon = {"schema_version", "kind", "id", "wall_type", "roof_type", "use_type",
                               "state_type", "construction_year", "selected_for_survey", "surveyed",
                               "edited", "coord", "photo_id", "survey", "vi", "vi_norm", "vi_source"};
const Known kCadastralOnly = {"cadastral_key", "subtypology", "typology_id"};

}  // namespace

json level_to_json(const std::optional<Level>& level) {
  return level ? json(level->name) : json("no-data");
}

json scale_to_json(const VulnerabilityScale& scale) {
  json rows = json::array();
  for (const auto& row : scale.rows) {
    rows.push_back({{"name", row.name}, {"k", row.k}, {"w", row.w}});
  }
  return {{"rows", rows}, {"max_vi", scale.max_vi()}};
}

VulnerabilityScale scale_from_json(const json& doc) {
  VulnerabilityScale scale;
  for (const auto& row : doc.at("rows")) {
    ScaleRow r;
    r.name = row.value("name", "");
    r.k = row.at("k").get<std::array<double, 4>>();
    r.w = row.at("w").get<double>();
    scale.rows.push_back(std::move(r));
  }
  return scale;
}

json survey_to_json(const SurveyRecord& survey) {
  json classes = json::array();
  for (auto c : survey.classes) classes.push_back(to_string(c));
  json raw = json::object();
  for (std::size_t i = 0; i < kRawFieldNames.size(); ++i) {
    if (const auto& v = raw_field(survey.raw, i)) raw[std::string(kRawFieldNames[i])] = *v;
  }
  return {{"classes", classes}, {"raw", raw}, {"observer_id", survey.observer_id}, {"date", survey.date}};
}

SurveyRecord survey_from_json(const json& doc) {
  SurveyRecord survey;
  const auto& classes = doc.at("classes");
  if (!classes.is_array() || classes.size() != kParameterCount) {
    throw Error(ErrorCode::CorruptFile, "survey must hold exactly 11 classes");
  }
  for (std::size_t i = 0; i < kParameterCount; ++i) {
    survey.classes[i] = parse_survey_class(classes[i].get<std::string>());
  }
  if (auto raw = doc.find("raw"); raw != doc.end()) {
    for (std::size_t i = 0; i < kRawFieldNames.size(); ++i) {
      raw_field(survey.raw, i) = get_optional<double>(*raw, std::string(kRawFieldNames[i]).c_str());
    }
  }
  survey.observer_id = doc.value("observer_id", "");
  survey.date = doc.value("date", "");
  return survey;
}

json building_to_json(const Building& b) {
  json doc = {
      {"schema_version", kSchemaVersion},
      {"kind", to_string(b.kind)},
      {"id", b.id},
      {"wall_type", b.wall_type},
      {"roof_type", b.roof_type},
      {"use_type", b.use_type},
      {"state_type", b.state_type},
      {"construction_year", b.construction_year},
      {"selected_for_survey", b.selected_for_survey},
      {"surveyed", b.surveyed},
      {"edited", b.edited},
      {"vi_source", to_string(b.vi_source)},
  };
  if (b.kind == BuildingKind::Cadastral) {
    if (b.cadastral_key) doc["cadastral_key"] = key_to_json(*b.cadastral_key);
    if (b.subtypology) doc["subtypology"] = b.subtypology->text();
    put_optional(doc, "typology_id", b.typology_id);
  }
  if (b.coord) doc["coord"] = {b.coord->x, b.coord->y};
  put_optional(doc, "photo_id", b.photo_id);
  if (b.survey) doc["survey"] = survey_to_json(*b.survey);
  put_optional(doc, "vi", b.vi);
  put_optional(doc, "vi_norm", b.vi_norm);
  merge_extra(doc, b.extra);
  return doc;
}

Building building_from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::CorruptFile, "building document is not an object");
  auto kind_it = doc.find("kind");
  if (kind_it == doc.end() || !kind_it->is_string()) {
    throw Error(ErrorCode::UnknownKind, "building document lacks a \"kind\" discriminator");
  }
  const std::string kind = kind_it->get<std::string>();
  Building b;
  if (kind == "Cadastral") {
    b.kind = BuildingKind::Cadastral;
  } else if (kind == "Independent") {
    b.kind = BuildingKind::Independent;
  } else {
    throw Error(ErrorCode::UnknownKind, "unknown building kind '" + kind + "'");
  }
  if (b.kind == BuildingKind::Independent) {
    for (auto field : kCadastralOnly) {
      if (doc.contains(std::string(field))) {
        throw Error(ErrorCode::CorruptFile,
                    "Independent building carries cadastral field '" + std::string(field) + "'");
      }
    }
  }
  b.id = doc.at("id").get<BuildingId>();
  b.wall_type = doc.value("wall_type", "");
  b.roof_type = doc.value("roof_type", "");
  b.use_type = doc.value("use_type", "");
  b.state_type = doc.value("state_type", "");
  b.construction_year = doc.value("construction_year", 0);
  b.selected_for_survey = doc.value("selected_for_survey", false);
  b.surveyed = doc.value("surveyed", false);
  b.edited = doc.value("edited", false);
  b.vi_source = parse_vi_source(doc.value("vi_source", "None"));
  if (b.kind == BuildingKind::Cadastral) {
    if (auto it = doc.find("cadastral_key"); it != doc.end()) b.cadastral_key = key_from_json(*it);
    if (auto st = get_optional<std::string>(doc, "subtypology")) {
      b.subtypology = SubTypologyKey::parse(*st);
    }
    b.typology_id = get_optional<std::string>(doc, "typology_id");
  } else if (b.vi_source == ViSource::Propagated) {
    throw Error(ErrorCode::CorruptFile, "Independent building cannot hold a propagated index");
  }
  if (auto it = doc.find("coord"); it != doc.end() && !it->is_null()) {
    b.coord = Point{it->at(0).get<double>(), it->at(1).get<double>()};
  }
  b.photo_id = get_optional<std::string>(doc, "photo_id");
  if (auto it = doc.find("survey"); it != doc.end() && !it->is_null()) b.survey = survey_from_json(*it);
  if (b.surveyed && !b.survey) throw Error(ErrorCode::CorruptFile, "surveyed building lacks survey");
  b.vi = get_optional<double>(doc, "vi");
  b.vi_norm = get_optional<double>(doc, "vi_norm");

  Known known = kBuildingCommon;
  if (b.kind == BuildingKind::Cadastral) known.insert(kCadastralOnly.begin(), kCadastralOnly.end());
  b.extra = collect_extra(doc, known);
  return b;
}

json typology_to_json(const Typology& t) {
  json keys = json::array();
  for (const auto& k : t.keys) keys.push_back(k.text());
  json stats = {{"count", t.stats.count}, {"surveyed", t.stats.surveyed},
                {"level", level_to_json(t.stats.level)}};
  put_optional(stats, "avg_vi_norm", t.stats.avg_vi_norm);
  put_optional(stats, "total_vi", t.stats.total_vi);
  json doc = {{"id", t.id}, {"name", t.name}, {"description", t.description},
              {"keys", keys}, {"stats", stats}};
  put_optional(doc, "sample_quota", t.sample_quota);
  merge_extra(doc, t.extra);
  return doc;
}

Typology typology_from_json(const json& doc) {
  Typology t;
  t.id = doc.at("id").get<std::string>();
  t.name = doc.at("name").get<std::string>();
  t.description = doc.value("description", "");
  for (const auto& k : doc.value("keys", json::array())) {
    t.keys.insert(SubTypologyKey::parse(k.get<std::string>()));
  }
  t.sample_quota = get_optional<double>(doc, "sample_quota");
  if (auto it = doc.find("stats"); it != doc.end()) {
    t.stats.count = it->value("count", std::size_t{0});
    t.stats.surveyed = it->value("surveyed", std::size_t{0});
    t.stats.avg_vi_norm = get_optional<double>(*it, "avg_vi_norm");
    t.stats.total_vi = get_optional<double>(*it, "total_vi");
    const std::string level = it->value("level", "no-data");
    if (level != "no-data") t.stats.level = level_by_name(vulnerability_levels(), level);
  }
  t.extra = collect_extra(doc, {"id", "name", "description", "keys", "sample_quota", "stats"});
  return t;
}

json scenario_to_json(const Scenario& s, bool with_damages) {
  json meta = json::object();
  put_optional(meta, "latitude", s.meta.latitude);
  put_optional(meta, "longitude", s.meta.longitude);
  put_optional(meta, "depth_km", s.meta.depth_km);
  put_optional(meta, "magnitude", s.meta.magnitude);
  json doc = {{"id", s.id}, {"name", s.name}, {"ag", s.ag}, {"meta", meta},
              {"damage_count", s.damages.size()}};
  if (with_damages) {
    json damages = json::array();
    for (const auto& [id, dmg] : s.damages) {
      damages.push_back({{"id", id}, {"d", dmg.d}, {"level", dmg.level.name}});
    }
    doc["damages"] = damages;
  }
  merge_extra(doc, s.extra);
  return doc;
}

Scenario scenario_from_json(const json& doc) {
  Scenario s;
  s.id = doc.at("id").get<std::string>();
  s.name = doc.value("name", "");
  s.ag = doc.at("ag").get<double>();
  if (auto it = doc.find("meta"); it != doc.end() && it->is_object()) {
    s.meta.latitude = get_optional<double>(*it, "latitude");
    s.meta.longitude = get_optional<double>(*it, "longitude");
    s.meta.depth_km = get_optional<double>(*it, "depth_km");
    s.meta.magnitude = get_optional<double>(*it, "magnitude");
  }
  for (const auto& d : doc.value("damages", json::array())) {
    Damage dmg{d.at("d").get<double>(), level_by_name(damage_levels(), d.at("level").get<std::string>())};
    if (!(dmg.d >= 0.0 && dmg.d <= 1.0)) throw Error(ErrorCode::CorruptFile, "damage outside [0,1]");
    s.damages.emplace(d.at("id").get<BuildingId>(), dmg);
  }
  s.extra = collect_extra(doc, {"id", "name", "ag", "meta", "damages", "damage_count"});
  return s;
}

json masters_to_json(const Masters& masters) {
  json types = json::object();
  for (const auto& [category, master] : masters.types) {
    json entries = json::array();
    for (const auto& [code, entry] : master.entries) {
      entries.push_back({{"code", entry.code}, {"label", entry.label}, {"aliases", entry.aliases}});
    }
    types[std::string(to_string(category))] = entries;
  }
  json typologies = json::array();
  for (const auto& t : masters.typologies) {
    typologies.push_back({{"id", t.id}, {"name", t.name}, {"description", t.description}});
  }
  return {{"schema_version", kSchemaVersion}, {"types", types}, {"typologies", typologies}};
}

Masters masters_from_json(const json& doc) {
  Masters masters;
  if (auto types = doc.find("types"); types != doc.end()) {
    for (auto it = types->begin(); it != types->end(); ++it) {
      auto& master = masters.type_master(parse_type_category(it.key()));
      for (const auto& e : it.value()) {
        TypeEntry entry{e.at("code").get<std::string>(), e.value("label", ""),
                        e.value("aliases", std::set<std::string>{})};
        master.entries.emplace(entry.code, std::move(entry));
      }
    }
  }
  for (const auto& t : doc.value("typologies", json::array())) {
    masters.typologies.push_back({t.at("id").get<std::string>(), t.at("name").get<std::string>(),
                                  t.value("description", "")});
  }
  return masters;
}

json aliases_to_json(const TypeAliases& aliases) {
  json out = json::object();
  for (const auto& [category, map] : aliases) {
    if (!map.empty()) out[std::string(to_string(category))] = map;
  }
  return out;
}

TypeAliases aliases_from_json(const json& doc) {
  TypeAliases aliases;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    aliases[parse_type_category(it.key())] = it.value().get<std::map<std::string, std::string>>();
  }
  return aliases;
}

json layer_to_geojson(const MapLayer& layer) {
  json features = json::array();
  for (const auto& f : layer.features) {
    json polygons = json::array();
    for (const auto& polygon : f.polygons) {
      json rings = json::array();
      for (const auto& ring : polygon) {
        json positions = json::array();
        for (const auto& p : ring) positions.push_back({p.x, p.y});
        rings.push_back(positions);
      }
      polygons.push_back(rings);
    }
    json geometry = f.polygons.size() == 1
                        ? json{{"type", "Polygon"}, {"coordinates", polygons[0]}}
                        : json{{"type", "MultiPolygon"}, {"coordinates", polygons}};
    features.push_back({{"type", "Feature"},
                        {"geometry", geometry},
                        {"properties", {{layer.key_property, f.key}}}});
  }
  return {{"type", "FeatureCollection"},
          {"schema_version", kSchemaVersion},
          {"kind", to_string(layer.kind)},
          {"key_property", layer.key_property},
          {"features", features}};
}

json project_meta_to_json(const Project& p) {
  json doc = {
      {"schema_version", kSchemaVersion},
      {"id", p.id},
      {"name", p.name},
      {"description", p.description},
      {"author", p.author},
      {"date", p.date},
      {"state", to_string(p.state)},
      {"scale", scale_to_json(p.scale)},
      {"cutoff_year", p.cutoff_year},
      {"vuln_thresholds", p.vuln_thresholds},
      {"damage_thresholds", p.damage_thresholds},
      {"stale", p.stale},
      {"stale_reason", p.stale_reason},
      {"rng_identity", p.rng_identity},
  };
  merge_extra(doc, p.extra);
  return doc;
}

void project_meta_from_json(const json& doc, Project& p) {
  p.id = doc.at("id").get<std::string>();
  p.name = doc.value("name", "");
  p.description = doc.value("description", "");
  p.author = doc.value("author", "");
  p.date = doc.value("date", "");
  p.state = parse_project_state(doc.at("state").get<std::string>());
  p.scale = scale_from_json(doc.at("scale"));
  p.cutoff_year = doc.value("cutoff_year", 1972);
  p.vuln_thresholds = doc.at("vuln_thresholds").get<std::array<double, 2>>();
  p.damage_thresholds = doc.at("damage_thresholds").get<std::array<double, 4>>();
  p.stale = doc.value("stale", false);
  p.stale_reason = doc.value("stale_reason", "");
  p.rng_identity = doc.value("rng_identity", "");
  p.extra = collect_extra(doc, {"schema_version", "id", "name", "description", "author", "date",
                                "state", "scale", "cutoff_year", "vuln_thresholds",
                                "damage_thresholds", "stale", "stale_reason", "rng_identity"});
}

}  // namespace vulnesis::serialize
