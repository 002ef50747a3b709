#include "vulnesis/service.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <ctime>

#include "vulnesis/error.hpp"
#include "vulnesis/forms.hpp"
#include "vulnesis/risk.hpp"
#include "vulnesis/serialize.hpp"
#include "vulnesis/store.hpp"
#include "vulnesis/typology.hpp"
#include "vulnesis/workflow.hpp"

namespace vulnesis {

using nlohmann::json;

namespace {

std::string slugify(const std::string& name) {
  std::string out;
  for (unsigned char c : name) {
    if (std::isalnum(c)) {
      out.push_back(static_cast<char>(std::tolower(c)));
    } else if (!out.empty() && out.back() != '-') {
      out.push_back('-');
    }
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out.empty() ? "project" : out;
}

std::string today() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[16];
  std::strftime(buf, sizeof buf, "%Y-%m-%d", &tm);
  return buf;
}

json row_errors_json(const std::vector<RowError>& errors) {
  json out = json::array();
  for (const auto& e : errors) {
    out.push_back({{"row", e.row_number}, {"reason", e.reason}, {"message", e.message}});
  }
  return out;
}

json summary_json(const Project& p) {
  json doc = serialize::project_meta_to_json(p);
  std::size_t cadastral = 0, surveyed = 0, selected = 0, with_vi = 0;
  for (const auto& b : p.buildings) {
    cadastral += b.kind == BuildingKind::Cadastral;
    surveyed += b.surveyed;
    selected += b.selected_for_survey;
    with_vi += b.vi_norm.has_value();
  }
  json layers = json::array();
  for (const auto& [kind, layer] : p.layers) layers.push_back(to_string(kind));
  doc["counts"] = {{"buildings", p.buildings.size()},
                   {"cadastral", cadastral},
                   {"independent", p.buildings.size() - cadastral},
                   {"selected_for_survey", selected},
                   {"surveyed", surveyed},
                   {"with_vi", with_vi},
                   {"typologies", p.typologies.size()},
                   {"scenarios", p.scenarios.size()}};
  doc["layers"] = layers;
  return doc;
}

json reconcile_json(const TypeCounts& discovered, const ReconcileReport& report) {
  json doc = {{"complete", report.complete()}};
  json disc = json::object();
  for (const auto& [category, values] : discovered) disc[std::string(to_string(category))] = values;
  json matched = json::object();
  for (const auto& [category, values] : report.matched) matched[std::string(to_string(category))] = values;
  json unmatched = json::object();
  for (const auto& [category, values] : report.unmatched) {
    unmatched[std::string(to_string(category))] = values;
  }
  doc["discovered"] = disc;
  doc["matched"] = matched;
  doc["unmatched"] = unmatched;
  return doc;
}

json cartography_json(const CartographyReport& r) {
  return {{"kind", to_string(r.kind)},
          {"feature_count", r.feature_count},
          {"missing_in_layer", r.missing_in_layer},
          {"missing_in_buildings", r.missing_in_buildings}};
}

std::vector<SubTypologyKey> keys_from_json(const json& body) {
  if (!body.is_object() || !body.contains("keys") || !body["keys"].is_array()) {
    throw Error(ErrorCode::BadRequest, "body must be {\"keys\": [\"WALL|ROOF|USE|STATE|pre\", ...]}");
  }
  std::vector<SubTypologyKey> keys;
  for (const auto& k : body["keys"]) {
    if (!k.is_string()) throw Error(ErrorCode::BadRequest, "keys must be strings");
    keys.push_back(SubTypologyKey::parse(k.get<std::string>()));
  }
  return keys;
}

std::string require_string(const json& body, const char* field) {
  if (!body.is_object() || !body.contains(field) || !body[field].is_string()) {
    throw Error(ErrorCode::BadRequest, std::string("missing string field '") + field + "'");
  }
  return body[field].get<std::string>();
}

template <typename T>
std::optional<T> optional_field(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

/// Converts library exceptions raised while reading a request body.
template <typename F>
auto parse_body(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadRequest, std::string("malformed request body: ") + e.what());
  }
}

}  // namespace

json with_schema(json body) {
  if (body.is_object()) body["schema_version"] = kSchemaVersion;
  return body;
}

FieldRecord field_record_from_json(const json& doc) {
  return parse_body([&] {
    if (!doc.is_object()) throw Error(ErrorCode::BadRequest, "field record must be an object");
    FieldRecord r;
    auto id = doc.find("id");
    if (id != doc.end() && !id->is_null() && !(id->is_string() && *id == "NEW")) {
      r.id = id->get<BuildingId>();
    }
    auto x = optional_field<double>(doc, "x");
    auto y = optional_field<double>(doc, "y");
    if (x.has_value() != y.has_value()) throw Error(ErrorCode::BadRequest, "x and y go together");
    if (x) r.coord = Point{*x, *y};
    r.photo_id = optional_field<std::string>(doc, "photo");
    if (auto classes = doc.find("classes"); classes != doc.end() && !classes->is_null()) {
      if (!classes->is_array() || classes->size() > kParameterCount) {
        throw Error(ErrorCode::BadRequest, "classes must be an array of at most 11 entries");
      }
      for (std::size_t i = 0; i < classes->size(); ++i) {
        const auto& c = (*classes)[i];
        if (!c.is_null() && !(c.is_string() && c.get<std::string>().empty())) {
          r.classes[i] = parse_survey_class(c.get<std::string>());
        }
      }
    }
    if (auto raw = doc.find("raw"); raw != doc.end() && raw->is_object()) {
      for (std::size_t i = 0; i < kRawFieldNames.size(); ++i) {
        raw_field(r.raw, i) = optional_field<double>(*raw, std::string(kRawFieldNames[i]).c_str());
      }
    }
    r.observer_id = doc.value("observer", "");
    r.date = doc.value("date", "");
    if (auto c = doc.find("corrections"); c != doc.end() && c->is_object()) {
      r.wall_type = optional_field<std::string>(*c, "wall_type");
      r.roof_type = optional_field<std::string>(*c, "roof_type");
      r.use_type = optional_field<std::string>(*c, "use_type");
      r.state_type = optional_field<std::string>(*c, "state_type");
      r.construction_year = optional_field<int>(*c, "construction_year");
    }
    return r;
  });
}

SampleSpec sample_spec_from_json(const json& doc) {
  return parse_body([&] {
    if (!doc.is_object()) throw Error(ErrorCode::BadRequest, "sample spec must be an object");
    SampleSpec spec;
    spec.mode = parse_sample_mode(doc.value("mode", "PerTypologyPercent"));
    spec.value = optional_field<double>(doc, "value");
    spec.per_typology = doc.value("per_typology", std::map<std::string, double>{});
    spec.seed = doc.value("seed", std::uint64_t{0});
    return spec;
  });
}

// ---------------------------------------------------------------------------

Workbench::Workbench(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create root " + root_.string());
}

std::mutex& Workbench::project_mutex(const std::string& id) {
  std::lock_guard guard(registry_mutex_);
  auto& slot = project_mutexes_[id];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

template <typename F>
json Workbench::mutate(const std::string& id, F&& apply) {
  std::lock_guard guard(project_mutex(id));
  if (!project_exists(root_, id)) throw Error(ErrorCode::UnknownProject, "no project '" + id + "'");
  ProjectLock lock(root_, id);
  Project project = load_project(root_, id);
  json result = apply(project);
  save_project(project, root_, lock);
  return with_schema(std::move(result));
}

template <typename F>
json Workbench::mutate_with_masters(const std::string& id, F&& apply) {
  std::lock_guard masters_guard(masters_mutex_);
  FileLock masters_lock = lock_masters(root_);
  Masters masters = load_masters(root_);
  const Masters before = masters;
  json result = mutate(id, [&](Project& project) { return apply(project, masters); });
  if (!(masters == before)) save_masters(masters, root_);
  return result;
}

json Workbench::list_projects() const {
  json out = json::array();
  for (const auto& entry : vulnesis::list_projects(root_)) {
    json item = {{"id", entry.id}, {"name", entry.name}, {"state", entry.state}, {"date", entry.date}};
    if (entry.error) item["error"] = *entry.error;
    out.push_back(std::move(item));
  }
  return out;
}

json Workbench::create_project(const json& body) {
  Project project = parse_body([&] {
    if (!body.is_object()) throw Error(ErrorCode::BadRequest, "project body must be an object");
    Project p;
    p.name = body.value("name", "");
    p.id = body.value("id", slugify(p.name));
    p.description = body.value("description", "");
    p.author = body.value("author", "");
    p.date = body.value("date", today());
    p.cutoff_year = body.value("cutoff_year", 1972);
    if (body.contains("vuln_thresholds")) {
      p.vuln_thresholds = body["vuln_thresholds"].get<std::array<double, 2>>();
    }
    if (body.contains("damage_thresholds")) {
      p.damage_thresholds = body["damage_thresholds"].get<std::array<double, 4>>();
    }
    return p;
  });
  validate_thresholds(project);
  std::lock_guard guard(project_mutex(project.id));
  if (project_exists(root_, project.id)) {
    throw Error(ErrorCode::DuplicateProject, "project '" + project.id + "' already exists");
  }
  ProjectLock lock(root_, project.id);
  save_project(project, root_, lock);
  return with_schema(summary_json(project));
}

Project Workbench::load(const std::string& id) const { return load_project(root_, id); }

json Workbench::project_summary(const std::string& id) const {
  return with_schema(summary_json(load(id)));
}

json Workbench::import_cadastre(const std::string& id, std::string_view csv_text,
                                const ColumnMap& mapping) {
  return mutate(id, [&](Project& project) {
    auto parsed = parse_cadastre(csv_text, mapping);
    vulnesis::import_cadastre(project, parsed.rows);
    const auto counts = discover_types(project);
    json discovered = json::object();
    for (const auto& [category, values] : counts) discovered[std::string(to_string(category))] = values;
    return json{{"rows", parsed.rows.size()},
                {"errors", row_errors_json(parsed.errors)},
                {"buildings", project.buildings.size()},
                {"discovered", discovered}};
  });
}

json Workbench::load_cartography(const std::string& id, LayerKind kind,
                                 const std::string& key_property, std::string_view geojson_text) {
  return mutate(id, [&](Project& project) {
    return cartography_json(vulnesis::load_cartography(project, geojson_text, kind, key_property));
  });
}

json Workbench::types(const std::string& id) const {
  const Project project = load(id);
  const Masters masters = load_masters(root_);
  const auto discovered = discover_types(project);
  return with_schema(reconcile_json(discovered, reconcile_types(discovered, masters, project.aliases)));
}

json Workbench::type_action(const std::string& id, const json& body) {
  const std::string action = require_string(body, "action");
  const TypeCategory category = parse_type_category(require_string(body, "category"));
  const std::string code = require_string(body, "code");
  if (action != "register" && action != "alias") {
    throw Error(ErrorCode::BadRequest, "action must be register or alias");
  }
  return mutate_with_masters(id, [&](Project& project, Masters& masters) {
    if (action == "register") {
      register_type(masters.type_master(category), code, body.value("label", code));
    } else {
      const std::string alias = require_string(body, "alias");
      if (body.value("scope", "project") == "system") {
        add_alias(masters.type_master(category), alias, code);
      } else {
        add_project_alias(project, masters, category, alias, code);
      }
    }
    const auto discovered = discover_types(project);
    return reconcile_json(discovered, reconcile_types(discovered, masters, project.aliases));
  });
}

json Workbench::masters() const {
  return serialize::masters_to_json(load_masters(root_));
}

json Workbench::subtypologies(const std::string& id) const {
  const Project project = load(id);
  std::map<SubTypologyKey, std::string> owner;
  for (const auto& t : project.typologies) {
    for (const auto& k : t.keys) owner.emplace(k, t.id);
  }
  json items = json::array();
  std::size_t unassigned = 0;
  for (const auto& entry : subtypology_counts(project)) {
    auto it = owner.find(entry.key);
    unassigned += it == owner.end();
    items.push_back({{"key", entry.key.text()},
                     {"count", entry.count},
                     {"typology_id", it == owner.end() ? json(nullptr) : json(it->second)}});
  }
  return with_schema({{"subtypologies", items}, {"unassigned", unassigned}});
}

json Workbench::typologies(const std::string& id) const {
  const Project project = load(id);
  json items = json::array();
  for (const auto& t : project.typologies) items.push_back(serialize::typology_to_json(t));
  return with_schema({{"typologies", items}});
}

json Workbench::create_typology(const std::string& id, const json& body) {
  if (!body.is_object()) throw Error(ErrorCode::BadRequest, "typology body must be an object");
  return mutate_with_masters(id, [&](Project& project, Masters& masters) {
    const Typology* t = nullptr;
    if (body.contains("master_id")) {
      t = &import_master_typology(project, masters, require_string(body, "master_id"));
    } else {
      t = &vulnesis::create_typology(project, masters, require_string(body, "name"),
                                     body.value("description", ""));
    }
    Typology created = *t;
    if (auto quota = body.find("sample_quota"); quota != body.end() && quota->is_number()) {
      project.find_typology(created.id)->sample_quota = quota->get<double>();
      created.sample_quota = quota->get<double>();
    }
    return serialize::typology_to_json(created);
  });
}

json Workbench::delete_typology(const std::string& id, const std::string& typology_id) {
  return mutate(id, [&](Project& project) {
    vulnesis::delete_typology(project, typology_id);
    return json{{"deleted", typology_id}, {"unassigned", unassigned_subtypologies(project).size()}};
  });
}

json Workbench::assign_keys(const std::string& id, const std::string& typology_id, const json& body) {
  const auto keys = keys_from_json(body);
  return mutate(id, [&](Project& project) {
    return serialize::typology_to_json(assign_subtypologies(project, typology_id, keys));
  });
}

json Workbench::unassign_keys(const std::string& id, const std::string& typology_id,
                              const json& body) {
  const auto keys = keys_from_json(body);
  return mutate(id, [&](Project& project) {
    return serialize::typology_to_json(unassign_subtypologies(project, typology_id, keys));
  });
}

json Workbench::sample(const std::string& id, const json& body) {
  const SampleSpec spec = sample_spec_from_json(body);
  return mutate(id, [&](Project& project) {
    auto result = vulnesis::sample(project, spec);
    return json{{"selected", result.selected},
                {"per_typology", result.per_typology},
                {"seed", spec.seed},
                {"mode", to_string(spec.mode)},
                {"rng_identity", project.rng_identity}};
  });
}

std::string Workbench::field_forms(const std::string& id, char report) const {
  const auto forms = export_field_forms(load(id));
  switch (report) {
    case 'A': case 'a': return forms.matrix_csv;
    case 'B': case 'b': return forms.survey_csv;
    default: throw Error(ErrorCode::BadRequest, "report must be A or B");
  }
}

json Workbench::field_data(const std::string& id, const json& record) {
  const FieldRecord parsed = field_record_from_json(record);
  return mutate_with_masters(id, [&](Project& project, Masters& masters) {
    auto result = ingest_field_data(project, masters, parsed);
    return json{{"id", result.id},
                {"created", result.created},
                {"surveyed", result.surveyed},
                {"corrected", result.corrected},
                {"retagged", result.retagged},
                {"stale", project.stale},
                {"building", serialize::building_to_json(*project.find_building(result.id))}};
  });
}

json Workbench::field_data_csv(const std::string& id, std::string_view csv_text) {
  return mutate_with_masters(id, [&](Project& project, Masters& masters) {
    auto parsed = parse_field_data(csv_text);
    auto errors = parsed.errors;
    std::size_t applied = 0;
    json ids = json::array();
    for (std::size_t i = 0; i < parsed.records.size(); ++i) {
      try {
        auto result = ingest_field_data(project, masters, parsed.records[i]);
        ids.push_back(result.id);
        ++applied;
      } catch (const Error& e) {
        errors.push_back({parsed.record_rows[i], std::string(to_string(e.code())), e.what()});
      }
    }
    return json{{"applied", applied}, {"ids", ids}, {"errors", row_errors_json(errors)},
                {"stale", project.stale}};
  });
}

json Workbench::scenarios(const std::string& id) const {
  const Project project = load(id);
  json items = json::array();
  for (const auto& s : project.scenarios) items.push_back(serialize::scenario_to_json(s, false));
  return with_schema({{"scenarios", items}});
}

json Workbench::define_scenario(const std::string& id, const json& body) {
  auto [name, ag, meta] = parse_body([&] {
    if (!body.is_object() || !body.contains("ag") || !body["ag"].is_number()) {
      throw Error(ErrorCode::BadRequest, "scenario needs a numeric 'ag'");
    }
    ScenarioMeta m;
    if (auto it = body.find("meta"); it != body.end() && it->is_object()) {
      m.latitude = optional_field<double>(*it, "latitude");
      m.longitude = optional_field<double>(*it, "longitude");
      m.depth_km = optional_field<double>(*it, "depth_km");
      m.magnitude = optional_field<double>(*it, "magnitude");
    }
    return std::make_tuple(body.value("name", ""), body["ag"].get<double>(), m);
  });
  return mutate(id, [&](Project& project) {
    return serialize::scenario_to_json(vulnesis::define_scenario(project, name, ag, meta));
  });
}

json Workbench::run_scenario(const std::string& id, const std::string& scenario_id) {
  return mutate(id, [&](Project& project) {
    return serialize::scenario_to_json(vulnesis::run_scenario(project, scenario_id));
  });
}

json Workbench::propagate(const std::string& id) {
  return mutate(id, [&](Project& project) {
    auto report = propagate_vi(project);
    return json{{"propagated", report.propagated},
                {"typologies_without_survey", report.typologies_without_survey}};
  });
}

json Workbench::buildings(const std::string& id, const BuildingFilter& filter) const {
  const Project project = load(id);
  auto result = filter_buildings(project, filter);
  json items = json::array();
  for (const auto& b : result.buildings) items.push_back(serialize::building_to_json(b));
  return with_schema({{"total", result.total}, {"filtered", result.filtered}, {"buildings", items}});
}

std::string Workbench::map(const std::string& id, const Metric& metric, Granularity granularity) const {
  return export_map(load(id), metric, granularity);
}

json Workbench::set_state(const std::string& id, const json& body) {
  const ProjectState target = parse_project_state(require_string(body, "target"));
  std::lock_guard masters_guard(masters_mutex_);
  const Masters masters = load_masters(root_);
  return mutate(id, [&](Project& project) {
    transition(project, masters, target);
    return summary_json(project);
  });
}

json Workbench::set_scale(const std::string& id, const json& body) {
  VulnerabilityScale scale = parse_body([&] {
    return serialize::scale_from_json(body.contains("scale") ? body["scale"] : body);
  });
  return mutate(id, [&](Project& project) {
    vulnesis::set_scale(project, std::move(scale));
    return json{{"scale", serialize::scale_to_json(project.scale)},
                {"stale", project.stale},
                {"stale_reason", project.stale_reason}};
  });
}

json Workbench::set_thresholds(const std::string& id, const json& body) {
  return mutate(id, [&](Project& project) {
    auto [vuln, damage] = parse_body([&] {
      return std::make_pair(body.value("vuln_thresholds", project.vuln_thresholds),
                            body.value("damage_thresholds", project.damage_thresholds));
    });
    vulnesis::set_thresholds(project, vuln, damage);
    return json{{"vuln_thresholds", project.vuln_thresholds},
                {"damage_thresholds", project.damage_thresholds}};
  });
}

json Workbench::recompute(const std::string& id) {
  return mutate(id, [&](Project& project) {
    recompute_all(project);
    return summary_json(project);
  });
}

}  // namespace vulnesis
