// Batch command-line front end. Each verb maps onto one Workbench call, so the
// CLI and the HTTP service share all behaviour and produce identical exports.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "vulnesis/error.hpp"
#include "vulnesis/http.hpp"
#include "vulnesis/service.hpp"

using nlohmann::json;
using namespace vulnesis;

namespace {

struct Common {
  std::string root;
  std::string project;
};

std::string default_root() {
  const char* env = std::getenv("VULNESIS_ROOT");
  return env && *env ? env : "vulnesis-data";
}

void add_root(CLI::App* app, Common& c) {
  app->add_option("--root", c.root, "Projects root directory (default $VULNESIS_ROOT)");
}

void add_common(CLI::App* app, Common& c) {
  add_root(app, c);
  app->add_option("--project", c.project, "Project id")->required();
}

std::string slurp(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json_text(const std::string& text, const std::string& what) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::BadRequest, what + " is not valid JSON");
  return doc;
}

void emit_text(const std::string& text, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + out_path);
  out << text;
}

void emit(const json& doc) { std::cout << doc.dump(2) << '\n'; }

/// "key=value" pairs into a map of doubles.
std::map<std::string, double> parse_quota_pairs(const std::vector<std::string>& pairs) {
  std::map<std::string, double> out;
  for (const auto& p : pairs) {
    const auto eq = p.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::BadRequest, "expected TYPOLOGY=VALUE, got " + p);
    try {
      out[p.substr(0, eq)] = std::stod(p.substr(eq + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::BadRequest, "bad quota value in " + p);
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vulnesis: seismic vulnerability workbench"};
  app.require_subcommand(1);

  Common c;
  std::function<void()> action;
  auto bench = [&] { return Workbench(c.root.empty() ? default_root() : c.root); };

  // list
  auto* list = app.add_subcommand("list", "List projects under the root");
  add_root(list, c);
  list->callback([&] { action = [&] { emit(bench().list_projects()); }; });

  // create
  std::string name, description, author, date;
  std::optional<int> cutoff;
  auto* create = app.add_subcommand("create", "Create a project");
  add_root(create, c);
  create->add_option("--project", c.project, "Project id (default: slug of name)");
  create->add_option("--name", name, "Project name")->required();
  create->add_option("--description", description);
  create->add_option("--author", author);
  create->add_option("--date", date, "YYYY-MM-DD (default today)");
  create->add_option("--cutoff-year", cutoff, "Construction-year cutoff");
  create->callback([&] {
    action = [&] {
      json body = {{"name", name}, {"description", description}, {"author", author}};
      if (!c.project.empty()) body["id"] = c.project;
      if (!date.empty()) body["date"] = date;
      if (cutoff) body["cutoff_year"] = *cutoff;
      emit(bench().create_project(body));
    };
  });

  // show
  auto* show = app.add_subcommand("show", "Project summary");
  add_common(show, c);
  show->callback([&] { action = [&] { emit(bench().project_summary(c.project)); }; });

  // import-cadastre
  std::string file;
  std::vector<std::string> column_overrides;
  auto* cad = app.add_subcommand("import-cadastre", "Import a cadastral CSV table");
  add_common(cad, c);
  cad->add_option("--file", file, "CSV path or - for stdin")->required();
  cad->add_option("--map", column_overrides, "Column override FIELD=HEADER (e.g. pared=WALL)");
  cad->callback([&] {
    action = [&] {
      ColumnMap m;
      const std::map<std::string, std::string*> slots = {
          {"dep", &m.departamento}, {"centro", &m.centro}, {"distrito", &m.distrito},
          {"manzana", &m.manzana},  {"lote", &m.lote},     {"edificacion", &m.edificacion},
          {"pared", &m.wall},       {"techo", &m.roof},    {"uso", &m.use},
          {"estado", &m.state},     {"anio", &m.year}};
      for (const auto& o : column_overrides) {
        const auto eq = o.find('=');
        auto it = eq == std::string::npos ? slots.end() : slots.find(o.substr(0, eq));
        if (it == slots.end()) throw Error(ErrorCode::BadRequest, "bad --map entry " + o);
        *it->second = o.substr(eq + 1);
      }
      emit(bench().import_cadastre(c.project, slurp(file), m));
    };
  });

  // cartography
  std::string layer_kind, key_property = "key";
  auto* carto = app.add_subcommand("cartography", "Load a GeoJSON layer");
  add_common(carto, c);
  carto->add_option("--kind", layer_kind, "Parcels | Blocks | ProjectArea")->required();
  carto->add_option("--key", key_property, "Feature property holding the key");
  carto->add_option("--file", file, "GeoJSON path or -")->required();
  carto->callback([&] {
    action = [&] {
      emit(bench().load_cartography(c.project, parse_layer_kind(layer_kind), key_property, slurp(file)));
    };
  });

  // types
  std::string type_action, category, code, label, alias, scope = "project";
  auto* types = app.add_subcommand("types", "Show reconciliation or register/alias type codes");
  add_common(types, c);
  types->add_option("--action", type_action, "register | alias (omit to show)");
  types->add_option("--category", category, "Wall | Roof | Use | State");
  types->add_option("--code", code);
  types->add_option("--label", label);
  types->add_option("--alias", alias);
  types->add_option("--scope", scope, "project | system");
  types->callback([&] {
    action = [&] {
      if (type_action.empty()) {
        emit(bench().types(c.project));
        return;
      }
      json body = {{"action", type_action}, {"category", category}, {"code", code}, {"scope", scope}};
      if (!label.empty()) body["label"] = label;
      if (!alias.empty()) body["alias"] = alias;
      emit(bench().type_action(c.project, body));
    };
  });

  // subtypologies
  auto* subs = app.add_subcommand("subtypologies", "List subtypology keys and counts");
  add_common(subs, c);
  subs->callback([&] { action = [&] { emit(bench().subtypologies(c.project)); }; });

  // typology
  std::string typology_op, typology_id, master_id;
  std::vector<std::string> keys;
  auto* typ = app.add_subcommand("typology", "Manage typologies");
  add_common(typ, c);
  typ->add_option("op", typology_op, "list | create | import | delete | assign | unassign")
      ->required()
      ->check(CLI::IsMember({"list", "create", "import", "delete", "assign", "unassign"}));
  typ->add_option("--name", name);
  typ->add_option("--description", description);
  typ->add_option("--master", master_id, "Master typology id (import)");
  typ->add_option("--id", typology_id, "Typology id (delete/assign/unassign)");
  typ->add_option("--key", keys, "Subtypology key WALL|ROOF|USE|STATE|pre|post");
  typ->callback([&] {
    action = [&] {
      auto wb = bench();
      if (typology_op == "list") {
        emit(wb.typologies(c.project));
      } else if (typology_op == "create") {
        emit(wb.create_typology(c.project, {{"name", name}, {"description", description}}));
      } else if (typology_op == "import") {
        emit(wb.create_typology(c.project, {{"master_id", master_id}}));
      } else if (typology_op == "delete") {
        emit(wb.delete_typology(c.project, typology_id));
      } else if (typology_op == "assign") {
        emit(wb.assign_keys(c.project, typology_id, {{"keys", keys}}));
      } else {
        emit(wb.unassign_keys(c.project, typology_id, {{"keys", keys}}));
      }
    };
  });

  // sample
  std::string mode = "PerTypologyPercent";
  std::optional<double> value;
  std::vector<std::string> per_typology;
  std::uint64_t seed = 0;
  auto* sample = app.add_subcommand("sample", "Draw the survey sample");
  add_common(sample, c);
  sample->add_option("--mode", mode, "TotalCount | TotalPercent | PerTypologyCount | PerTypologyPercent");
  sample->add_option("--value", value, "Quota applying to every typology / the total");
  sample->add_option("--per", per_typology, "Per-typology override TYPOLOGY=VALUE");
  sample->add_option("--seed", seed);
  sample->callback([&] {
    action = [&] {
      json body = {{"mode", mode}, {"seed", seed}, {"per_typology", parse_quota_pairs(per_typology)}};
      if (value) body["value"] = *value;
      emit(bench().sample(c.project, body));
    };
  });

  // forms
  std::string report = "A", out_path;
  auto* forms = app.add_subcommand("forms", "Export field forms as CSV");
  add_common(forms, c);
  forms->add_option("--report", report, "A (building matrix) | B (survey form)")
      ->check(CLI::IsMember({"A", "B"}));
  forms->add_option("--out", out_path, "Output file (default stdout)");
  forms->callback([&] { action = [&] { emit_text(bench().field_forms(c.project, report[0]), out_path); }; });

  // field-data
  std::string json_file;
  auto* field = app.add_subcommand("field-data", "Ingest field records (CSV batch or JSON record)");
  add_common(field, c);
  auto* csv_opt = field->add_option("--file", file, "CSV batch path or -");
  auto* json_opt = field->add_option("--json", json_file, "JSON record (or array of records) path");
  csv_opt->excludes(json_opt);
  field->callback([&] {
    action = [&] {
      auto wb = bench();
      if (!file.empty()) {
        emit(wb.field_data_csv(c.project, slurp(file)));
      } else if (!json_file.empty()) {
        json doc = parse_json_text(slurp(json_file), json_file);
        if (doc.is_array()) {
          json results = json::array();
          for (const auto& rec : doc) results.push_back(wb.field_data(c.project, rec));
          emit(results);
        } else {
          emit(wb.field_data(c.project, doc));
        }
      } else {
        throw Error(ErrorCode::BadRequest, "field-data needs --file or --json");
      }
    };
  });

  // scenario
  std::string scenario_op, scenario_id;
  std::optional<double> ag;
  auto* scen = app.add_subcommand("scenario", "Define, run or list damage scenarios");
  add_common(scen, c);
  scen->add_option("op", scenario_op, "list | define | run")
      ->required()
      ->check(CLI::IsMember({"list", "define", "run"}));
  scen->add_option("--name", name);
  scen->add_option("--ag", ag, "Peak ground acceleration (g)");
  scen->add_option("--id", scenario_id, "Scenario id (run)");
  scen->callback([&] {
    action = [&] {
      auto wb = bench();
      if (scenario_op == "list") {
        emit(wb.scenarios(c.project));
      } else if (scenario_op == "define") {
        if (!ag) throw Error(ErrorCode::BadRequest, "define needs --ag");
        emit(wb.define_scenario(c.project, {{"name", name}, {"ag", *ag}}));
      } else {
        emit(wb.run_scenario(c.project, scenario_id));
      }
    };
  });

  // propagate
  auto* prop = app.add_subcommand("propagate", "Propagate surveyed VI to typology members");
  add_common(prop, c);
  prop->callback([&] { action = [&] { emit(bench().propagate(c.project)); }; });

  // map
  std::string metric = "vulnerability", granularity = "Building", scenario;
  auto* map = app.add_subcommand("map", "Export a thematic map as GeoJSON");
  add_common(map, c);
  map->add_option("--metric", metric)->check(CLI::IsMember({"vulnerability", "damage"}));
  map->add_option("--granularity", granularity)->check(CLI::IsMember({"Building", "Block", "Project"}));
  map->add_option("--scenario", scenario);
  map->add_option("--out", out_path);
  map->callback([&] {
    action = [&] {
      Metric m;
      if (metric == "damage") {
        if (scenario.empty()) throw Error(ErrorCode::BadRequest, "damage maps need --scenario");
        m = Metric::damage(scenario);
      }
      emit_text(bench().map(c.project, m, parse_granularity(granularity)), out_path);
    };
  });

  // buildings
  std::string survey, typology_filter, level, edited;
  std::vector<BuildingId> ids;
  auto* blds = app.add_subcommand("buildings", "Filter buildings");
  add_common(blds, c);
  blds->add_option("--ids", ids)->delimiter(',');
  blds->add_option("--survey", survey)->check(CLI::IsMember({"Encuestadas", "NO_Encuestadas"}));
  blds->add_option("--edited", edited)->check(CLI::IsMember({"true", "false"}));
  blds->add_option("--typology", typology_filter);
  blds->add_option("--level", level);
  blds->callback([&] {
    action = [&] {
      BuildingFilter f;
      if (!ids.empty()) f.ids = std::set<BuildingId>(ids.begin(), ids.end());
      if (!survey.empty()) f.survey_kind = survey == "Encuestadas" ? SurveyKind::Encuestadas : SurveyKind::NoEncuestadas;
      if (!edited.empty()) f.edited = edited == "true";
      if (!typology_filter.empty()) f.typology_id = typology_filter;
      if (!level.empty()) f.vuln_level = level;
      emit(bench().buildings(c.project, f));
    };
  });

  // state
  std::string target;
  auto* state = app.add_subcommand("state", "Advance the project workflow state");
  add_common(state, c);
  state->add_option("--target", target, "Target state")->required();
  state->callback([&] { action = [&] { emit(bench().set_state(c.project, {{"target", target}})); }; });

  // scale / thresholds / recompute
  auto* scale = app.add_subcommand("scale", "Replace the vulnerability scale from a JSON file");
  add_common(scale, c);
  scale->add_option("--file", file, "Scale JSON")->required();
  scale->callback([&] {
    action = [&] { emit(bench().set_scale(c.project, parse_json_text(slurp(file), file))); };
  });

  auto* thresholds = app.add_subcommand("thresholds", "Replace level thresholds from a JSON file");
  add_common(thresholds, c);
  thresholds->add_option("--file", file, "{vuln_thresholds, damage_thresholds}")->required();
  thresholds->callback([&] {
    action = [&] { emit(bench().set_thresholds(c.project, parse_json_text(slurp(file), file))); };
  });

  auto* recompute = app.add_subcommand("recompute", "Recompute all VI, propagation and scenarios");
  add_common(recompute, c);
  recompute->callback([&] { action = [&] { emit(bench().recompute(c.project)); }; });

  auto* masters = app.add_subcommand("masters", "Show the system master catalogues");
  add_root(masters, c);
  masters->callback([&] { action = [&] { emit(bench().masters()); }; });

  // serve
  std::string bind = "127.0.0.1:8080";
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  add_root(serve_cmd, c);
  serve_cmd->add_option("--bind", bind, "host:port");
  serve_cmd->callback([&] {
    action = [&] {
      auto wb = bench();
      const auto address = parse_bind(bind);
      std::cerr << "listening on " << address.host << ":" << address.port << " root "
                << wb.root().string() << std::endl;
      serve(wb, address);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    action();
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
