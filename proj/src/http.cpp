#include "vulnesis/http.hpp"

#include <cctype>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "vulnesis/error.hpp"
#include "vulnesis/service.hpp"

namespace vulnesis {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";
constexpr const char* kGeoJson = "application/geo+json";
constexpr const char* kCsv = "text/csv; charset=utf-8";

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  const int status = http_status(code);
  res.status = status;
  json body = {{"error", {{"code", to_string(code)}, {"message", message}, {"status", status}}},
               {"schema_version", kSchemaVersion}};
  res.set_content(body.dump(), kJson);
}

/// Wraps a handler so that every failure becomes a JSON error body.
template <typename F>
httplib::Server::Handler guard(F&& f) {
  return [f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const json::exception& e) {
      send_error(res, ErrorCode::BadRequest, e.what());
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(json{{"error", {{"code", "Internal"}, {"message", e.what()}, {"status", 500}}}}.dump(),
                      kJson);
    }
  };
}

json body_json(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json doc = json::parse(req.body, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::BadRequest, "request body is not valid JSON");
  return doc;
}

void reply(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

std::optional<std::string> query(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  return req.get_param_value(name);
}

bool is_csv(const httplib::Request& req) {
  const auto type = req.get_header_value("Content-Type");
  return type.find("text/csv") != std::string::npos;
}

std::string capitalized(std::string text) {
  if (!text.empty()) text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
  return text;
}

BuildingFilter filter_from_query(const httplib::Request& req) {
  BuildingFilter filter;
  if (auto ids = query(req, "ids"); ids && !ids->empty()) {
    std::set<BuildingId> set;
    std::stringstream ss(*ids);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        set.insert(std::stoll(item));
      } catch (const std::exception&) {
        throw Error(ErrorCode::BadRequest, "ids must be a comma-separated integer list");
      }
    }
    filter.ids = std::move(set);
  }
  if (auto survey = query(req, "survey")) {
    if (*survey == "Encuestadas") {
      filter.survey_kind = SurveyKind::Encuestadas;
    } else if (*survey == "NO_Encuestadas") {
      filter.survey_kind = SurveyKind::NoEncuestadas;
    } else {
      throw Error(ErrorCode::BadRequest, "survey must be Encuestadas or NO_Encuestadas");
    }
  }
  if (auto edited = query(req, "edited")) {
    if (*edited != "true" && *edited != "false") {
      throw Error(ErrorCode::BadRequest, "edited must be true or false");
    }
    filter.edited = *edited == "true";
  }
  if (auto typology = query(req, "typology")) filter.typology_id = *typology;
  if (auto level = query(req, "level")) filter.vuln_level = *level;
  return filter;
}

ColumnMap mapping_from_query(const httplib::Request& req) {
  ColumnMap m;
  const std::pair<const char*, std::string*> fields[] = {
      {"dep", &m.departamento}, {"centro", &m.centro}, {"distrito", &m.distrito},
      {"manzana", &m.manzana},  {"lote", &m.lote},     {"edificacion", &m.edificacion},
      {"pared", &m.wall},       {"techo", &m.roof},    {"uso", &m.use},
      {"estado", &m.state},     {"anio", &m.year}};
  for (const auto& [name, slot] : fields) {
    if (auto v = query(req, (std::string("map.") + name).c_str())) *slot = *v;
  }
  return m;
}

}  // namespace

void register_routes(httplib::Server& server, Workbench& wb) {
  server.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
    res.set_header("X-Schema-Version", std::to_string(kSchemaVersion));
    res.set_header("Access-Control-Allow-Origin", "*");
  });
  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.body.empty() && res.status == 404) {
      send_error(res, ErrorCode::NotFound, "no route for " + req.method + " " + req.path);
    }
  });

  const std::string project = R"(/projects/([^/]+))";

  server.Get("/projects", guard([&](const httplib::Request&, httplib::Response& res) {
               reply(res, wb.list_projects());
             }));
  server.Post("/projects", guard([&](const httplib::Request& req, httplib::Response& res) {
                reply(res, wb.create_project(body_json(req)), 201);
              }));
  server.Get(project, guard([&](const httplib::Request& req, httplib::Response& res) {
               reply(res, wb.project_summary(req.matches[1]));
             }));
  server.Post(project + "/cadastre", guard([&](const httplib::Request& req, httplib::Response& res) {
                reply(res, wb.import_cadastre(req.matches[1], req.body, mapping_from_query(req)));
              }));
  server.Post(project + "/cartography",
              guard([&](const httplib::Request& req, httplib::Response& res) {
                const auto kind = parse_layer_kind(query(req, "kind").value_or(""));
                const auto key = query(req, "key").value_or("key");
                reply(res, wb.load_cartography(req.matches[1], kind, key, req.body));
              }));
  server.Get(project + "/types", guard([&](const httplib::Request& req, httplib::Response& res) {
               reply(res, wb.types(req.matches[1]));
             }));
  server.Post(project + "/types", guard([&](const httplib::Request& req, httplib::Response& res) {
                reply(res, wb.type_action(req.matches[1], body_json(req)));
              }));
  server.Get(project + "/subtypologies",
             guard([&](const httplib::Request& req, httplib::Response& res) {
               reply(res, wb.subtypologies(req.matches[1]));
             }));
  server.Get(project + "/typologies", guard([&](const httplib::Request& req, httplib::Response& res) {
               reply(res, wb.typologies(req.matches[1]));
             }));
  server.Post(project + "/typologies",
              guard([&](const httplib::Request& req, httplib::Response& res) {
                reply(res, wb.create_typology(req.matches[1], body_json(req)), 201);
              }));
  server.Delete(project + R"(/typologies/([^/]+))",
                guard([&](const httplib::Request& req, httplib::Response& res) {
                  reply(res, wb.delete_typology(req.matches[1], req.matches[2]));
                }));
  server.Post(project + R"(/typologies/([^/]+)/keys)",
              guard([&](const httplib::Request& req, httplib::Response& res) {
                reply(res, wb.assign_keys(req.matches[1], req.matches[2], body_json(req)));
              }));
  server.Delete(project + R"(/typologies/([^/]+)/keys)",
                guard([&](const httplib::Request& req, httplib::Response& res) {
                  reply(res, wb.unassign_keys(req.matches[1], req.matches[2], body_json(req)));
                }));
  server.Post(project + "/sample", guard([&](const httplib::Request& req, httplib::Response& res) {
                reply(res, wb.sample(req.matches[1], body_json(req)));
              }));
  server.Get(project + "/field-forms", guard([&](const httplib::Request& req, httplib::Response& res) {
               const auto report = query(req, "report").value_or("A");
               if (report.size() != 1) throw Error(ErrorCode::BadRequest, "report must be A or B");
               res.set_content(wb.field_forms(req.matches[1], report[0]), kCsv);
             }));
  server.Post(project + "/field-data", guard([&](const httplib::Request& req, httplib::Response& res) {
                if (is_csv(req)) {
                  reply(res, wb.field_data_csv(req.matches[1], req.body));
                } else {
                  reply(res, wb.field_data(req.matches[1], body_json(req)));
                }
              }));
  server.Get(project + "/scenarios", guard([&](const httplib::Request& req, httplib::Response& res) {
               reply(res, wb.scenarios(req.matches[1]));
             }));
  server.Post(project + "/scenarios", guard([&](const httplib::Request& req, httplib::Response& res) {
                reply(res, wb.define_scenario(req.matches[1], body_json(req)), 201);
              }));
  server.Post(project + R"(/scenarios/([^/]+)/run)",
              guard([&](const httplib::Request& req, httplib::Response& res) {
                reply(res, wb.run_scenario(req.matches[1], req.matches[2]));
              }));
  server.Post(project + "/propagate", guard([&](const httplib::Request& req, httplib::Response& res) {
                reply(res, wb.propagate(req.matches[1]));
              }));
  server.Get(project + "/buildings", guard([&](const httplib::Request& req, httplib::Response& res) {
               reply(res, wb.buildings(req.matches[1], filter_from_query(req)));
             }));
  server.Get(project + "/maps", guard([&](const httplib::Request& req, httplib::Response& res) {
               const auto metric_name = query(req, "metric").value_or("vulnerability");
               Metric metric;
               if (metric_name == "damage") {
                 auto scenario = query(req, "scenario");
                 if (!scenario) throw Error(ErrorCode::BadRequest, "damage maps need ?scenario=");
                 metric = Metric::damage(*scenario);
               } else if (metric_name != "vulnerability") {
                 throw Error(ErrorCode::BadRequest, "metric must be vulnerability or damage");
               }
               const auto granularity =
                   parse_granularity(capitalized(query(req, "granularity").value_or("Building")));
               res.set_content(wb.map(req.matches[1], metric, granularity), kGeoJson);
             }));
  server.Post(project + "/state", guard([&](const httplib::Request& req, httplib::Response& res) {
                reply(res, wb.set_state(req.matches[1], body_json(req)));
              }));
  server.Put(project + "/scale", guard([&](const httplib::Request& req, httplib::Response& res) {
               reply(res, wb.set_scale(req.matches[1], body_json(req)));
             }));
  server.Put(project + "/thresholds", guard([&](const httplib::Request& req, httplib::Response& res) {
               reply(res, wb.set_thresholds(req.matches[1], body_json(req)));
             }));
  server.Post(project + "/recompute", guard([&](const httplib::Request& req, httplib::Response& res) {
                reply(res, wb.recompute(req.matches[1]));
              }));
  server.Get("/masters", guard([&](const httplib::Request&, httplib::Response& res) {
               reply(res, wb.masters());
             }));
}

BindAddress parse_bind(const std::string& text) {
  BindAddress address;
  const auto colon = text.rfind(':');
  std::string port = text;
  if (colon != std::string::npos) {
    if (colon > 0) address.host = text.substr(0, colon);
    port = text.substr(colon + 1);
  }
  try {
    std::size_t used = 0;
    address.port = std::stoi(port, &used);
    if (used != port.size() || address.port < 0 || address.port > 65535) throw std::out_of_range("port");
  } catch (const std::exception&) {
    throw Error(ErrorCode::BadRequest, "bad bind address '" + text + "'");
  }
  return address;
}

void serve(Workbench& workbench, const BindAddress& address) {
  httplib::Server server;
  // SO_REUSEADDR only: sharing the port with a live listener must fail.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  register_routes(server, workbench);
  if (!server.bind_to_port(address.host, address.port)) {
    throw Error(ErrorCode::BindFailure,
                "cannot bind " + address.host + ":" + std::to_string(address.port));
  }
  server.listen_after_bind();
}

}  // namespace vulnesis
