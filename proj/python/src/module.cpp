#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "vulnesis/error.hpp"
#include "vulnesis/geo.hpp"
#include "vulnesis/risk.hpp"
#include "vulnesis/service.hpp"
#include "vulnesis/serialize.hpp"

namespace py = pybind11;
using namespace vulnesis;
using nlohmann::json;

namespace {

VulnerabilityScale scale_or_default(const std::optional<std::string>& scale_json) {
  if (!scale_json) return VulnerabilityScale::benedetti_petrini();
  return serialize::scale_from_json(json::parse(*scale_json));
}

std::vector<SurveyClass> classes_of(const std::vector<std::string>& letters) {
  std::vector<SurveyClass> out;
  out.reserve(letters.size());
  for (const auto& l : letters) out.push_back(parse_survey_class(l));
  return out;
}

std::vector<Ring> rings_of(const std::vector<std::vector<std::pair<double, double>>>& rings) {
  std::vector<Ring> out;
  for (const auto& r : rings) {
    auto& ring = out.emplace_back();
    for (const auto& [x, y] : r) ring.push_back({x, y});
  }
  return out;
}

Metric metric_of(const std::string& metric, const std::string& scenario) {
  if (metric == "vulnerability") return Metric::vulnerability();
  if (metric == "damage") return Metric::damage(scenario);
  throw Error(ErrorCode::BadRequest, "unknown metric '" + metric + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Seismic vulnerability workbench core";

  static py::exception<Error> error_type(m, "VulnesisError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type.ptr())(std::string(to_string(e.code())) + ": " +
                                                                           e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    } catch (const json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.attr("SCHEMA_VERSION") = kSchemaVersion;

  m.def("default_scale", [] { return serialize::scale_to_json(VulnerabilityScale::benedetti_petrini()).dump(); },
        "Default eleven-parameter scale as a JSON string.");
  m.def(
      "compute_vi",
      [](const std::vector<std::string>& classes, std::optional<std::string> scale) {
        return compute_vi(classes_of(classes), scale_or_default(scale));
      },
      py::arg("classes"), py::arg("scale") = py::none());
  m.def(
      "normalize_vi", [](double vi, std::optional<std::string> scale) { return normalize_vi(vi, scale_or_default(scale)); },
      py::arg("vi"), py::arg("scale") = py::none());
  m.def("damage_curve", [](double v) {
    const auto c = damage_curve(v);
    return std::make_pair(c.slope, c.intercept);
  });
  m.def("damage_index", &damage_index, py::arg("vi_norm"), py::arg("ag"));
  m.def("damage_bounds", [](double v) {
    const auto b = damage_bounds(v);
    return std::make_pair(b.onset_ag, b.collapse_ag);
  });
  m.def(
      "classify",
      [](double value, const std::vector<double>& thresholds, const std::vector<std::string>& names) {
        std::vector<Level> levels;
        for (std::size_t i = 0; i < names.size(); ++i) levels.push_back({names[i], static_cast<int>(i)});
        return classify(value, thresholds, levels).name;
      },
      py::arg("value"), py::arg("thresholds"), py::arg("levels"));
  m.def(
      "point_in_polygon",
      [](std::pair<double, double> p, const std::vector<std::vector<std::pair<double, double>>>& rings) {
        const auto r = rings_of(rings);
        return point_in_polygon({p.first, p.second}, r);
      },
      py::arg("point"), py::arg("rings"));

  // Workbench methods exchange JSON text; the Python package decodes it.
  py::class_<Workbench>(m, "Workbench")
      .def(py::init([](const std::string& root) { return std::make_unique<Workbench>(root); }), py::arg("root"))
      .def("list_projects", [](const Workbench& w) { return w.list_projects().dump(); })
      .def("create_project", [](Workbench& w, const std::string& body) { return w.create_project(json::parse(body)).dump(); })
      .def("project", [](const Workbench& w, const std::string& id) { return w.project_summary(id).dump(); })
      .def("import_cadastre",
           [](Workbench& w, const std::string& id, const std::string& csv) { return w.import_cadastre(id, csv).dump(); })
      .def("load_cartography",
           [](Workbench& w, const std::string& id, const std::string& kind, const std::string& key,
              const std::string& text) { return w.load_cartography(id, parse_layer_kind(kind), key, text).dump(); })
      .def("types", [](const Workbench& w, const std::string& id) { return w.types(id).dump(); })
      .def("type_action",
           [](Workbench& w, const std::string& id, const std::string& body) { return w.type_action(id, json::parse(body)).dump(); })
      .def("masters", [](const Workbench& w) { return w.masters().dump(); })
      .def("subtypologies", [](const Workbench& w, const std::string& id) { return w.subtypologies(id).dump(); })
      .def("typologies", [](const Workbench& w, const std::string& id) { return w.typologies(id).dump(); })
      .def("create_typology", [](Workbench& w, const std::string& id,
                                 const std::string& body) { return w.create_typology(id, json::parse(body)).dump(); })
      .def("delete_typology",
           [](Workbench& w, const std::string& id, const std::string& tid) { return w.delete_typology(id, tid).dump(); })
      .def("assign_keys", [](Workbench& w, const std::string& id, const std::string& tid,
                             const std::string& body) { return w.assign_keys(id, tid, json::parse(body)).dump(); })
      .def("unassign_keys", [](Workbench& w, const std::string& id, const std::string& tid,
                               const std::string& body) { return w.unassign_keys(id, tid, json::parse(body)).dump(); })
      .def("sample", [](Workbench& w, const std::string& id, const std::string& body) { return w.sample(id, json::parse(body)).dump(); })
      .def("field_forms", [](const Workbench& w, const std::string& id, char report) { return w.field_forms(id, report); })
      .def("field_data",
           [](Workbench& w, const std::string& id, const std::string& body) { return w.field_data(id, json::parse(body)).dump(); })
      .def("field_data_csv",
           [](Workbench& w, const std::string& id, const std::string& csv) { return w.field_data_csv(id, csv).dump(); })
      .def("scenarios", [](const Workbench& w, const std::string& id) { return w.scenarios(id).dump(); })
      .def("define_scenario", [](Workbench& w, const std::string& id,
                                 const std::string& body) { return w.define_scenario(id, json::parse(body)).dump(); })
      .def("run_scenario",
           [](Workbench& w, const std::string& id, const std::string& sid) { return w.run_scenario(id, sid).dump(); })
      .def("propagate", [](Workbench& w, const std::string& id) { return w.propagate(id).dump(); })
      .def(
          "map",
          [](const Workbench& w, const std::string& id, const std::string& metric, const std::string& granularity,
             const std::string& scenario) { return w.map(id, metric_of(metric, scenario), parse_granularity(granularity)); },
          py::arg("id"), py::arg("metric"), py::arg("granularity"), py::arg("scenario") = "")
      .def("set_state",
           [](Workbench& w, const std::string& id, const std::string& body) { return w.set_state(id, json::parse(body)).dump(); })
      .def("set_scale",
           [](Workbench& w, const std::string& id, const std::string& body) { return w.set_scale(id, json::parse(body)).dump(); })
      .def("set_thresholds", [](Workbench& w, const std::string& id,
                                const std::string& body) { return w.set_thresholds(id, json::parse(body)).dump(); })
      .def("recompute", [](Workbench& w, const std::string& id) { return w.recompute(id).dump(); });
}
