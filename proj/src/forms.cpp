#include "vulnesis/forms.hpp"

#include "vulnesis/csv.hpp"
#include "vulnesis/error.hpp"

namespace vulnesis {

namespace {

csv::Record key_cells(const Building& b) {
  if (!b.cadastral_key) return csv::Record(6);
  const auto& k = *b.cadastral_key;
  return {k.departamento, k.centro, k.distrito, k.manzana, k.lote, k.edificacion};
}

}  // namespace

FieldForms export_field_forms(const Project& project) {
  if (static_cast<int>(project.state) < static_cast<int>(ProjectState::Sampled)) {
    throw Error(ErrorCode::WrongState, "field forms are available once the sample is drawn");
  }
  FieldForms forms;

  csv::Record matrix_header = {"id",    "kind", "dep",   "centro", "distrito", "manzana",
                               "lote",  "edificacion", "pared", "techo", "uso", "estado",
                               "anio",  "typology", "selected", "x", "y", "photo"};
  forms.matrix_csv = csv::format_row(matrix_header);
  for (const auto& b : project.buildings) {
    csv::Record row = {std::to_string(b.id), std::string(to_string(b.kind))};
    for (auto& cell : key_cells(b)) row.push_back(std::move(cell));
    row.insert(row.end(), {b.wall_type, b.roof_type, b.use_type, b.state_type,
                           std::to_string(b.construction_year), b.typology_id.value_or(""),
                           b.selected_for_survey ? "1" : "0", "", "", ""});
    forms.matrix_csv += csv::format_row(row);
  }

  csv::Record survey_header = {"id", "dep", "centro", "distrito", "manzana", "lote", "edificacion",
                               "typology", "pared", "techo", "uso", "estado", "anio",
                               "x", "y", "photo", "observer", "date"};
  for (std::size_t i = 1; i <= kParameterCount; ++i) survey_header.push_back("p" + std::to_string(i));
  for (auto name : kRawFieldNames) survey_header.emplace_back(name);
  forms.survey_csv = csv::format_row(survey_header);
  const std::size_t blanks = 3 + 2 + kParameterCount + kRawFieldNames.size();
  for (const auto& b : project.buildings) {
    if (!b.selected_for_survey) continue;
    csv::Record row = {std::to_string(b.id)};
    for (auto& cell : key_cells(b)) row.push_back(std::move(cell));
    row.insert(row.end(), {b.typology_id.value_or(""), b.wall_type, b.roof_type, b.use_type,
                           b.state_type, std::to_string(b.construction_year)});
    row.resize(row.size() + blanks);
    forms.survey_csv += csv::format_row(row);
  }
  return forms;
}

}  // namespace vulnesis
