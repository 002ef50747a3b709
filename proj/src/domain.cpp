#include "vulnesis/domain.hpp"

#include <algorithm>
#include <charconv>

#include "vulnesis/error.hpp"

namespace vulnesis {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view text, const std::array<Enum, N>& values, std::string_view what) {
  for (Enum v : values) {
    if (to_string(v) == text) return v;
  }
  throw Error(ErrorCode::BadRequest, "unknown " + std::string(what) + " '" + std::string(text) + "'");
}

}  // namespace

std::string_view to_string(ProjectState s) noexcept {
  switch (s) {
    case ProjectState::Created: return "Created";
    case ProjectState::TypesReconciled: return "TypesReconciled";
    case ProjectState::TypologiesDefined: return "TypologiesDefined";
    case ProjectState::Sampled: return "Sampled";
    case ProjectState::FieldWork: return "FieldWork";
    case ProjectState::UploadingResults: return "UploadingResults";
    case ProjectState::Closed: return "Closed";
  }
  return "?";
}

std::string_view to_string(SurveyClass c) noexcept {
  switch (c) {
    case SurveyClass::A: return "A";
    case SurveyClass::B: return "B";
    case SurveyClass::C: return "C";
    case SurveyClass::D: return "D";
  }
  return "?";
}

std::string_view to_string(TypeCategory c) noexcept {
  switch (c) {
    case TypeCategory::Wall: return "Wall";
    case TypeCategory::Roof: return "Roof";
    case TypeCategory::Use: return "Use";
    case TypeCategory::State: return "State";
  }
  return "?";
}

std::string_view to_string(BuildingKind k) noexcept {
  return k == BuildingKind::Cadastral ? "Cadastral" : "Independent";
}

std::string_view to_string(ViSource s) noexcept {
  switch (s) {
    case ViSource::None: return "None";
    case ViSource::Direct: return "Direct";
    case ViSource::Propagated: return "Propagated";
  }
  return "?";
}

std::string_view to_string(LayerKind k) noexcept {
  switch (k) {
    case LayerKind::Parcels: return "Parcels";
    case LayerKind::Blocks: return "Blocks";
    case LayerKind::ProjectArea: return "ProjectArea";
  }
  return "?";
}

ProjectState parse_project_state(std::string_view text) {
  return parse_enum(text, kAllStates, "project state");
}

SurveyClass parse_survey_class(std::string_view text) {
  static constexpr std::array<SurveyClass, 4> all = {SurveyClass::A, SurveyClass::B,
                                                     SurveyClass::C, SurveyClass::D};
  return parse_enum(text, all, "survey class");
}

TypeCategory parse_type_category(std::string_view text) {
  return parse_enum(text, kAllCategories, "type category");
}

BuildingKind parse_building_kind(std::string_view text) {
  static constexpr std::array<BuildingKind, 2> all = {BuildingKind::Cadastral,
                                                      BuildingKind::Independent};
  return parse_enum(text, all, "building kind");
}

ViSource parse_vi_source(std::string_view text) {
  static constexpr std::array<ViSource, 3> all = {ViSource::None, ViSource::Direct,
                                                  ViSource::Propagated};
  return parse_enum(text, all, "vi source");
}

LayerKind parse_layer_kind(std::string_view text) {
  static constexpr std::array<LayerKind, 3> all = {LayerKind::Parcels, LayerKind::Blocks,
                                                   LayerKind::ProjectArea};
  return parse_enum(text, all, "layer kind");
}

VulnerabilityScale VulnerabilityScale::benedetti_petrini() {
  return VulnerabilityScale{{
      {"Organizacion del sistema resistente", {0, 5, 20, 45}, 1.00},
      {"Calidad del sistema resistente", {0, 5, 25, 45}, 0.25},
      {"Resistencia convencional", {0, 5, 25, 45}, 1.50},
      {"Posicion del edificio y cimentacion", {0, 5, 25, 45}, 0.75},
      {"Diafragmas horizontales", {0, 5, 15, 45}, 1.00},
      {"Configuracion en planta", {0, 5, 25, 45}, 0.50},
      {"Configuracion en elevacion", {0, 5, 25, 45}, 1.00},
      {"Distancia maxima entre los muros", {0, 5, 25, 45}, 0.25},
      {"Tipo de cubierta", {0, 15, 25, 45}, 1.00},
      {"Elementos no estructurales", {0, 0, 25, 45}, 0.25},
      {"Estado de conservacion", {0, 5, 25, 45}, 1.00},
  }};
}

double VulnerabilityScale::max_vi() const {
  double total = 0.0;
  for (const auto& row : rows) total += row.value(SurveyClass::D) * row.w;
  return total;
}

std::optional<double>& raw_field(RawMeasurements& raw, std::size_t index) {
  switch (index) {
    case 0: return raw.floors;
    case 1: return raw.total_area;
    case 2: return raw.resistant_area_x;
    case 3: return raw.resistant_area_y;
    case 4: return raw.masonry_shear;
    case 5: return raw.storey_height;
    case 6: return raw.masonry_weight;
    case 7: return raw.diaphragm_weight;
    case 8: return raw.plan_ratio_a;
    case 9: return raw.plan_ratio_b;
    case 10: return raw.porch_pct;
    case 11: return raw.t_over_h;
    case 12: return raw.delta_m_over_m_pct;
    case 13: return raw.l_over_s;
    default: throw Error(ErrorCode::OutOfRange, "raw field index out of range");
  }
}

const std::optional<double>& raw_field(const RawMeasurements& raw, std::size_t index) {
  return raw_field(const_cast<RawMeasurements&>(raw), index);
}

std::string CadastralKey::text() const {
  return departamento + '-' + centro + '-' + distrito + '-' + manzana + '-' + lote + '-' +
         edificacion;
}

std::string SubTypologyKey::text() const {
  return wall_type + '|' + roof_type + '|' + use_type + '|' + state_type + '|' +
         (pre_cutoff ? "pre" : "post");
}

SubTypologyKey SubTypologyKey::parse(std::string_view text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = text.find('|', start);
    parts.emplace_back(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (parts.size() != 5 || (parts[4] != "pre" && parts[4] != "post")) {
    throw Error(ErrorCode::BadRequest, "malformed subtypology key '" + std::string(text) + "'");
  }
  return SubTypologyKey{parts[0], parts[1], parts[2], parts[3], parts[4] == "pre"};
}

std::vector<Ring> LayerFeature::rings() const {
  std::vector<Ring> out;
  for (const auto& polygon : polygons) out.insert(out.end(), polygon.begin(), polygon.end());
  return out;
}

Building* Project::find_building(BuildingId building_id) {
  auto it = std::lower_bound(buildings.begin(), buildings.end(), building_id,
                             [](const Building& b, BuildingId v) { return b.id < v; });
  return (it != buildings.end() && it->id == building_id) ? &*it : nullptr;
}

const Building* Project::find_building(BuildingId building_id) const {
  return const_cast<Project*>(this)->find_building(building_id);
}

Typology* Project::find_typology(std::string_view typology_id) {
  for (auto& t : typologies) {
    if (t.id == typology_id) return &t;
  }
  return nullptr;
}

const Typology* Project::find_typology(std::string_view typology_id) const {
  return const_cast<Project*>(this)->find_typology(typology_id);
}

Scenario* Project::find_scenario(std::string_view scenario_id) {
  for (auto& s : scenarios) {
    if (s.id == scenario_id) return &s;
  }
  return nullptr;
}

const Scenario* Project::find_scenario(std::string_view scenario_id) const {
  return const_cast<Project*>(this)->find_scenario(scenario_id);
}

const MapLayer* Project::layer(LayerKind kind) const {
  auto it = layers.find(kind);
  return it == layers.end() ? nullptr : &it->second;
}

BuildingId Project::next_building_id() const {
  return buildings.empty() ? 1 : buildings.back().id + 1;
}

bool Project::has_any_vi() const {
  return std::any_of(buildings.begin(), buildings.end(),
                     [](const Building& b) { return b.vi.has_value(); });
}

void validate_thresholds(const Project& project) {
  const auto& v = project.vuln_thresholds;
  if (!(v[0] > 0.0 && v[0] < v[1] && v[1] < 100.0)) {
    throw Error(ErrorCode::InvalidThresholds,
                "vulnerability thresholds must be strictly ascending within (0,100)");
  }
  const auto& d = project.damage_thresholds;
  bool ok = d[0] > 0.0 && d[3] < 1.0;
  for (std::size_t i = 1; i < d.size(); ++i) ok = ok && d[i - 1] < d[i];
  if (!ok) {
    throw Error(ErrorCode::InvalidThresholds,
                "damage thresholds must be strictly ascending within (0,1)");
  }
}

std::string next_id(std::string_view prefix, const std::vector<std::string>& taken) {
  long long best = 0;
  for (const auto& id : taken) {
    if (id.size() <= prefix.size() || id.compare(0, prefix.size(), prefix) != 0) continue;
    long long n = 0;
    auto tail = std::string_view(id).substr(prefix.size());
    auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), n);
    if (ec == std::errc{} && ptr == tail.data() + tail.size()) best = std::max(best, n);
  }
  return std::string(prefix) + std::to_string(best + 1);
}

}  // namespace vulnesis
