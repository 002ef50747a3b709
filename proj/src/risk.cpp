#include "vulnesis/risk.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "vulnesis/error.hpp"

namespace vulnesis {

namespace {

constexpr double kMinWeight = 0.25;
constexpr double kMaxWeight = 1.5;
constexpr double kMaxClassValue = 45.0;

void require_vi_norm(double vi_norm) {
  if (!(vi_norm >= 0.0 && vi_norm <= 100.0)) {
    throw Error(ErrorCode::OutOfRange, "normalized index " + canonical_decimal(vi_norm) +
                                           " outside [0,100]");
  }
}

Damage evaluate(const Project& project, double vi_norm, double ag) {
  double d = damage_index(vi_norm, ag);
  return Damage{d, classify_damage(project, d)};
}

void fill_damages(const Project& project, Scenario& scenario) {
  scenario.damages.clear();
  for (const auto& b : project.buildings) {
    if (b.vi_norm) scenario.damages.emplace(b.id, evaluate(project, *b.vi_norm, scenario.ag));
  }
}

void require_fresh(const Project& project) {
  if (project.stale) {
    throw Error(ErrorCode::StaleProject, "project is stale (" + project.stale_reason +
                                             "); recompute before evaluating scenarios");
  }
}

}  // namespace

const std::array<DamageCurve, 11>& damage_anchors() {
  static const std::array<DamageCurve, 11> anchors = {{
      {0, 2.0786, 0.1188},
      {10, 2.4086, 0.1226},
      {20, 2.7861, 0.1194},
      {30, 3.2845, 0.1261},
      {40, 3.8356, 0.1301},
      {50, 4.5161, 0.1452},
      {60, 5.1376, 0.1376},
      {70, 5.8947, 0.1368},
      {80, 6.7470, 0.1325},
      {90, 7.6712, 0.1371},
      {100, 8.6154, 0.1231},
  }};
  return anchors;
}

std::vector<std::string> validate_scale(const VulnerabilityScale& scale) {
  std::vector<std::string> report;
  if (scale.rows.size() != kParameterCount) {
    report.push_back("expected 11 rows, found " + std::to_string(scale.rows.size()));
  }
  for (std::size_t i = 0; i < scale.rows.size(); ++i) {
    const auto& row = scale.rows[i];
    const std::string where = "row " + std::to_string(i + 1) + ": ";
    bool in_range = std::all_of(row.k.begin(), row.k.end(), [](double k) {
      return k >= 0.0 && k <= kMaxClassValue;
    });
    if (!in_range) report.push_back(where + "K out of range [0,45]");
    if (!std::is_sorted(row.k.begin(), row.k.end())) {
      report.push_back(where + "K not non-decreasing");
    }
    if (!(row.w >= kMinWeight && row.w <= kMaxWeight)) {
      report.push_back(where + "W out of range [0.25,1.5]");
    }
  }
  return report;
}

double compute_vi(std::span<const SurveyClass> classes, const VulnerabilityScale& scale) {
  if (auto report = validate_scale(scale); !report.empty()) {
    throw Error(ErrorCode::InvalidScale, "invalid scale: " + report.front());
  }
  if (classes.size() != kParameterCount) {
    throw Error(ErrorCode::WrongArity,
                "expected 11 parameter classes, got " + std::to_string(classes.size()));
  }
  double vi = 0.0;
  for (std::size_t i = 0; i < kParameterCount; ++i) {
    vi += scale.rows[i].value(classes[i]) * scale.rows[i].w;
  }
  return vi;
}

double normalize_vi(double vi, const VulnerabilityScale& scale) {
  const double max = scale.max_vi();
  // Back-filled indices can overshoot the maximum by an ulp.
  const double slack = 1e-9 * std::max(1.0, max);
  if (!(max > 0.0) || !(vi >= -slack && vi <= max + slack)) {
    throw Error(ErrorCode::OutOfRange, "index " + canonical_decimal(vi) + " outside [0," +
                                           canonical_decimal(max) + "]");
  }
  return std::clamp(100.0 * vi / max, 0.0, 100.0);
}

LineCoefficients damage_curve(double vi_norm) {
  require_vi_norm(vi_norm);
  const auto& anchors = damage_anchors();
  const double scaled = vi_norm / 10.0;
  const double floor = std::floor(scaled);
  if (floor == scaled) {
    const auto& a = anchors[static_cast<std::size_t>(floor)];
    return {a.slope, a.intercept};
  }
  const auto lo = static_cast<std::size_t>(floor);
  const auto& a = anchors[lo];
  const auto& b = anchors[lo + 1];
  const double t = scaled - floor;
  return {a.slope + t * (b.slope - a.slope), a.intercept + t * (b.intercept - a.intercept)};
}

double damage_index(double vi_norm, double ag) {
  if (!(ag >= 0.0) || !std::isfinite(ag)) {
    throw Error(ErrorCode::OutOfRange, "acceleration must be a finite value >= 0");
  }
  const auto line = damage_curve(vi_norm);
  return std::clamp(line.slope * ag - line.intercept, 0.0, 1.0);
}

DamageBounds damage_bounds(double vi_norm) {
  const auto line = damage_curve(vi_norm);
  return {line.intercept / line.slope, (1.0 + line.intercept) / line.slope};
}

const std::vector<Level>& vulnerability_levels() {
  static const std::vector<Level> levels = {{"baja", 0}, {"media", 1}, {"alta", 2}};
  return levels;
}

const std::vector<Level>& damage_levels() {
  static const std::vector<Level> levels = {
      {"menor", 0}, {"moderado", 1}, {"severo", 2}, {"total", 3}, {"colapso", 4}};
  return levels;
}

Level classify(double value, std::span<const double> thresholds, std::span<const Level> levels) {
  if (levels.size() != thresholds.size() + 1) {
    throw Error(ErrorCode::BadBandConfig, "need exactly one more level than thresholds");
  }
  if (!std::is_sorted(thresholds.begin(), thresholds.end()) ||
      std::adjacent_find(thresholds.begin(), thresholds.end()) != thresholds.end()) {
    throw Error(ErrorCode::BadBandConfig, "thresholds must be strictly ascending");
  }
  if (std::isnan(value)) throw Error(ErrorCode::OutOfRange, "cannot classify NaN");
  auto upper = std::upper_bound(thresholds.begin(), thresholds.end(), value);
  return levels[static_cast<std::size_t>(upper - thresholds.begin())];
}

Level classify_vulnerability(const Project& project, double vi_norm) {
  return classify(vi_norm, project.vuln_thresholds, vulnerability_levels());
}

Level classify_damage(const Project& project, double d) {
  return classify(d, project.damage_thresholds, damage_levels());
}

std::string canonical_decimal(double value) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

const Scenario& define_scenario(Project& project, const std::string& name, double ag,
                                const ScenarioMeta& meta) {
  if (!(ag > 0.0) || !std::isfinite(ag)) {
    throw Error(ErrorCode::OutOfRange, "scenario acceleration must be > 0");
  }
  const std::string canonical = canonical_decimal(ag);
  for (const auto& s : project.scenarios) {
    if (canonical_decimal(s.ag) == canonical) {
      throw Error(ErrorCode::DuplicateAcceleration,
                  "a scenario with a/g = " + canonical + " already exists (" + s.id + ")");
    }
  }
  require_fresh(project);

  std::vector<std::string> ids;
  for (const auto& s : project.scenarios) ids.push_back(s.id);
  Scenario scenario;
  scenario.id = next_id("s", ids);
  scenario.name = name.empty() ? "a/g " + canonical : name;
  scenario.ag = ag;
  scenario.meta = meta;
  fill_damages(project, scenario);
  project.scenarios.push_back(std::move(scenario));
  return project.scenarios.back();
}

const Scenario& run_scenario(Project& project, const std::string& scenario_id) {
  Scenario* scenario = project.find_scenario(scenario_id);
  if (!scenario) throw Error(ErrorCode::UnknownScenario, "no scenario '" + scenario_id + "'");
  require_fresh(project);
  fill_damages(project, *scenario);
  return *scenario;
}

}  // namespace vulnesis
