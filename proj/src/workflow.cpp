#include "vulnesis/workflow.hpp"

#include <algorithm>

#include "vulnesis/error.hpp"
#include "vulnesis/ingest.hpp"
#include "vulnesis/risk.hpp"
#include "vulnesis/typology.hpp"

namespace vulnesis {

bool is_legal_transition(ProjectState from, ProjectState to) noexcept {
  const auto f = static_cast<int>(from);
  const auto t = static_cast<int>(to);
  if (from == ProjectState::UploadingResults && to == ProjectState::Closed) return true;
  // Closed is only entered from UploadingResults.
  return t == f + 1 && to != ProjectState::Closed;
}

Project advance_state(Project project, ProjectState target) {
  if (!is_legal_transition(project.state, target)) {
    throw Error(ErrorCode::IllegalTransition, "cannot move from " +
                                                  std::string(to_string(project.state)) + " to " +
                                                  std::string(to_string(target)));
  }
  project.state = target;
  return project;
}

void transition(Project& project, const Masters& masters, ProjectState target) {
  if (!is_legal_transition(project.state, target)) {
    throw Error(ErrorCode::IllegalTransition, "cannot move from " +
                                                  std::string(to_string(project.state)) + " to " +
                                                  std::string(to_string(target)));
  }
  switch (target) {
    case ProjectState::TypesReconciled: {
      const bool any_cadastral =
          std::any_of(project.buildings.begin(), project.buildings.end(),
                      [](const Building& b) { return b.kind == BuildingKind::Cadastral; });
      if (!any_cadastral) throw Error(ErrorCode::WrongState, "no cadastre has been imported");
      auto report = reconcile_types(discover_types(project), masters, project.aliases);
      if (!report.complete()) {
        std::string list;
        for (const auto& [category, values] : report.unmatched) {
          for (const auto& v : values) list += " " + std::string(to_string(category)) + ":" + v;
        }
        throw Error(ErrorCode::UnreconciledTypes, "unmatched type values:" + list);
      }
      Project next = project;
      discover_subtypologies(next, masters);
      project = std::move(next);
      break;
    }
    case ProjectState::TypologiesDefined:
      if (project.typologies.empty()) {
        throw Error(ErrorCode::WrongState, "define at least one typology first");
      }
      break;
    case ProjectState::Sampled: {
      const bool any_selected =
          std::any_of(project.buildings.begin(), project.buildings.end(),
                      [](const Building& b) { return b.selected_for_survey; });
      if (!any_selected) throw Error(ErrorCode::WrongState, "draw a sample first");
      break;
    }
    default:
      break;
  }
  project.state = target;
}

void mark_stale(Project& project, std::string reason) {
  project.stale = true;
  project.stale_reason = std::move(reason);
}

void set_scale(Project& project, VulnerabilityScale scale) {
  if (auto report = validate_scale(scale); !report.empty()) {
    std::string joined;
    for (const auto& r : report) joined += (joined.empty() ? "" : "; ") + r;
    throw Error(ErrorCode::InvalidScale, joined);
  }
  if (scale == project.scale) return;
  project.scale = std::move(scale);
  if (project.has_any_vi()) mark_stale(project, "vulnerability scale changed");
}

void set_thresholds(Project& project, const std::array<double, 2>& vuln,
                    const std::array<double, 4>& damage) {
  Project next = project;
  next.vuln_thresholds = vuln;
  next.damage_thresholds = damage;
  validate_thresholds(next);
  project.vuln_thresholds = vuln;
  project.damage_thresholds = damage;
  // Levels are derived values; refresh them in place.
  refresh_typology_stats(project);
  for (auto& scenario : project.scenarios) {
    for (auto& [id, damage_entry] : scenario.damages) {
      damage_entry.level = classify_damage(project, damage_entry.d);
    }
  }
}

void recompute_all(Project& project) {
  Project next = project;
  bool had_propagation = false;
  for (auto& b : next.buildings) {
    if (b.vi_source == ViSource::Propagated) had_propagation = true;
    if (b.surveyed && b.survey) {
      b.vi = compute_vi(b.survey->classes, next.scale);
      b.vi_norm = normalize_vi(*b.vi, next.scale);
      b.vi_source = ViSource::Direct;
    }
  }
  if (had_propagation) propagate_vi(next);
  refresh_typology_stats(next);
  next.stale = false;
  next.stale_reason.clear();
  for (auto& scenario : next.scenarios) run_scenario(next, scenario.id);
  project = std::move(next);
}

}  // namespace vulnesis
