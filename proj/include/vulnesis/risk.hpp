#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "vulnesis/domain.hpp"

namespace vulnesis {

/// Straight damage line d = slope * (a/g) - intercept, anchored at a
/// normalized vulnerability index.
struct DamageCurve {
  double vi_norm_anchor = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
};

/// The eleven calibrated curves at vi_norm = 0, 10, ..., 100 (ascending).
const std::array<DamageCurve, 11>& damage_anchors();

struct LineCoefficients {
  double slope = 0.0;
  double intercept = 0.0;
};

struct DamageBounds {
  double onset_ag = 0.0;     // last ag with d == 0
  double collapse_ag = 0.0;  // first ag with d == 1
};

/// Lists every violated constraint; an empty result means the scale is valid.
std::vector<std::string> validate_scale(const VulnerabilityScale& scale);

/// Weighted sum of class values. Throws InvalidScale or WrongArity.
double compute_vi(std::span<const SurveyClass> classes, const VulnerabilityScale& scale);

/// Rescales to [0,100]; with the default scale this is vi / 3.825.
double normalize_vi(double vi, const VulnerabilityScale& scale);

/// Coefficients at vi_norm. Anchors are returned verbatim; between anchors
/// slope and intercept are interpolated linearly.
LineCoefficients damage_curve(double vi_norm);

/// clamp(slope * ag - intercept, 0, 1).
double damage_index(double vi_norm, double ag);

DamageBounds damage_bounds(double vi_norm);

const std::vector<Level>& vulnerability_levels();  // baja, media, alta
const std::vector<Level>& damage_levels();         // menor .. colapso

/// Returns levels[j] with j the number of thresholds <= value, so a value
/// equal to a threshold lands in the upper band.
Level classify(double value, std::span<const double> thresholds, std::span<const Level> levels);

Level classify_vulnerability(const Project& project, double vi_norm);
Level classify_damage(const Project& project, double d);

/// Shortest round-trip decimal form; duplicate accelerations compare on it.
std::string canonical_decimal(double value);

/// Appends a scenario and evaluates damage for every building with a
/// normalized index. Throws DuplicateAcceleration, OutOfRange, StaleProject.
const Scenario& define_scenario(Project& project, const std::string& name, double ag,
                                const ScenarioMeta& meta = {});

/// Rebuilds the damage map of an existing scenario.
const Scenario& run_scenario(Project& project, const std::string& scenario_id);

}  // namespace vulnesis
