#pragma once

#include <string>

#include "vulnesis/domain.hpp"

namespace vulnesis {

struct Masters;

/// Forward by one step along the chain, plus UploadingResults -> Closed.
bool is_legal_transition(ProjectState from, ProjectState to) noexcept;

/// Pure state change; throws IllegalTransition.
Project advance_state(Project project, ProjectState target);

/// Guarded transition used by the service and CLI. Besides the chain rule it
/// checks the use-case preconditions (types reconciled, at least one
/// typology, a sample drawn) and runs subtypology discovery when leaving
/// Created.
void transition(Project& project, const Masters& masters, ProjectState target);

void mark_stale(Project& project, std::string reason);

/// Replaces the scale after validation; marks the project stale when any
/// building already carries an index.
void set_scale(Project& project, VulnerabilityScale scale);

void set_thresholds(Project& project, const std::array<double, 2>& vuln,
                    const std::array<double, 4>& damage);

/// Recomputes direct indices, repeats propagation when it had been run,
/// refreshes typology statistics and every scenario, then clears the stale
/// flag.
void recompute_all(Project& project);

}  // namespace vulnesis
