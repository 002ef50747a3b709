#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vulnesis/domain.hpp"

namespace vulnesis {

struct Masters;

/// Identity of the sampling generator, stored with the project so a
/// selection can be replayed: the standard 64-bit Mersenne Twister fed through
/// a rejection-sampled Fisher-Yates shuffle, per-typology streams derived by
/// splitmix64 over (seed, FNV-1a(typology id)).
inline constexpr std::string_view kRngIdentity = "mt19937_64+fisher-yates-rejection+splitmix64/v1";

/// Creates an empty typology and records it in the system master when no
/// master of that name exists. Legal in TypesReconciled and TypologiesDefined.
const Typology& create_typology(Project& project, Masters& masters, const std::string& name,
                                const std::string& description);

/// Copies name and description from the system master; membership stays empty.
const Typology& import_master_typology(Project& project, const Masters& masters,
                                       const std::string& master_id);

const Typology& assign_subtypologies(Project& project, const std::string& typology_id,
                                     std::span<const SubTypologyKey> keys);
const Typology& unassign_subtypologies(Project& project, const std::string& typology_id,
                                       std::span<const SubTypologyKey> keys);

void delete_typology(Project& project, const std::string& typology_id);

std::vector<SubTypologyKey> unassigned_subtypologies(const Project& project);

struct SampleSpec {
  enum class Mode { TotalCount, TotalPercent, PerTypologyCount, PerTypologyPercent };

  Mode mode = Mode::PerTypologyPercent;
  /// Count or percent applying to the whole project (Total modes) or to every
  /// typology without an override (PerTypology modes).
  std::optional<double> value;
  std::map<std::string, double> per_typology;
  std::uint64_t seed = 0;
};

std::string_view to_string(SampleSpec::Mode mode) noexcept;
SampleSpec::Mode parse_sample_mode(std::string_view text);

struct SampleResult {
  std::set<BuildingId> selected;
  std::map<std::string, std::size_t> per_typology;
};

/// Seeded, block-stratified selection. Within each typology the blocks that
/// hold candidates are visited round-robin in a shuffled order, drawing
/// without replacement inside each block.
SampleResult sample(Project& project, const SampleSpec& spec);

/// Per-typology quotas implied by a spec, before any drawing.
std::map<std::string, std::size_t> sample_quotas(const Project& project, const SampleSpec& spec);

struct PropagationReport {
  std::size_t propagated = 0;
  std::vector<std::string> typologies_without_survey;
};

PropagationReport propagate_vi(Project& project);

TypologyStats typology_stats(const Project& project, const std::string& typology_id);

void refresh_typology_stats(Project& project);

}  // namespace vulnesis
