#include "vulnesis/typology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "vulnesis/error.hpp"
#include "vulnesis/ingest.hpp"
#include "vulnesis/risk.hpp"

namespace vulnesis {

namespace {

void require_editable(const Project& project) {
  if (project.state != ProjectState::TypesReconciled &&
      project.state != ProjectState::TypologiesDefined) {
    throw Error(ErrorCode::WrongState, "typologies can only be edited after type reconciliation "
                                       "and before sampling");
  }
}

void require_unique_name(const Project& project, const std::string& name) {
  for (const auto& t : project.typologies) {
    if (t.name == name) throw Error(ErrorCode::DuplicateName, "typology '" + name + "' exists");
  }
}

Typology& require_typology(Project& project, const std::string& typology_id) {
  Typology* t = project.find_typology(typology_id);
  if (!t) throw Error(ErrorCode::UnknownTypology, "no typology '" + typology_id + "'");
  return *t;
}

std::string new_typology_id(const Project& project) {
  std::vector<std::string> ids;
  for (const auto& t : project.typologies) ids.push_back(t.id);
  return next_id("t", ids);
}

const Typology& add_typology(Project& project, const std::string& name,
                             const std::string& description) {
  Typology t;
  t.id = new_typology_id(project);
  t.name = name;
  t.description = description;
  project.typologies.push_back(std::move(t));
  return project.typologies.back();
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Uniform integer in [0, bound) without modulo bias. std::mt19937_64's
/// output sequence is fixed by the standard; distributions are not, so the
/// bounding is done here.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t r = rng();
  while (r >= limit) r = rng();
  return r % bound;
}

template <typename T>
void shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[bounded(rng, i)]);
  }
}

std::size_t percent_of(double percent, std::size_t population) {
  // Ceiling, with a small allowance so that exact products are not pushed up
  // by representation error (10% of 2720 is 272, not 273).
  const double raw = percent * static_cast<double>(population) / 100.0;
  const auto n = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return std::min(n, population);
}

void check_percent(double p) {
  if (!(p > 0.0 && p <= 100.0)) {
    throw Error(ErrorCode::BadSampleSpec, "percent must be greater than 0 and at most 100");
  }
}

std::size_t check_count(double c) {
  if (!(c >= 1.0) || c != std::floor(c) || !std::isfinite(c)) {
    throw Error(ErrorCode::BadSampleSpec, "counts must be whole numbers >= 1");
  }
  return static_cast<std::size_t>(c);
}

std::map<std::string, std::vector<const Building*>> members_by_typology(const Project& project) {
  std::map<std::string, std::vector<const Building*>> out;
  for (const auto& t : project.typologies) out[t.id];
  for (const auto& b : project.buildings) {
    if (b.kind == BuildingKind::Cadastral && b.typology_id) out[*b.typology_id].push_back(&b);
  }
  return out;
}

}  // namespace

const Typology& create_typology(Project& project, Masters& masters, const std::string& name,
                                const std::string& description) {
  require_editable(project);
  if (name.empty()) throw Error(ErrorCode::BadRequest, "typology name must not be empty");
  require_unique_name(project, name);
  const bool known = std::any_of(masters.typologies.begin(), masters.typologies.end(),
                                 [&](const TypologyMaster& m) { return m.name == name; });
  if (!known) {
    std::vector<std::string> ids;
    for (const auto& m : masters.typologies) ids.push_back(m.id);
    masters.typologies.push_back({next_id("m", ids), name, description});
  }
  return add_typology(project, name, description);
}

const Typology& import_master_typology(Project& project, const Masters& masters,
                                       const std::string& master_id) {
  require_editable(project);
  const TypologyMaster* master = masters.find_typology(master_id);
  if (!master) throw Error(ErrorCode::UnknownMaster, "no master typology '" + master_id + "'");
  require_unique_name(project, master->name);
  return add_typology(project, master->name, master->description);
}

std::vector<SubTypologyKey> unassigned_subtypologies(const Project& project) {
  std::set<SubTypologyKey> assigned;
  for (const auto& t : project.typologies) assigned.insert(t.keys.begin(), t.keys.end());
  std::vector<SubTypologyKey> out;
  for (const auto& entry : subtypology_counts(project)) {
    if (!assigned.count(entry.key)) out.push_back(entry.key);
  }
  return out;
}

const Typology& assign_subtypologies(Project& project, const std::string& typology_id,
                                     std::span<const SubTypologyKey> keys) {
  require_editable(project);
  Typology& target = require_typology(project, typology_id);
  std::set<SubTypologyKey> discovered;
  for (const auto& entry : subtypology_counts(project)) discovered.insert(entry.key);
  for (const auto& key : keys) {
    if (!discovered.count(key)) {
      throw Error(ErrorCode::BadRequest, "subtypology " + key.text() + " does not occur in the project");
    }
    for (const auto& t : project.typologies) {
      if (t.keys.count(key)) {
        throw Error(ErrorCode::KeyAlreadyAssigned,
                    "subtypology " + key.text() + " already belongs to typology " + t.id);
      }
    }
  }
  const std::set<SubTypologyKey> added(keys.begin(), keys.end());
  target.keys.insert(added.begin(), added.end());
  for (auto& b : project.buildings) {
    if (b.kind == BuildingKind::Cadastral && b.subtypology && added.count(*b.subtypology)) {
      b.typology_id = typology_id;
    }
  }
  refresh_typology_stats(project);
  return *project.find_typology(typology_id);
}

const Typology& unassign_subtypologies(Project& project, const std::string& typology_id,
                                       std::span<const SubTypologyKey> keys) {
  require_editable(project);
  Typology& target = require_typology(project, typology_id);
  for (const auto& key : keys) {
    if (!target.keys.count(key)) {
      throw Error(ErrorCode::KeyNotMember,
                  "subtypology " + key.text() + " is not a member of typology " + typology_id);
    }
  }
  const std::set<SubTypologyKey> removed(keys.begin(), keys.end());
  for (const auto& key : removed) target.keys.erase(key);
  for (auto& b : project.buildings) {
    if (b.subtypology && removed.count(*b.subtypology) && b.typology_id == typology_id) {
      b.typology_id.reset();
    }
  }
  refresh_typology_stats(project);
  return *project.find_typology(typology_id);
}

void delete_typology(Project& project, const std::string& typology_id) {
  require_editable(project);
  require_typology(project, typology_id);
  for (auto& b : project.buildings) {
    if (b.typology_id == typology_id) b.typology_id.reset();
  }
  std::erase_if(project.typologies, [&](const Typology& t) { return t.id == typology_id; });
}

std::string_view to_string(SampleSpec::Mode mode) noexcept {
  switch (mode) {
    case SampleSpec::Mode::TotalCount: return "TotalCount";
    case SampleSpec::Mode::TotalPercent: return "TotalPercent";
    case SampleSpec::Mode::PerTypologyCount: return "PerTypologyCount";
    case SampleSpec::Mode::PerTypologyPercent: return "PerTypologyPercent";
  }
  return "?";
}

SampleSpec::Mode parse_sample_mode(std::string_view text) {
  for (auto mode : {SampleSpec::Mode::TotalCount, SampleSpec::Mode::TotalPercent,
                    SampleSpec::Mode::PerTypologyCount, SampleSpec::Mode::PerTypologyPercent}) {
    if (to_string(mode) == text) return mode;
  }
  throw Error(ErrorCode::BadSampleSpec, "unknown sampling mode '" + std::string(text) + "'");
}

std::map<std::string, std::size_t> sample_quotas(const Project& project, const SampleSpec& spec) {
  const auto members = members_by_typology(project);
  std::map<std::string, std::size_t> quotas;
  using Mode = SampleSpec::Mode;

  if (spec.mode == Mode::TotalCount || spec.mode == Mode::TotalPercent) {
    if (!spec.value) throw Error(ErrorCode::BadSampleSpec, "a total sample needs a value");
    std::size_t total = 0;
    for (const auto& [id, list] : members) total += list.size();
    std::size_t wanted = 0;
    if (spec.mode == Mode::TotalCount) {
      wanted = check_count(*spec.value);
      if (wanted > total) {
        throw Error(ErrorCode::QuotaExceedsPopulation,
                    "requested " + std::to_string(wanted) + " buildings out of " +
                        std::to_string(total));
      }
    } else {
      check_percent(*spec.value);
      wanted = percent_of(*spec.value, total);
    }
    // Largest-remainder apportionment by typology population.
    std::vector<std::tuple<double, std::string>> remainders;
    std::size_t assigned = 0;
    for (const auto& [id, list] : members) {
      const double exact = total == 0 ? 0.0
                                      : static_cast<double>(wanted) * static_cast<double>(list.size()) /
                                            static_cast<double>(total);
      const auto base = static_cast<std::size_t>(std::floor(exact));
      quotas[id] = base;
      assigned += base;
      remainders.emplace_back(exact - static_cast<double>(base), id);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });
    for (std::size_t i = 0; assigned < wanted && i < remainders.size(); ++i) {
      const auto& id = std::get<1>(remainders[i]);
      if (quotas[id] < members.at(id).size()) {
        ++quotas[id];
        ++assigned;
      }
    }
    return quotas;
  }

  for (const auto& t : project.typologies) {
    std::optional<double> value;
    if (auto it = spec.per_typology.find(t.id); it != spec.per_typology.end()) {
      value = it->second;
    } else if (spec.value) {
      value = spec.value;
    } else {
      value = t.sample_quota;
    }
    if (!value) {
      throw Error(ErrorCode::BadSampleSpec, "no quota given for typology " + t.id);
    }
    const std::size_t population = members.at(t.id).size();
    if (spec.mode == Mode::PerTypologyCount) {
      const std::size_t count = check_count(*value);
      if (count > population) {
        throw Error(ErrorCode::QuotaExceedsPopulation,
                    "typology " + t.id + " has " + std::to_string(population) +
                        " buildings; quota " + std::to_string(count));
      }
      quotas[t.id] = count;
    } else {
      check_percent(*value);
      quotas[t.id] = percent_of(*value, population);
    }
  }
  for (const auto& [id, _] : spec.per_typology) {
    if (!project.find_typology(id)) throw Error(ErrorCode::UnknownTypology, "no typology '" + id + "'");
  }
  return quotas;
}

SampleResult sample(Project& project, const SampleSpec& spec) {
  if (project.state != ProjectState::TypologiesDefined) {
    throw Error(ErrorCode::WrongState, "sampling requires state TypologiesDefined");
  }
  for (const auto& b : project.buildings) {
    if (b.kind == BuildingKind::Cadastral && !b.typology_id) {
      throw Error(ErrorCode::UnassignedBuildingsRemain,
                  "building " + std::to_string(b.id) + " belongs to no typology");
    }
  }
  const auto quotas = sample_quotas(project, spec);
  const auto members = members_by_typology(project);

  SampleResult result;
  for (const auto& [typology_id, quota] : quotas) {
    result.per_typology[typology_id] = quota;
    if (quota == 0) continue;

    std::map<std::string, std::vector<BuildingId>> blocks;
    for (const Building* b : members.at(typology_id)) {
      blocks[b->cadastral_key->block()].push_back(b->id);
    }
    std::mt19937_64 rng(splitmix64(spec.seed ^ fnv1a(typology_id)));
    std::vector<std::vector<BuildingId>> order;
    order.reserve(blocks.size());
    for (auto& [block, ids] : blocks) order.push_back(std::move(ids));
    shuffle(order, rng);
    for (auto& ids : order) shuffle(ids, rng);

    std::size_t taken = 0;
    for (std::size_t round = 0; taken < quota; ++round) {
      for (auto& ids : order) {
        if (taken == quota) break;
        if (round < ids.size()) {
          result.selected.insert(ids[round]);
          ++taken;
        }
      }
    }
  }

  for (auto& b : project.buildings) b.selected_for_survey = result.selected.count(b.id) > 0;
  project.rng_identity = std::string(kRngIdentity);
  return result;
}

PropagationReport propagate_vi(Project& project) {
  const bool any_surveyed = std::any_of(project.buildings.begin(), project.buildings.end(),
                                        [](const Building& b) { return b.surveyed; });
  if (!any_surveyed) throw Error(ErrorCode::NothingSurveyed, "no building has been surveyed yet");

  std::map<std::string, std::pair<double, std::size_t>> sums;
  for (const auto& t : project.typologies) sums[t.id] = {0.0, 0};
  for (const auto& b : project.buildings) {
    if (b.kind == BuildingKind::Cadastral && b.typology_id && b.vi_source == ViSource::Direct &&
        b.vi_norm) {
      auto& [sum, n] = sums[*b.typology_id];
      sum += *b.vi_norm;
      ++n;
    }
  }

  PropagationReport report;
  const double max = project.scale.max_vi();
  for (auto& b : project.buildings) {
    if (b.kind != BuildingKind::Cadastral || b.vi_source == ViSource::Direct) continue;
    b.vi.reset();
    b.vi_norm.reset();
    b.vi_source = ViSource::None;
    if (!b.typology_id) continue;
    const auto& [sum, n] = sums[*b.typology_id];
    if (n == 0) continue;
    const double mean = sum / static_cast<double>(n);
    b.vi_norm = mean;
    b.vi = std::min(mean * max / 100.0, max);
    b.vi_source = ViSource::Propagated;
    ++report.propagated;
  }
  for (const auto& t : project.typologies) {
    if (sums[t.id].second == 0) report.typologies_without_survey.push_back(t.id);
  }
  refresh_typology_stats(project);
  return report;
}

TypologyStats typology_stats(const Project& project, const std::string& typology_id) {
  if (!project.find_typology(typology_id)) {
    throw Error(ErrorCode::UnknownTypology, "no typology '" + typology_id + "'");
  }
  TypologyStats stats;
  double norm_sum = 0.0;
  double vi_sum = 0.0;
  for (const auto& b : project.buildings) {
    if (b.kind != BuildingKind::Cadastral || b.typology_id != typology_id) continue;
    ++stats.count;
    if (b.vi_source == ViSource::Direct && b.vi && b.vi_norm) {
      ++stats.surveyed;
      norm_sum += *b.vi_norm;
      vi_sum += *b.vi;
    }
  }
  if (stats.surveyed > 0) {
    stats.avg_vi_norm = norm_sum / static_cast<double>(stats.surveyed);
    stats.total_vi = vi_sum;
    stats.level = classify_vulnerability(project, *stats.avg_vi_norm);
  }
  return stats;
}

void refresh_typology_stats(Project& project) {
  for (auto& t : project.typologies) t.stats = typology_stats(project, t.id);
}

}  // namespace vulnesis
