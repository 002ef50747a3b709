#include "vulnesis/geo.hpp"

#include <algorithm>

#include <json.hpp>

#include "vulnesis/error.hpp"
#include "vulnesis/risk.hpp"

namespace vulnesis {

using nlohmann::json;

namespace {

double orient(Point a, Point b, Point p) {
  return (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
}

bool on_segment(Point a, Point b, Point p) {
  if (orient(a, b, p) != 0.0) return false;
  return p.x >= std::min(a.x, b.x) && p.x <= std::max(a.x, b.x) && p.y >= std::min(a.y, b.y) &&
         p.y <= std::max(a.y, b.y);
}

struct Valued {
  std::optional<double> value;
  std::optional<Level> level;
};

Valued building_value(const Project& project, const Building& b, const Metric& metric,
                      const Scenario* scenario) {
  if (metric.kind == Metric::Kind::Vulnerability) {
    if (!b.vi_norm) return {};
    return {b.vi_norm, classify_vulnerability(project, *b.vi_norm)};
  }
  auto it = scenario->damages.find(b.id);
  if (it == scenario->damages.end()) return {};
  return {it->second.d, it->second.level};
}

std::optional<Level> level_for(const Project& project, const Metric& metric,
                               std::optional<double> value) {
  if (!value) return std::nullopt;
  return metric.kind == Metric::Kind::Vulnerability ? classify_vulnerability(project, *value)
                                                    : classify_damage(project, *value);
}

/// Block per building: geometry/code when a Blocks layer exists, bare
/// cadastral codes otherwise.
std::map<BuildingId, std::string> resolve_blocks(const Project& project) {
  if (project.layer(LayerKind::Blocks)) return assign_blocks(project).blocks;
  std::map<BuildingId, std::string> out;
  for (const auto& b : project.buildings) {
    if (b.cadastral_key) out.emplace(b.id, b.cadastral_key->block());
  }
  return out;
}

json ring_json(const Ring& ring) {
  json out = json::array();
  for (const auto& p : ring) out.push_back({p.x, p.y});
  return out;
}

json polygon_json(const Polygon& polygon) {
  json out = json::array();
  for (const auto& ring : polygon) out.push_back(ring_json(ring));
  return out;
}

json geometry_json(const LayerFeature& feature) {
  if (feature.polygons.size() == 1) {
    return {{"type", "Polygon"}, {"coordinates", polygon_json(feature.polygons.front())}};
  }
  json coords = json::array();
  for (const auto& polygon : feature.polygons) coords.push_back(polygon_json(polygon));
  return {{"type", "MultiPolygon"}, {"coordinates", coords}};
}

const LayerFeature* find_feature(const MapLayer* layer, const std::string& key) {
  if (!layer) return nullptr;
  auto it = std::lower_bound(layer->features.begin(), layer->features.end(), key,
                             [](const LayerFeature& f, const std::string& k) { return f.key < k; });
  return (it != layer->features.end() && it->key == key) ? &*it : nullptr;
}

}  // namespace

bool point_in_polygon(Point p, std::span<const Ring> rings) {
  bool inside = false;
  for (const auto& ring : rings) {
    if (ring.size() < 4 || !(ring.front() == ring.back())) {
      throw Error(ErrorCode::DegenerateRing, "ring needs at least 4 positions with first == last");
    }
  }
  for (const auto& ring : rings) {
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
      const Point a = ring[i];
      const Point b = ring[i + 1];
      if (on_segment(a, b, p)) return true;
      // Crossing test by orientation: an upward edge crossing the horizontal
      // line through p counts when p lies strictly left of it, a downward edge
      // when p lies strictly right.
      if (a.y <= p.y && b.y > p.y && orient(a, b, p) > 0.0) inside = !inside;
      else if (a.y > p.y && b.y <= p.y && orient(a, b, p) < 0.0) inside = !inside;
    }
  }
  return inside;
}

BlockAssignment assign_blocks(const Project& project) {
  const MapLayer* layer = project.layer(LayerKind::Blocks);
  if (!layer) throw Error(ErrorCode::NoBlocksLayer, "no Blocks layer loaded");
  std::vector<std::vector<Ring>> rings;
  rings.reserve(layer->features.size());
  for (const auto& f : layer->features) rings.push_back(f.rings());

  BlockAssignment out;
  for (const auto& b : project.buildings) {
    std::optional<std::string> block;
    if (b.coord) {
      for (std::size_t i = 0; i < layer->features.size(); ++i) {
        if (point_in_polygon(*b.coord, rings[i])) {
          block = layer->features[i].key;
          break;
        }
      }
    }
    if (!block && b.cadastral_key && find_feature(layer, b.cadastral_key->block())) {
      block = b.cadastral_key->block();
    }
    if (block) {
      out.blocks.emplace(b.id, *block);
    } else {
      out.unassigned.push_back(b.id);
    }
  }
  return out;
}

std::string_view to_string(Granularity g) noexcept {
  switch (g) {
    case Granularity::Building: return "Building";
    case Granularity::Block: return "Block";
    case Granularity::Project: return "Project";
  }
  return "?";
}

Granularity parse_granularity(std::string_view text) {
  for (auto g : {Granularity::Building, Granularity::Block, Granularity::Project}) {
    if (to_string(g) == text) return g;
  }
  throw Error(ErrorCode::BadRequest, "unknown granularity '" + std::string(text) + "'");
}

std::string_view Metric::name() const noexcept {
  return kind == Kind::Vulnerability ? "vulnerability" : "damage";
}

AggregateResult aggregate(const Project& project, const Metric& metric, Granularity granularity) {
  if (project.stale) {
    throw Error(ErrorCode::StaleProject,
                "project is stale (" + project.stale_reason + "); recompute before aggregating");
  }
  const Scenario* scenario = nullptr;
  if (metric.kind == Metric::Kind::Damage) {
    scenario = project.find_scenario(metric.scenario_id);
    if (!scenario) throw Error(ErrorCode::UnknownScenario, "no scenario '" + metric.scenario_id + "'");
  }

  AggregateResult result{granularity, metric, {}};
  switch (granularity) {
    case Granularity::Building: {
      for (const auto& b : project.buildings) {
        auto v = building_value(project, b, metric, scenario);
        AggregateFeature f;
        f.key = std::to_string(b.id);
        f.value = v.value;
        f.level = v.level;
        f.n = v.value ? 1 : 0;
        f.members = 1;
        f.building_id = b.id;
        f.vi_source = b.vi_source;
        result.features.push_back(std::move(f));
      }
      break;
    }
    case Granularity::Block: {
      struct Acc {
        double sum = 0.0;
        std::size_t n = 0;
        std::size_t members = 0;
      };
      std::map<std::string, Acc> blocks;
      if (const MapLayer* layer = project.layer(LayerKind::Blocks)) {
        for (const auto& f : layer->features) blocks[f.key];
      }
      const auto assignment = resolve_blocks(project);
      for (const auto& b : project.buildings) {
        auto it = assignment.find(b.id);
        if (it == assignment.end()) continue;
        auto& acc = blocks[it->second];
        ++acc.members;
        if (auto v = building_value(project, b, metric, scenario); v.value) {
          acc.sum += *v.value;
          ++acc.n;
        }
      }
      for (const auto& [key, acc] : blocks) {
        AggregateFeature f;
        f.key = key;
        f.n = acc.n;
        f.members = acc.members;
        if (acc.n > 0) f.value = acc.sum / static_cast<double>(acc.n);
        f.level = level_for(project, metric, f.value);
        result.features.push_back(std::move(f));
      }
      break;
    }
    case Granularity::Project: {
      AggregateFeature f;
      f.key = project.id;
      double sum = 0.0;
      for (const auto& b : project.buildings) {
        ++f.members;
        if (auto v = building_value(project, b, metric, scenario); v.value) {
          sum += *v.value;
          ++f.n;
        }
      }
      if (f.n > 0) f.value = sum / static_cast<double>(f.n);
      f.level = level_for(project, metric, f.value);
      result.features.push_back(std::move(f));
      break;
    }
  }
  return result;
}

std::string export_map(const Project& project, const Metric& metric, Granularity granularity) {
  const MapLayer* source = nullptr;
  if (granularity == Granularity::Block) source = project.layer(LayerKind::Blocks);
  if (granularity == Granularity::Project) source = project.layer(LayerKind::ProjectArea);
  if (granularity != Granularity::Building && !source) {
    throw Error(ErrorCode::MissingLayer, "no geometry layer for granularity " +
                                             std::string(to_string(granularity)));
  }
  const auto result = aggregate(project, metric, granularity);
  const MapLayer* parcels = project.layer(LayerKind::Parcels);

  json features = json::array();
  for (const auto& f : result.features) {
    json props = {
        {"key", f.key},
        {"metric", metric.name()},
        {"value", f.value ? json(*f.value) : json(nullptr)},
        {"level", f.level ? f.level->name : "no-data"},
        {"n", f.n},
        {"members", f.members},
        {"schema_version", kSchemaVersion},
    };
    if (metric.kind == Metric::Kind::Damage) props["scenario_id"] = metric.scenario_id;

    json geometry = nullptr;
    if (granularity == Granularity::Building) {
      const Building* b = project.find_building(*f.building_id);
      props["vi_source"] = to_string(f.vi_source);
      const LayerFeature* parcel =
          b->cadastral_key ? find_feature(parcels, b->cadastral_key->text()) : nullptr;
      if (parcel) {
        geometry = geometry_json(*parcel);
      } else if (b->coord) {
        geometry = {{"type", "Point"}, {"coordinates", {b->coord->x, b->coord->y}}};
      }
    } else if (granularity == Granularity::Block) {
      if (const LayerFeature* block = find_feature(source, f.key)) geometry = geometry_json(*block);
    } else {
      geometry = geometry_json(source->features.front());
    }
    features.push_back({{"type", "Feature"}, {"geometry", geometry}, {"properties", props}});
  }

  json doc = {
      {"type", "FeatureCollection"},
      {"schema_version", kSchemaVersion},
      {"crs_note", "planar, project-local CRS"},
      {"project_id", project.id},
      {"metric", metric.name()},
      {"granularity", to_string(granularity)},
      {"features", features},
  };
  if (metric.kind == Metric::Kind::Damage) doc["scenario_id"] = metric.scenario_id;
  return doc.dump();
}

bool BuildingFilter::empty() const {
  return !ids && !survey_kind && !edited && !typology_id && !vuln_level;
}

bool is_encuestada(const Building& b) noexcept { return b.selected_for_survey || b.surveyed; }

FilterResult filter_buildings(const Project& project, const BuildingFilter& filter) {
  if (filter.typology_id && !project.find_typology(*filter.typology_id)) {
    throw Error(ErrorCode::UnknownTypology, "no typology '" + *filter.typology_id + "'");
  }
  if (filter.vuln_level) {
    const auto& levels = vulnerability_levels();
    const bool known = std::any_of(levels.begin(), levels.end(),
                                   [&](const Level& l) { return l.name == *filter.vuln_level; });
    if (!known) throw Error(ErrorCode::UnknownLevel, "no vulnerability level '" + *filter.vuln_level + "'");
  }

  FilterResult out;
  out.total = project.buildings.size();
  for (const auto& b : project.buildings) {
    if (filter.ids && !filter.ids->count(b.id)) continue;
    if (filter.survey_kind &&
        is_encuestada(b) != (*filter.survey_kind == SurveyKind::Encuestadas)) {
      continue;
    }
    if (filter.edited && b.edited != *filter.edited) continue;
    if (filter.typology_id && b.typology_id != filter.typology_id) continue;
    if (filter.vuln_level) {
      if (!b.vi_norm || classify_vulnerability(project, *b.vi_norm).name != *filter.vuln_level) continue;
    }
    out.buildings.push_back(b);
  }
  out.filtered = out.buildings.size();
  return out;
}

}  // namespace vulnesis
