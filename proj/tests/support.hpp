#pragma once

// Fixture builders shared by the unit and acceptance suites.

#include <array>
#include <filesystem>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vulnesis/csv.hpp"
#include "vulnesis/domain.hpp"
#include "vulnesis/ingest.hpp"
#include "vulnesis/typology.hpp"
#include "vulnesis/workflow.hpp"

namespace fx {

using namespace vulnesis;

struct CadastreOptions {
  std::size_t blocks = 8;
  std::vector<std::string> walls = {"ADOBE", "BLOQUE", "MADERA", "LADRILLO"};
  std::vector<std::string> roofs = {"LAMINA", "LOSA", "TEJA"};
  std::vector<std::string> uses = {"VIV", "COM"};
  std::vector<std::string> states = {"BUENO", "REGULAR", "MALO"};
  int year_lo = 1940;
  int year_hi = 2010;
};

inline std::string block_code(std::size_t i) { return "U" + std::to_string(200 + i); }

template <typename Rng>
const std::string& pick(Rng& rng, const std::vector<std::string>& pool) {
  return pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
}

/// n rows with unique cadastral keys spread over `blocks` manzanas.
template <typename Rng>
std::vector<CadastreRow> random_rows(Rng& rng, std::size_t n, const CadastreOptions& o = {}) {
  std::vector<CadastreRow> rows;
  rows.reserve(n);
  std::vector<std::size_t> lots(o.blocks, 0);
  for (std::size_t i = 0; i < n; ++i) {
    CadastreRow r;
    const auto blk = std::uniform_int_distribution<std::size_t>(0, o.blocks - 1)(rng);
    r.key = {"01", "01", "02", block_code(blk), std::to_string(++lots[blk]), "1"};
    r.wall_type = pick(rng, o.walls);
    r.roof_type = pick(rng, o.roofs);
    r.use_type = pick(rng, o.uses);
    r.state_type = pick(rng, o.states);
    r.construction_year = std::uniform_int_distribution<int>(o.year_lo, o.year_hi)(rng);
    r.row_number = i + 2;
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::string to_csv(const std::vector<CadastreRow>& rows) {
  std::string out = csv::format_row({"dep", "centro", "distrito", "manzana", "lote", "edificacion",
                                     "pared", "techo", "uso", "estado", "anio"});
  for (const auto& r : rows) {
    out += csv::format_row({r.key.departamento, r.key.centro, r.key.distrito, r.key.manzana, r.key.lote,
                            r.key.edificacion, r.wall_type, r.roof_type, r.use_type, r.state_type,
                            std::to_string(r.construction_year)});
  }
  return out;
}

/// Master catalogue registering every raw type value used by `rows`.
inline Masters masters_for(const std::vector<CadastreRow>& rows) {
  Masters m;
  for (const auto& [category, values] : discover_types(rows)) {
    for (const auto& [code, count] : values) register_type(m.type_master(category), code, code);
  }
  return m;
}

/// Imported and reconciled project (state TypesReconciled).
inline Project reconciled_project(const std::vector<CadastreRow>& rows, const Masters& masters,
                                  const std::string& id = "p") {
  Project p;
  p.id = id;
  p.name = "Fixture " + id;
  p.date = "2026-01-01";
  import_cadastre(p, rows);
  transition(p, masters, ProjectState::TypesReconciled);
  return p;
}

/// Spreads the discovered keys over `k` typologies (round-robin) and moves
/// the project to TypologiesDefined.
inline void define_typologies(Project& p, Masters& masters, std::size_t k) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < k; ++i) {
    ids.push_back(create_typology(p, masters, "Tipologia" + std::to_string(i + 1), "").id);
  }
  std::vector<std::vector<SubTypologyKey>> buckets(k);
  std::size_t i = 0;
  for (const auto& key : unassigned_subtypologies(p)) buckets[i++ % k].push_back(key);
  for (std::size_t t = 0; t < k; ++t) {
    if (!buckets[t].empty()) assign_subtypologies(p, ids[t], buckets[t]);
  }
  transition(p, masters, ProjectState::TypologiesDefined);
}

template <typename Rng>
std::array<SurveyClass, kParameterCount> random_classes(Rng& rng) {
  std::array<SurveyClass, kParameterCount> out{};
  for (auto& c : out) c = static_cast<SurveyClass>(std::uniform_int_distribution<int>(0, 3)(rng));
  return out;
}

inline FieldRecord survey_record(BuildingId id, const std::array<SurveyClass, kParameterCount>& classes) {
  FieldRecord r;
  r.id = id;
  for (std::size_t i = 0; i < kParameterCount; ++i) r.classes[i] = classes[i];
  r.observer_id = "obs";
  r.date = "2026-02-01";
  return r;
}

inline std::array<SurveyClass, kParameterCount> uniform_classes(SurveyClass c) {
  std::array<SurveyClass, kParameterCount> out{};
  out.fill(c);
  return out;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_root(const std::string& name) {
  static std::random_device rd;
  auto dir = std::filesystem::temp_directory_path() /
             ("vulnesis-test-" + name + "-" + std::to_string(rd()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Square ring with lower-left (x, y) and side s, counter-clockwise, closed.
inline Ring square(double x, double y, double s) {
  return {{x, y}, {x + s, y}, {x + s, y + s}, {x, y + s}, {x, y}};
}

inline std::string square_feature(const std::string& key_prop, const std::string& key, double x,
                                  double y, double s) {
  std::ostringstream o;
  o << R"({"type":"Feature","properties":{")" << key_prop << R"(":")" << key
    << R"("},"geometry":{"type":"Polygon","coordinates":[[)";
  const auto ring = square(x, y, s);
  for (std::size_t i = 0; i < ring.size(); ++i) {
    o << (i ? "," : "") << "[" << ring[i].x << "," << ring[i].y << "]";
  }
  o << "]]}}";
  return o.str();
}

inline std::string collection(const std::vector<std::string>& features) {
  std::string out = R"({"type":"FeatureCollection","features":[)";
  for (std::size_t i = 0; i < features.size(); ++i) out += (i ? "," : "") + features[i];
  return out + "]}";
}

}  // namespace fx
