#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "support.hpp"
#include "vulnesis/csv.hpp"
#include "vulnesis/error.hpp"
#include "vulnesis/ingest.hpp"
#include "vulnesis/workflow.hpp"

using namespace vulnesis;

namespace {

const std::string kHeader = "dep,centro,distrito,manzana,lote,edificacion,pared,techo,uso,estado,anio\n";

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::BadRequest;
}

std::map<oracle::GroupKey, std::size_t> library_groups(const Project& p) {
  std::map<oracle::GroupKey, std::size_t> out;
  for (const auto& c : subtypology_counts(p)) {
    out[{c.key.wall_type, c.key.roof_type, c.key.use_type, c.key.state_type, c.key.pre_cutoff}] = c.count;
  }
  return out;
}

}  // namespace

TEST_CASE("parse_cadastre examples") {
  auto ok = parse_cadastre(kHeader + "01,01,01,U206,1,1,BLOQUE,LAMINA,VIV,BUENO,1980\n"
                                     "01,01,01,U206,2,1,BLOQUE,LAMINA,VIV,BUENO,1990\n"
                                     "01,01,01,U207,1,1,ADOBE,TEJA,VIV,MALO,1950\n");
  CHECK(ok.rows.size() == 3);
  CHECK(ok.errors.empty());
  CHECK(ok.rows[2].construction_year == 1950);
  CHECK(ok.rows[0].key.manzana == "U206");

  auto bad_year = parse_cadastre(kHeader + "01,01,01,U206,1,1,BLOQUE,LAMINA,VIV,BUENO,19x2\n");
  REQUIRE(bad_year.errors.size() == 1);
  CHECK(bad_year.errors[0].reason == "BadYear");
  CHECK(bad_year.errors[0].row_number == 2);

  auto dup = parse_cadastre(kHeader + "01,01,01,U206,1,1,BLOQUE,LAMINA,VIV,BUENO,1980\n"
                                      "01,01,01,U206,1,1,ADOBE,LAMINA,VIV,BUENO,1980\n");
  CHECK(dup.rows.size() == 1);
  REQUIRE(dup.errors.size() == 1);
  CHECK(dup.errors[0].reason == "DuplicateKey");
  CHECK(dup.errors[0].row_number == 3);

  auto missing = parse_cadastre(kHeader + "01,01,,U206,1,1,BLOQUE,LAMINA,VIV,BUENO,1980\n"
                                          "01,01,01,U206,1,1,,LAMINA,VIV,BUENO,1980\n"
                                          "01,01\n");
  REQUIRE(missing.errors.size() == 3);
  CHECK(missing.errors[0].reason == "MissingKeyField");
  CHECK(missing.errors[1].reason == "MissingTypeField");
  CHECK(missing.errors[2].reason == "FieldCount");
}

TEST_CASE("parse_cadastre needs every mapped column") {
  CHECK(code_of([] { parse_cadastre("dep,centro\n1,2\n"); }) == ErrorCode::MissingColumn);
  ColumnMap m;
  m.wall = "WALL";
  CHECK(code_of([&] { parse_cadastre(kHeader, m); }) == ErrorCode::MissingColumn);
  std::string renamed = "dep,centro,distrito,manzana,lote,edificacion,WALL,techo,uso,estado,anio\n"
                        "01,01,01,U1,1,1,X,Y,Z,W,2000\n";
  auto parsed = parse_cadastre(renamed, m);
  REQUIRE(parsed.rows.size() == 1);
  CHECK(parsed.rows[0].wall_type == "X");
}

TEST_CASE("parse_cadastre is total over arbitrary bodies") {
  std::mt19937_64 rng(99);
  const std::string alphabet = "0123456789,\"\n\r ;abcU-x";
  for (int trial = 0; trial < 300; ++trial) {
    std::string body;
    const auto len = std::uniform_int_distribution<int>(0, 400)(rng);
    for (int i = 0; i < len; ++i) {
      body += alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
    }
    if (trial % 3 == 0) {
      for (int i = 0; i < 5; ++i) body += "\n01,01,01,U" + std::to_string(i) + ",1,1,A,B,C,D,19" + std::to_string(i);
    }
    const std::string text = kHeader + body;
    CadastreParse parsed;
    REQUIRE_NOTHROW(parsed = parse_cadastre(text));
    CHECK(parsed.rows.size() + parsed.errors.size() == csv::read(text).size() - 1);
  }
}

TEST_CASE("discover_types counts per category") {
  auto parsed = parse_cadastre(kHeader + "01,01,01,U1,1,1,block,L,V,B,1980\n"
                                         "01,01,01,U1,2,1,block,L,V,B,1980\n"
                                         "01,01,01,U1,3,1,wood,L,V,B,1980\n");
  const auto counts = discover_types(parsed.rows);
  CHECK(counts.at(TypeCategory::Wall) == std::map<std::string, std::size_t>{{"block", 2}, {"wood", 1}});
  CHECK(counts.at(TypeCategory::Roof).size() == 1);

  std::mt19937_64 rng(1);
  const auto rows = fx::random_rows(rng, 2720);
  for (const auto& [category, values] : discover_types(rows)) {
    std::size_t sum = 0;
    for (const auto& [v, n] : values) sum += n;
    CHECK(sum == 2720);
  }
}

TEST_CASE("reconcile, register and alias") {
  Masters m;
  register_type(m.type_master(TypeCategory::Wall), "BLOQUE", "concrete block");
  CHECK(code_of([&] { register_type(m.type_master(TypeCategory::Wall), "BLOQUE", "dup"); }) ==
        ErrorCode::DuplicateCode);
  CHECK(code_of([&] { add_alias(m.type_master(TypeCategory::Wall), "x", "NOPE"); }) ==
        ErrorCode::UnknownCode);
  add_alias(m.type_master(TypeCategory::Wall), "bloke", "BLOQUE");
  CHECK(m.type_master(TypeCategory::Wall).resolve("bloke") == "BLOQUE");

  TypeCounts discovered;
  discovered[TypeCategory::Wall] = {{"BLOQUE", 1}, {"bloke", 1}, {"tapial", 1}};
  auto report = reconcile_types(discovered, m);
  CHECK(report.matched.at(TypeCategory::Wall).at("BLOQUE") == "BLOQUE");
  CHECK(report.matched.at(TypeCategory::Wall).at("bloke") == "BLOQUE");
  CHECK(report.unmatched.at(TypeCategory::Wall) == std::vector<std::string>{"tapial"});
  CHECK_FALSE(report.complete());

  register_type(m.type_master(TypeCategory::Wall), "TAPIAL", "rammed earth");
  add_alias(m.type_master(TypeCategory::Wall), "tapial", "TAPIAL");
  CHECK(reconcile_types(discovered, m).complete());
}

TEST_CASE("reconcile converges after resolving each unmatched value once") {
  std::mt19937_64 rng(2);
  const auto rows = fx::random_rows(rng, 300);
  Masters m;
  const auto discovered = discover_types(rows);
  auto report = reconcile_types(discovered, m);
  for (const auto& [category, values] : report.unmatched) {
    for (const auto& v : values) register_type(m.type_master(category), v, v);
  }
  CHECK(reconcile_types(discovered, m).complete());
}

TEST_CASE("unreconciled types block leaving Created") {
  auto parsed = parse_cadastre(kHeader + "01,01,01,U1,1,1,tapial,L,V,B,1980\n");
  Project p;
  import_cadastre(p, parsed.rows);
  Masters m;
  CHECK(code_of([&] { transition(p, m, ProjectState::TypesReconciled); }) == ErrorCode::UnreconciledTypes);
  CHECK(p.state == ProjectState::Created);
}

TEST_CASE("project aliases resolve ahead of the master") {
  auto parsed = parse_cadastre(kHeader + "01,01,01,U1,1,1,bloke,L,V,B,1980\n");
  Masters m = fx::masters_for(parsed.rows);
  m.type_master(TypeCategory::Wall).entries.clear();
  register_type(m.type_master(TypeCategory::Wall), "BLOQUE", "block");
  Project p;
  import_cadastre(p, parsed.rows);
  add_project_alias(p, m, TypeCategory::Wall, "bloke", "BLOQUE");
  transition(p, m, ProjectState::TypesReconciled);
  CHECK(p.buildings[0].subtypology->wall_type == "BLOQUE");
}

TEST_CASE("subtypology discovery examples") {
  auto parsed = parse_cadastre(kHeader + "01,01,01,U1,1,1,A,B,C,D,1960\n"
                                         "01,01,01,U1,2,1,A,B,C,D,1961\n"
                                         "01,01,01,U1,3,1,A,B,C,D,1962\n");
  Masters m = fx::masters_for(parsed.rows);
  Project p = fx::reconciled_project(parsed.rows, m);
  auto counts = subtypology_counts(p);
  REQUIRE(counts.size() == 1);
  CHECK(counts[0].count == 3);

  auto split = parse_cadastre(kHeader + "01,01,01,U1,1,1,A,B,C,D,1970\n"
                                        "01,01,01,U1,2,1,A,B,C,D,1980\n");
  Project q = fx::reconciled_project(split.rows, fx::masters_for(split.rows));
  counts = subtypology_counts(q);
  REQUIRE(counts.size() == 2);
  CHECK(counts[0].key.pre_cutoff != counts[1].key.pre_cutoff);
  for (const auto& b : q.buildings) CHECK(b.subtypology.has_value());
}

TEST_CASE("subtypology discovery equals group-by and ignores row order") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    auto rows = fx::random_rows(rng, 200);
    const Masters m = fx::masters_for(rows);
    const Project p = fx::reconciled_project(rows, m);
    const auto expected = oracle::group_by_subtypology(rows, p.cutoff_year);
    CHECK(library_groups(p) == expected);
    std::shuffle(rows.begin(), rows.end(), rng);
    CHECK(library_groups(fx::reconciled_project(rows, m)) == expected);
  }
}

TEST_CASE("cartography loading and match report") {
  Project p;
  auto parsed = parse_cadastre(kHeader + "01,01,01,U206,1,1,A,B,C,D,1960\n"
                                         "01,01,01,U207,1,1,A,B,C,D,1960\n");
  import_cadastre(p, parsed.rows);

  auto area = load_cartography(p, fx::collection({fx::square_feature("name", "town", 0, 0, 1)}),
                               LayerKind::ProjectArea, "name");
  CHECK(area.feature_count == 1);
  CHECK(p.layer(LayerKind::ProjectArea)->features.size() == 1);

  auto blocks = load_cartography(p, fx::collection({fx::square_feature("MZ", "U207", 0, 0, 1),
                                                    fx::square_feature("MZ", "U999", 1, 0, 1)}),
                                 LayerKind::Blocks, "MZ");
  CHECK(blocks.missing_in_layer == std::vector<std::string>{"U206"});
  CHECK(blocks.missing_in_buildings == std::vector<std::string>{"U999"});

  CHECK(code_of([&] {
          load_cartography(p, R"({"type":"Feature"})", LayerKind::Blocks, "MZ");
        }) == ErrorCode::NotAFeatureCollection);
  CHECK(code_of([&] {
          load_cartography(p, fx::collection({fx::square_feature("other", "U1", 0, 0, 1)}),
                           LayerKind::Blocks, "MZ");
        }) == ErrorCode::MissingKeyProperty);
  CHECK(code_of([&] {
          load_cartography(p, R"({"type":"FeatureCollection","features":[{"type":"Feature","properties":{"k":"a"},"geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[0,0]]]}}]})",
                           LayerKind::Blocks, "k");
        }) == ErrorCode::DegenerateRing);
  CHECK_THROWS_AS(load_cartography(p,
                                   fx::collection({fx::square_feature("name", "a", 0, 0, 1),
                                                   fx::square_feature("name", "b", 2, 0, 1)}),
                                   LayerKind::ProjectArea, "name"),
                  Error);
}

TEST_CASE("multipolygon features keep every part") {
  auto layer = parse_layer(R"({"type":"FeatureCollection","features":[{"type":"Feature","properties":{"k":7},
      "geometry":{"type":"MultiPolygon","coordinates":[[[[0,0],[1,0],[1,1],[0,0]]],[[[5,5],[6,5],[6,6],[5,5]]]]}}]})",
                           LayerKind::Blocks, "k");
  REQUIRE(layer.features.size() == 1);
  CHECK(layer.features[0].key == "7");
  CHECK(layer.features[0].polygons.size() == 2);
}

namespace {

struct FieldFixture {
  Masters masters;
  Project project;
};

FieldFixture field_fixture() {
  std::mt19937_64 rng(4);
  auto rows = fx::random_rows(rng, 20);
  FieldFixture f{fx::masters_for(rows), {}};
  f.project = fx::reconciled_project(rows, f.masters);
  fx::define_typologies(f.project, f.masters, 2);
  SampleSpec spec;
  spec.mode = SampleSpec::Mode::PerTypologyPercent;
  spec.value = 50;
  sample(f.project, spec);
  transition(f.project, f.masters, ProjectState::Sampled);
  transition(f.project, f.masters, ProjectState::FieldWork);
  return f;
}

}  // namespace

TEST_CASE("field data: coordinates, full survey and new independent buildings") {
  auto [masters, p] = field_fixture();

  FieldRecord coords;
  coords.id = 7;
  coords.coord = Point{10, 20};
  coords.photo_id = "P0007";
  auto r = ingest_field_data(p, masters, coords);
  CHECK_FALSE(r.surveyed);
  CHECK(p.find_building(7)->coord == Point{10, 20});
  CHECK(p.find_building(7)->photo_id == "P0007");
  CHECK_FALSE(p.find_building(7)->surveyed);

  r = ingest_field_data(p, masters, fx::survey_record(14, fx::uniform_classes(SurveyClass::D)));
  CHECK(r.surveyed);
  const Building* b = p.find_building(14);
  CHECK(b->vi == 382.5);
  CHECK(b->vi_norm == 100.0);
  CHECK(b->vi_source == ViSource::Direct);
  CHECK(p.find_typology(*b->typology_id)->stats.surveyed == 1);

  FieldRecord fresh = fx::survey_record(0, fx::uniform_classes(SurveyClass::A));
  fresh.id.reset();
  r = ingest_field_data(p, masters, fresh);
  CHECK(r.created);
  const Building* nb = p.find_building(r.id);
  REQUIRE(nb);
  CHECK(nb->kind == BuildingKind::Independent);
  CHECK(nb->vi == 0.0);
  CHECK_FALSE(nb->subtypology.has_value());
  CHECK_FALSE(nb->typology_id.has_value());
}

TEST_CASE("field data errors leave the project untouched") {
  auto [masters, p] = field_fixture();
  const Project before = p;
  CHECK(code_of([&] { ingest_field_data(p, masters, fx::survey_record(999, fx::uniform_classes(SurveyClass::A))); }) ==
        ErrorCode::UnknownBuilding);
  auto partial = fx::survey_record(3, fx::uniform_classes(SurveyClass::A));
  partial.classes[10].reset();
  CHECK(code_of([&] { ingest_field_data(p, masters, partial); }) == ErrorCode::IncompleteSurvey);
  auto negative = fx::survey_record(3, fx::uniform_classes(SurveyClass::A));
  negative.raw.floors = -1;
  CHECK(code_of([&] { ingest_field_data(p, masters, negative); }) == ErrorCode::OutOfRange);
  CHECK(p == before);

  Project early;
  CHECK(code_of([&] { ingest_field_data(early, masters, FieldRecord{}); }) == ErrorCode::WrongState);
}

TEST_CASE("field data is idempotent for addressed records") {
  auto [masters, p] = field_fixture();
  auto rec = fx::survey_record(5, fx::uniform_classes(SurveyClass::C));
  rec.coord = Point{1, 2};
  rec.wall_type = "ADOBE";
  ingest_field_data(p, masters, rec);
  const Project once = p;
  ingest_field_data(p, masters, rec);
  CHECK(p == once);
}

TEST_CASE("cadastral corrections re-tag and mark stale") {
  auto [masters, p] = field_fixture();
  Building* b = p.find_building(2);
  const auto old_key = *b->subtypology;
  FieldRecord fix;
  fix.id = 2;
  fix.construction_year = old_key.pre_cutoff ? 2000 : 1950;
  auto r = ingest_field_data(p, masters, fix);
  CHECK(r.corrected);
  CHECK(r.retagged);
  b = p.find_building(2);
  CHECK(b->edited);
  CHECK(b->subtypology->pre_cutoff != old_key.pre_cutoff);
  CHECK(p.stale);

  FieldRecord unknown;
  unknown.id = 3;
  unknown.wall_type = "NOT-A-TYPE";
  CHECK_THROWS_AS(ingest_field_data(p, masters, unknown), Error);
}

TEST_CASE("field data CSV parsing") {
  auto parsed = parse_field_data("id,x,y,photo,p1,p2,p3,p4,p5,p6,p7,p8,p9,p10,p11,N,h,observer\n"
                                 "4,1.5,2.5,IMG,A,B,C,D,A,B,C,D,A,B,C,2,3.1,ana\n"
                                 "NEW,,,,,,,,,,,,,,,,,\n"
                                 "x7,,,,,,,,,,,,,,,,,\n"
                                 "5,,,,Q,,,,,,,,,,,,,\n");
  REQUIRE(parsed.records.size() == 2);
  CHECK(parsed.record_rows == std::vector<std::size_t>{2, 3});
  CHECK(parsed.records[0].id == 4);
  CHECK(parsed.records[0].coord == Point{1.5, 2.5});
  CHECK(parsed.records[0].classes[3] == SurveyClass::D);
  CHECK(parsed.records[0].raw.floors == 2.0);
  CHECK(parsed.records[0].raw.storey_height == 3.1);
  CHECK(parsed.records[0].observer_id == "ana");
  CHECK_FALSE(parsed.records[1].id.has_value());
  REQUIRE(parsed.errors.size() == 2);
  CHECK(parsed.errors[0].row_number == 4);
  CHECK(parsed.errors[1].reason == "BadClass");
}
