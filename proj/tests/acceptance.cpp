// Acceptance criteria runner. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "generators.hpp"
#include "oracles.hpp"
#include "support.hpp"
#include "vulnesis/error.hpp"
#include "vulnesis/geo.hpp"
#include "vulnesis/ingest.hpp"
#include "vulnesis/risk.hpp"
#include "vulnesis/service.hpp"
#include "vulnesis/store.hpp"
#include "vulnesis/typology.hpp"
#include "vulnesis/workflow.hpp"

using namespace vulnesis;
namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::optional<ErrorCode> code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

void vi_exactness(Outcome& o) {
  const auto t0 = Clock::now();
  const auto scale = VulnerabilityScale::benedetti_petrini();
  const double all_a = compute_vi(fx::uniform_classes(SurveyClass::A), scale);
  const double all_d = compute_vi(fx::uniform_classes(SurveyClass::D), scale);
  o.require(std::abs(all_a - 0.0) <= 1e-12, "all-A");
  o.require(std::abs(all_d - 382.5) <= 1e-12, "all-D");
  std::mt19937_64 rng(1);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto classes = fx::random_classes(rng);
    const double diff = std::abs(compute_vi(classes, scale) - oracle::vi_sum(oracle::letters_of(classes)));
    worst = std::max(worst, diff);
  }
  o.require(worst <= 1e-12, "oracle");
  const double elapsed = seconds_since(t0);
  o.require(elapsed < 1.0, "runtime");
  o.detail << "all-A=" << all_a << " all-D=" << all_d << " max|diff|=" << worst << " t=" << elapsed << "s";
}

void normalization(Outcome& o) {
  const auto scale = VulnerabilityScale::benedetti_petrini();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 382.5);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double vi = u(rng);
    worst = std::max(worst, std::abs(normalize_vi(vi, scale) - vi / 3.825));
  }
  o.require(worst <= 1e-12, "vi/3.825");
  o.detail << "1000 samples, max|diff|=" << worst;
}

void table_fidelity(Outcome& o) {
  const auto anchors = damage_anchors();
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    o.require(anchors[i].vi_norm_anchor == oracle::kTable6[i][0] && anchors[i].slope == oracle::kTable6[i][1] &&
                  anchors[i].intercept == oracle::kTable6[i][2],
              "anchor " + std::to_string(i));
  }
  const double d0 = damage_index(0, 0.2);
  const double d100 = damage_index(100, 0.2);
  const double onset = damage_bounds(100).onset_ag;
  o.require(std::abs(d0 - 0.29692) <= 1e-9, "d(0,0.2)");
  o.require(d100 == 1.0, "d(100,0.2)");
  o.require(std::abs(onset - 0.1231 / 8.6154) <= 1e-9, "onset(100)");
  o.detail << "11 anchors verbatim, d(0,0.2)=" << d0 << " d(100,0.2)=" << d100 << " onset(100)=" << onset;
}

void damage_properties(Outcome& o) {
  const auto t0 = Clock::now();
  constexpr int kAg = 1000;
  std::vector<std::vector<double>> grid(101, std::vector<double>(kAg + 1));
  bool bounded = true, monotone_ag = true;
  for (int v = 0; v <= 100; ++v) {
    for (int a = 0; a <= kAg; ++a) {
      const double d = damage_index(v, a / 1000.0);
      grid[v][a] = d;
      bounded = bounded && d >= 0.0 && d <= 1.0;
      if (a > 0) monotone_ag = monotone_ag && d >= grid[v][a - 1];
    }
  }
  bool monotone_anchor = true;
  for (int v = 10; v <= 100; v += 10) {
    for (int a = 0; a <= kAg; ++a) monotone_anchor = monotone_anchor && grid[v][a] >= grid[v - 10][a];
  }
  // Continuity at each grid point: the one-sided limits of d(., ag) agree.
  double gap = 0.0;
  constexpr double h = 1e-9;
  for (int v = 0; v <= 100; ++v) {
    for (int a = 0; a <= kAg; ++a) {
      const double ag = a / 1000.0;
      const double left = v > 0 ? damage_index(v - h, ag) : grid[v][a];
      const double right = v < 100 ? damage_index(v + h, ag) : grid[v][a];
      gap = std::max({gap, std::abs(left - grid[v][a]), std::abs(right - grid[v][a])});
    }
  }
  const double elapsed = seconds_since(t0);
  o.require(bounded, "0<=d<=1");
  o.require(monotone_ag, "non-decreasing in ag");
  o.require(monotone_anchor, "non-decreasing across anchors");
  o.require(gap < 1e-6, "continuity");
  o.require(elapsed < 5.0, "runtime");
  o.detail << "101x1001 grid, max continuity gap=" << gap << " t=" << elapsed << "s";
}

std::map<oracle::GroupKey, std::size_t> library_groups(const Project& p) {
  std::map<oracle::GroupKey, std::size_t> out;
  for (const auto& c : subtypology_counts(p)) {
    out[{c.key.wall_type, c.key.roof_type, c.key.use_type, c.key.state_type, c.key.pre_cutoff}] = c.count;
  }
  return out;
}

void subtypology_discovery(Outcome& o) {
  std::mt19937_64 rng(3);
  int matched = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto rows = fx::random_rows(rng, 200);
    const Masters m = fx::masters_for(rows);
    const auto expected = oracle::group_by_subtypology(rows, Project{}.cutoff_year);
    const bool same = library_groups(fx::reconciled_project(rows, m)) == expected;
    std::shuffle(rows.begin(), rows.end(), rng);
    const bool permuted = library_groups(fx::reconciled_project(rows, m)) == expected;
    o.require(same, "group-by trial " + std::to_string(trial));
    o.require(permuted, "permutation trial " + std::to_string(trial));
    matched += same && permuted;
  }
  o.detail << matched << "/100 fixtures match and are permutation invariant";
}

void sampling(Outcome& o) {
  std::mt19937_64 rng(4);
  int good = 0;
  for (int trial = 0; trial < 100; ++trial) {
    fx::CadastreOptions opts;
    opts.blocks = std::uniform_int_distribution<std::size_t>(1, 10)(rng);
    const auto n = std::uniform_int_distribution<std::size_t>(10, 120)(rng);
    auto rows = fx::random_rows(rng, n, opts);
    Masters masters = fx::masters_for(rows);
    Project p = fx::reconciled_project(rows, masters);
    fx::define_typologies(p, masters, std::uniform_int_distribution<std::size_t>(1, 4)(rng));

    std::map<std::string, std::vector<const Building*>> members;
    for (const auto& b : p.buildings) {
      if (b.typology_id) members[*b.typology_id].push_back(&b);
    }
    SampleSpec spec;
    spec.seed = rng();
    if (trial % 2) {
      spec.mode = SampleSpec::Mode::PerTypologyPercent;
      spec.value = std::uniform_real_distribution<double>(1, 100)(rng);
    } else {
      spec.mode = SampleSpec::Mode::PerTypologyCount;
      for (const auto& [tid, list] : members) {
        spec.per_typology[tid] = std::uniform_int_distribution<std::size_t>(1, list.size())(rng);
      }
    }
    const auto quotas = sample_quotas(p, spec);
    Project again = p;
    const auto first = sample(p, spec);
    const auto second = sample(again, spec);
    bool ok = first.selected == second.selected;
    for (const auto& [tid, list] : members) {
      std::set<std::string> candidate_blocks;
      for (const auto* b : list) candidate_blocks.insert(b->cadastral_key->manzana);
      std::set<std::string> covered;
      std::size_t chosen = 0;
      for (const auto* b : list) {
        if (first.selected.count(b->id)) {
          ++chosen;
          covered.insert(b->cadastral_key->manzana);
        }
      }
      const std::size_t quota = quotas.count(tid) ? quotas.at(tid) : 0;
      ok = ok && chosen == std::min(quota, list.size());
      ok = ok && covered.size() == std::min(quota, candidate_blocks.size());
    }
    o.require(ok, "trial " + std::to_string(trial));
    good += ok;
  }
  o.detail << good << "/100 fixtures reproducible with exact size and block coverage";
}

void propagation(Outcome& o) {
  std::mt19937_64 rng(5);
  int good = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto rows = fx::random_rows(rng, std::uniform_int_distribution<std::size_t>(2, 49)(rng));
    Masters masters = fx::masters_for(rows);
    Project p = fx::reconciled_project(rows, masters);
    fx::define_typologies(p, masters, std::uniform_int_distribution<std::size_t>(1, 4)(rng));
    SampleSpec all;
    all.value = 100;
    sample(p, all);
    transition(p, masters, ProjectState::Sampled);
    transition(p, masters, ProjectState::FieldWork);
    std::vector<BuildingId> ids;
    for (const auto& b : p.buildings) ids.push_back(b.id);
    std::shuffle(ids.begin(), ids.end(), rng);
    const auto k = std::uniform_int_distribution<std::size_t>(0, ids.size())(rng);
    for (std::size_t i = 0; i < k; ++i) {
      ingest_field_data(p, masters, fx::survey_record(ids[i], fx::random_classes(rng)));
    }
    const Project before = p;
    const auto expected = oracle::propagation(before);
    if (k > 0) propagate_vi(p);
    bool ok = true;
    for (const auto& b : p.buildings) {
      const auto& want = expected.at(b.id);
      ok = ok && b.vi_norm.has_value() == want.has_value();
      if (ok && want) ok = std::abs(*b.vi_norm - *want) <= 1e-12 * std::max(1.0, *want);
      const Building* old = before.find_building(b.id);
      if (old->surveyed) ok = ok && b == *old;
    }
    o.require(ok, "trial " + std::to_string(trial));
    good += ok;
  }
  o.detail << good << "/100 instances match the group-by-mean oracle, surveyed untouched";
}

void aggregation(Outcome& o) {
  std::mt19937_64 rng(6);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Project p;
    p.id = "agg";
    MapLayer layer;
    layer.kind = LayerKind::Blocks;
    layer.key_property = "MZ";
    const int nblocks = std::uniform_int_distribution<int>(1, 8)(rng);
    for (int i = 0; i < nblocks; ++i) layer.features.push_back({fx::block_code(i), {{fx::square(20.0 * i, 0, 10)}}});
    p.layers[LayerKind::Blocks] = layer;
    const int n = std::uniform_int_distribution<int>(1, 80)(rng);
    for (int i = 0; i < n; ++i) {
      const int blk = std::uniform_int_distribution<int>(0, nblocks - 1)(rng);
      Building b;
      b.id = i + 1;
      b.cadastral_key = CadastralKey{"01", "01", "01", fx::block_code(blk), std::to_string(i), "1"};
      b.subtypology = SubTypologyKey{"W", "R", "U", "S", false};
      if (std::uniform_int_distribution<int>(0, 1)(rng)) b.coord = Point{20.0 * blk + 5, 5};
      if (std::uniform_int_distribution<int>(0, 4)(rng)) {
        b.vi_norm = std::uniform_real_distribution<double>(0, 100)(rng);
        b.vi = *b.vi_norm * 3.825;
        b.vi_source = ViSource::Direct;
      }
      p.buildings.push_back(b);
    }
    const auto blocks = aggregate(p, Metric::vulnerability(), Granularity::Block);
    const auto project = aggregate(p, Metric::vulnerability(), Granularity::Project);
    double weighted = 0.0;
    std::size_t count = 0;
    for (const auto& f : blocks.features) {
      if (!f.value) continue;
      weighted += *f.value * static_cast<double>(f.n);
      count += f.n;
    }
    const auto& whole = project.features.at(0);
    if (count == 0) {
      o.require(!whole.value, "empty project mean");
    } else {
      o.require(whole.n == count && whole.value.has_value(), "project count");
      if (whole.value) worst = std::max(worst, std::abs(*whole.value - weighted / count));
    }
  }
  o.require(worst <= 1e-9, "weighted mean");

  int agree = 0;
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = std::uniform_int_distribution<int>(3, 12)(rng);
    std::vector<double> angles(n);
    for (auto& a : angles) a = std::uniform_real_distribution<double>(0, 2 * M_PI)(rng);
    std::sort(angles.begin(), angles.end());
    Ring outer;
    for (double a : angles) {
      const double r = std::uniform_real_distribution<double>(2.0, 5.0)(rng);
      outer.push_back({5 + r * std::cos(a), 5 + r * std::sin(a)});
    }
    outer.push_back(outer.front());
    std::vector<Ring> rings = {outer};
    if (trial % 3 == 0) rings.push_back(fx::square(4.5, 4.5, 1.0));
    const Point pt{u(rng), u(rng)};
    std::vector<std::vector<std::pair<double, double>>> pairs;
    for (const auto& r : rings) {
      auto& v = pairs.emplace_back();
      for (const auto& q : r) v.emplace_back(q.x, q.y);
    }
    agree += point_in_polygon(pt, rings) == oracle::ray_cast(pt.x, pt.y, pairs);
  }
  o.require(agree == 1000, "point_in_polygon");
  o.detail << "100 fixtures max|diff|=" << worst << ", point_in_polygon " << agree << "/1000";
}

void workflow(Outcome& o) {
  int legal = 0, consistent = 0;
  for (auto from : kAllStates) {
    for (auto to : kAllStates) {
      Project p;
      p.state = from;
      const bool accepted = !code_of([&] { advance_state(p, to); }).has_value();
      legal += accepted;
      consistent += accepted == is_legal_transition(from, to);
    }
  }
  o.require(consistent == 49, "advance_state agrees with is_legal_transition");
  o.require(legal == 7, "exactly 7 accepted");

  Project p;
  p.id = "wf";
  define_scenario(p, "first", 0.25);
  const auto dup = code_of([&] { define_scenario(p, "second", 0.250); });
  o.require(dup == ErrorCode::DuplicateAcceleration, "duplicate ag");

  Building b;
  b.id = 1;
  b.kind = BuildingKind::Independent;
  b.coord = Point{1, 1};
  b.survey = SurveyRecord{};
  b.survey->classes = fx::uniform_classes(SurveyClass::B);
  b.surveyed = true;
  b.vi = compute_vi(b.survey->classes, p.scale);
  b.vi_norm = normalize_vi(*b.vi, p.scale);
  b.vi_source = ViSource::Direct;
  p.buildings.push_back(b);
  p.layers[LayerKind::ProjectArea] = MapLayer{LayerKind::ProjectArea, "name", {{"area", {{fx::square(0, 0, 5)}}}}};
  auto scale = p.scale;
  scale.rows[0].w = 0.5;
  set_scale(p, scale);
  o.require(p.stale, "stale after scale change");
  o.require(code_of([&] { aggregate(p, Metric::vulnerability(), Granularity::Project); }) == ErrorCode::StaleProject,
            "aggregate blocked");
  o.require(code_of([&] { export_map(p, Metric::vulnerability(), Granularity::Building); }) == ErrorCode::StaleProject,
            "export blocked");
  recompute_all(p);
  o.require(!p.stale, "recompute clears stale");
  o.require(!code_of([&] { export_map(p, Metric::vulnerability(), Granularity::Project); }), "export after recompute");
  o.detail << "49 pairs, " << legal << " accepted (the one-step chain has " << legal
           << " edges), duplicate ag and stale guards enforced";
}

void persistence(Outcome& o) {
  const auto root = fx::temp_root("acceptance-store");
  std::mt19937_64 rng(9);
  int same = 0;
  for (int i = 0; i < 100; ++i) {
    const Project p = gen::project(rng, "p" + std::to_string(i));
    save_project(p, root);
    same += load_project(root, p.id) == p;
  }
  o.require(same == 100, "round trip");
  const auto file = root / "p0" / "buildings.jsonl";
  std::string text = read_file(file);
  std::string line = "{\"id\":999,\"kind\":\"Warehouse\",\"schema_version\":1}\n";
  write_file_atomic(file, text + line);
  const auto rejected = code_of([&] { load_project(root, "p0"); });
  o.require(rejected == ErrorCode::UnknownKind, "unknown discriminator");
  fs::remove_all(root);
  o.detail << same << "/100 projects identical after save/load, unknown kind -> "
           << (rejected ? std::string(to_string(*rejected)) : "accepted");
}

void end_to_end(Outcome& o) {
  const auto root = fx::temp_root("acceptance-e2e");
  std::mt19937_64 rng(10);
  fx::CadastreOptions opts;
  opts.blocks = 68;
  const auto rows = fx::random_rows(rng, 2720, opts);
  const std::string csv = fx::to_csv(rows);
  std::vector<std::string> block_features;
  for (std::size_t i = 0; i < opts.blocks; ++i) {
    block_features.push_back(fx::square_feature("MZ", fx::block_code(i), 12.0 * (i % 10), 12.0 * (i / 10), 10));
  }
  const std::string blocks = fx::collection(block_features);
  const std::string area = fx::collection({fx::square_feature("name", "area", -5, -5, 200)});

  const auto t0 = Clock::now();
  Workbench wb(root);
  const std::string id = "desk";
  wb.create_project({{"id", id}, {"name", "Desk scale"}, {"date", "2026-06-01"}});
  const json imported = wb.import_cadastre(id, csv);
  o.require(imported["buildings"] == 2720, "import");
  const json types = wb.types(id);
  for (const auto& [category, values] : types["unmatched"].items()) {
    for (const auto& value : values) {
      wb.type_action(id, {{"action", "register"}, {"category", category}, {"code", value}, {"scope", "system"}});
    }
  }
  wb.set_state(id, {{"target", "TypesReconciled"}});
  const json subs = wb.subtypologies(id);
  std::vector<std::vector<std::string>> buckets(4);
  std::size_t i = 0;
  for (const auto& s : subs["subtypologies"]) buckets[i++ % 4].push_back(s["key"]);
  for (std::size_t t = 0; t < 4; ++t) {
    const json created = wb.create_typology(id, {{"name", "Tipologia" + std::to_string(t + 1)}});
    wb.assign_keys(id, created["id"], {{"keys", buckets[t]}});
  }
  wb.set_state(id, {{"target", "TypologiesDefined"}});
  const json sampled = wb.sample(id, {{"mode", "TotalPercent"}, {"value", 10}, {"seed", 2720}});
  wb.set_state(id, {{"target", "Sampled"}});
  const std::string form_a = wb.field_forms(id, 'A');
  const std::string form_b = wb.field_forms(id, 'B');
  wb.set_state(id, {{"target", "FieldWork"}});
  wb.load_cartography(id, LayerKind::Blocks, "MZ", blocks);
  wb.load_cartography(id, LayerKind::ProjectArea, "name", area);

  std::string batch = "id,x,y,photo,p1,p2,p3,p4,p5,p6,p7,p8,p9,p10,p11\n";
  for (const auto& sid : sampled["selected"]) {
    std::string line = std::to_string(sid.get<BuildingId>()) + ",,,";
    for (auto c : fx::random_classes(rng)) line += "," + std::string(to_string(c));
    batch += line + "\n";
  }
  const json surveyed = wb.field_data_csv(id, batch);
  const json propagated = wb.propagate(id);
  std::vector<std::string> scenario_ids;
  for (double ag : {0.1, 0.2, 0.3, 0.4}) {
    scenario_ids.push_back(wb.define_scenario(id, {{"ag", ag}})["id"]);
  }
  std::size_t map_bytes = 0;
  for (auto g : {Granularity::Building, Granularity::Block, Granularity::Project}) {
    map_bytes += wb.map(id, Metric::vulnerability(), g).size();
    for (const auto& sid : scenario_ids) map_bytes += wb.map(id, Metric::damage(sid), g).size();
  }
  const double elapsed = seconds_since(t0);

  const std::size_t selected = sampled["selected"].size();
  o.require(selected == 272, "10% sample");
  o.require(surveyed["applied"] == selected && surveyed["errors"].empty(), "survey batch");
  o.require(propagated["propagated"].get<std::size_t>() + selected == 2720, "every building valued");
  o.require(!form_a.empty() && !form_b.empty(), "forms");
  o.require(elapsed < 10.0, "runtime");
  fs::remove_all(root);
  o.detail << "2720 buildings, " << selected << " surveyed, " << propagated["propagated"] << " propagated, 4 scenarios, 15 maps ("
           << map_bytes / 1024 << " KiB), t=" << elapsed << "s";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"VI engine exactness", vi_exactness},
      {"Normalization", normalization},
      {"Damage table fidelity", table_fidelity},
      {"Damage properties", damage_properties},
      {"Subtypology discovery", subtypology_discovery},
      {"Sampling", sampling},
      {"Propagation", propagation},
      {"Aggregation", aggregation},
      {"Workflow", workflow},
      {"Persistence round-trip", persistence},
      {"End-to-end desk scale", end_to_end},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    std::printf("%s  %-24s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.str().c_str());
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
