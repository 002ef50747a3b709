import json
import math

import pytest

import vulnesis


def test_vi_bounds_and_normalization():
    assert vulnesis.compute_vi(["A"] * 11) == 0.0
    assert vulnesis.compute_vi(["D"] * 11) == pytest.approx(382.5, abs=1e-12)
    assert vulnesis.normalize_vi(191.25) == pytest.approx(50.0, abs=1e-12)
    with pytest.raises(vulnesis.VulnesisError):
        vulnesis.compute_vi(["A"] * 10)


def test_custom_scale_round_trip():
    scale = json.loads(vulnesis.default_scale())
    assert len(scale["rows"]) == 11
    assert vulnesis.compute_vi(["D"] * 11, json.dumps(scale)) == pytest.approx(382.5)


def test_damage_curves():
    assert vulnesis.damage_curve(0) == (2.0786, 0.1188)
    assert vulnesis.damage_index(0, 0.2) == pytest.approx(0.29692, abs=1e-12)
    assert vulnesis.damage_index(100, 0.2) == 1.0
    onset, collapse = vulnesis.damage_bounds(100)
    assert onset == pytest.approx(0.1231 / 8.6154, abs=1e-12)
    assert collapse == pytest.approx(1.1231 / 8.6154, abs=1e-12)


def test_classify_and_pip():
    assert vulnesis.classify(33.3, [33.3, 66.6], ["baja", "media", "alta"]) == "media"
    square = [[(0, 0), (1, 0), (1, 1), (0, 1), (0, 0)]]
    assert vulnesis.point_in_polygon((0.5, 0.5), square)
    assert vulnesis.point_in_polygon((1.0, 0.5), square)
    assert not vulnesis.point_in_polygon((1.5, 0.5), square)


def test_workbench_pipeline(tmp_path):
    wb = vulnesis.Workbench(tmp_path)
    assert wb.list_projects() == []
    wb.create_project({"id": "demo", "name": "Demo", "date": "2026-05-01"})
    csv = "dep,centro,distrito,manzana,lote,edificacion,pared,techo,uso,estado,anio\n" + "".join(
        f"01,01,02,U20{i % 2},{i},1,ADOBE,TEJA,VIV,BUENO,{1950 + i}\n" for i in range(6)
    )
    assert wb.import_cadastre("demo", csv)["buildings"] == 6
    for category, values in wb.types("demo")["unmatched"].items():
        for value in values:
            wb.type_action("demo", {"action": "register", "category": category, "code": value})
    wb.set_state("demo", {"target": "TypesReconciled"})
    keys = [s["key"] for s in wb.subtypologies("demo")["subtypologies"]]
    tid = wb.create_typology("demo", {"name": "Tipologia1"})["id"]
    wb.assign_keys("demo", tid, {"keys": keys})
    wb.set_state("demo", {"target": "TypologiesDefined"})
    selected = wb.sample("demo", {"mode": "TotalCount", "value": 2, "seed": 3})["selected"]
    assert len(selected) == 2
    wb.set_state("demo", {"target": "Sampled"})
    wb.set_state("demo", {"target": "FieldWork"})
    for bid in selected:
        wb.field_data("demo", {"id": bid, "classes": ["B"] * 11})
    assert wb.propagate("demo")["propagated"] == 4
    sid = wb.define_scenario("demo", {"name": "M6", "ag": 0.3})["id"]
    with pytest.raises(vulnesis.VulnesisError) as err:
        wb.define_scenario("demo", {"ag": 0.3})
    assert err.value.code == "DuplicateAcceleration"
    features = json.loads(wb.map("demo", "damage", "Building", sid))["features"]
    expected = vulnesis.damage_index(vulnesis.normalize_vi(vulnesis.compute_vi(["B"] * 11)), 0.3)
    assert all(math.isclose(f["properties"]["value"], expected) for f in features)
