from __future__ import annotations

import json

import pytest

from placidus import casestudy as cs
from placidus.frontend import DEMO_DIR, WorkspaceError, copy_demo, load_workspace
from placidus.frontend.io import ac_from_json, ac_to_json, plac_from_json, plac_to_json
from placidus.vgsn import vdeductive_check


@pytest.fixture(scope="module")
def demo():
    return load_workspace("demo")


def write_manifest(tmp_path, artifacts, **extra):
    (tmp_path / "manifest.json").write_text(json.dumps({"artifacts": artifacts, **extra}))
    return tmp_path / "manifest.json"


def test_empty_manifest(tmp_path):
    ws = load_workspace(write_manifest(tmp_path, {}))
    assert ws.names() == []


def test_demo_contents(demo):
    assert set(demo.names()) >= {"figmodel", "toy_fts", "infusion", "pump", "pump_plac", "broken_plac", "pump_ac"}
    assert {demo.artifact(n).kind for n in demo.names()} == {
        "feature-model", "fts", "ts", "query", "varset", "formula", "plac", "ac",
    }


def test_demo_matches_fixture_models(demo):
    assert demo.get("figmodel") == cs.toy_fm()
    assert demo.get("toy_fts") == cs.toy_fts()
    assert demo.get("infusion") == cs.infusion_fm()
    assert demo.get("pump") == cs.pump_fts()
    assert demo.get("pump_full") == cs.pump_product(cs.INFUSION_FEATURES)
    assert demo.get("alarm_property") == cs.alarm_formula("Alrm_DoseRateHardLimitsViolationS")
    assert demo.get("pump_plac") == cs.pump_root()
    assert demo.get("toy_plac") == cs.toy_plac()
    assert demo.get("broken_plac") == cs.broken_toy_plac()
    root, fm = demo.get("pump_ac")
    assert root == cs.pump_ac() and fm == cs.infusion_fm()


def test_fts_references_its_feature_model(demo):
    raw = json.loads((DEMO_DIR / "pump.json").read_text())
    assert raw["universe"] == "infusion"
    assert demo.get("pump").fm is demo.get("infusion")


def test_missing_file_is_reported(tmp_path):
    path = write_manifest(tmp_path, {"fm": {"kind": "feature-model", "path": "nope.json"}})
    with pytest.raises(WorkspaceError) as info:
        load_workspace(path)
    assert len(info.value.problems) == 1 and info.value.problems[0].startswith("fm: file")


def test_all_problems_reported_at_once(tmp_path):
    (tmp_path / "bad.json").write_text("{\n  oops\n}")
    (tmp_path / "m.json").write_text(json.dumps({"universe": "ghost", "states": [], "transitions": [], "initial": []}))
    path = write_manifest(tmp_path, {
        "bad": {"kind": "feature-model", "path": "bad.json"},
        "m": {"kind": "fts", "path": "m.json"},
        "x": {"kind": "spreadsheet", "path": "x.json"},
        "gone": {"kind": "formula", "path": "gone.json"},
    })
    with pytest.raises(WorkspaceError) as info:
        load_workspace(path)
    problems = info.value.problems
    assert len(problems) == 4
    assert any(p.startswith("bad:") and "bad.json:2:3" in p for p in problems)
    assert any(p == "m: dangling reference to 'ghost'" for p in problems)
    assert any(p.startswith("x: unknown kind") for p in problems)
    assert any(p.startswith("gone: file") for p in problems)


def test_unknown_predicate_and_template(tmp_path):
    copy_demo(tmp_path)
    data = json.loads((tmp_path / "toy_plac.json").read_text())
    data["root"]["goal"]["pred"] = "mystery"
    data["root"]["children"][0]["goal"]["pred"] = "mystery"
    (tmp_path / "toy_plac.json").write_text(json.dumps(data))
    with pytest.raises(WorkspaceError, match="unknown predicate 'mystery'"):
        load_workspace(tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    manifest["external_predicates"] = ["mystery"]
    (tmp_path / "manifest.json").write_text(json.dumps(manifest))
    assert load_workspace(tmp_path).get("toy_plac").root.goal.body.pred == "mystery"


def test_save_writes_backup_and_round_trips(tmp_path):
    copy_demo(tmp_path)
    ws = load_workspace(tmp_path)
    for name in ws.names():
        before = (tmp_path / f"{name}.json").read_text()
        ws.save(name, ws.get(name))
        assert (tmp_path / f"{name}.json.bak").read_text() == before
    again = load_workspace(tmp_path)
    for name in ws.names():
        assert again.get(name) == ws.get(name), name


def test_ac_and_plac_json_round_trip():
    fm = cs.infusion_fm()
    root = cs.pump_ac()
    assert ac_from_json(ac_to_json(root, fm)) == (root, fm)
    plac = cs.broken_toy_plac()
    back = plac_from_json(plac_to_json(plac))
    assert back == plac
    assert vdeductive_check(back).verdict == vdeductive_check(plac).verdict


def test_demo_is_not_modified_by_copy(tmp_path):
    before = sorted(p.name for p in DEMO_DIR.iterdir())
    copy_demo(tmp_path / "ws")
    assert sorted(p.name for p in DEMO_DIR.iterdir()) == before
