"""Acceptance criteria, one test each, with the stated time limits.

Every test records a pass/fail line with its runtime; the lines are
printed in the terminal summary.
"""

from __future__ import annotations

import contextlib
import io
import json
import random
import time
import warnings

import pytest

from placidus import casestudy as cs
from placidus.evidence import Attested, lift_report
from placidus.featexpr import TRUE, Atom
from placidus.frontend import copy_demo, load_workspace
from placidus.frontend.cli import main
from placidus.frontend.io import ac_from_json
from placidus.fts import derive_fts, mc_family, mc_product
from placidus.registry import default_registry
from placidus.templates import domdecomp_template
from placidus.variability import derive, derive_family, derive_set
from placidus.vgsn import VEvidence, _vdomdecomp_inst, aggregate, child_goals, explode, vdeductive_check, walk

from conftest import ACCEPTANCE
from gen import PlacGen, brute_force, oracle_mc, pump_developed, rand_fm, rand_formula, rand_fts, rand_ts, rand_varset

pytestmark = pytest.mark.acceptance

REG = default_registry()


@pytest.fixture(autouse=True)
def _quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


def criterion(n: int, title: str, limit: float, body) -> None:
    """Run ``body`` (returning a detail string), record the outcome, then assert it."""
    start = time.perf_counter()
    try:
        detail = body()
        error = None
    except Exception as exc:
        detail, error = f"{type(exc).__name__}: {exc}".splitlines()[0], exc
    elapsed = time.perf_counter() - start
    ok = error is None and elapsed < limit
    if error is None and not ok:
        detail += "; over the time limit"
    line = f"[{'PASS' if ok else 'FAIL'}] {n}. {title}: {detail} ({elapsed:.2f} s, limit {limit:g} s)"
    ACCEPTANCE[n] = line
    print(line)
    if error is not None:
        raise error
    assert elapsed < limit, line


# --- 1 -----------------------------------------------------------------------------------------


def test_toy_reproduction():
    def body():
        fm, m = cs.toy_fm(), cs.toy_fts()
        assert [c.names() for c in fm.configs()] == [["A"], ["B"]]
        a = derive_fts(m, fm.universe.config(["A"]))
        b = derive_fts(m, fm.universe.config(["B"]))
        assert [t.action for t in a.transitions] == ["a", "d", "c"]
        assert [t.action for t in b.transitions] == ["a", "b"]
        return "Conf = {A}, {B}; products (a,d,c) and (a,b)"

    criterion(1, "toy configurations and products", 1, body)


# --- 2 -----------------------------------------------------------------------------------------


def test_infusion_configurations():
    def body():
        fm = cs.infusion_fm()
        assert len(fm.universe.features) == 6
        assert len(fm.configs()) == 36
        return "36 of 64 configurations valid"

    criterion(2, "infusion feature model", 1, body)


# --- 3 -----------------------------------------------------------------------------------------


def _vdomdecomp_commutes(fm, s, fam, pred="p") -> int:
    product = domdecomp_template()
    vt = REG.vtemplate("vdomdecomp")
    lifted = _vdomdecomp_inst((s, pred), fam, "G")
    for c in fm.configs():
        xs, ds = derive_set(s, c), derive_family(fam, c)
        expected = [n.goal for n in product.inst((xs, pred), ds, "G")]
        assert child_goals(lifted, c) == expected, (c, s, fam)
        assert derive(vt.parent((s, pred)), c) == product.parent((xs, pred))
    assert vt.obligation((s, pred), fam, fm, TRUE).ok
    return len(fm.configs())


def test_lift_soundness():
    def body():
        checks = 0
        fm, m = cs.infusion_fm(), cs.pump_fts()
        assert lift_report("vquery", (m, cs.ALARM_PATTERN), fm).ok
        s = load_workspace("demo").get("alarm_states")
        for fam in (explode(s), aggregate(s)):
            checks += _vdomdecomp_commutes(fm, s, fam)
        assert lift_report("vquery", (cs.toy_fts(), "s*"), cs.toy_fm()).ok
        rng = random.Random(3)
        for _ in range(1000):
            fm = rand_fm(rng, 4)
            s = rand_varset(rng, fm, 8)
            for fam in (explode(s), aggregate(s)):
                checks += _vdomdecomp_commutes(fm, s, fam)
            m = rand_fts(rng, fm, 8, labels=("a1", "a2", "b1"))
            assert lift_report("vquery", (m, "a*"), fm).ok
            checks += len(fm.configs())
        return f"fixtures and 1000 random instances, {checks} configuration checks commute"

    criterion(3, "lift soundness of vdomdecomp and vquery", 60, body)


# --- 4 -----------------------------------------------------------------------------------------


def _agrees_with_products(plac) -> bool:
    rep = vdeductive_check(plac, REG)
    fails, assumptions = brute_force(plac, REG)
    assert set(rep.failures) == fails
    assert rep.deductive == (not fails)
    for c, ids in assumptions.items():
        assert sorted(rep.assumptions_at(c)) == ids
    return rep.deductive


def test_deductive_of_var_proof():
    def body():
        fixtures = [cs.toy_plac(), cs.broken_toy_plac(), cs.pump_root(), pump_developed()]
        verdicts = [_agrees_with_products(p) for p in fixtures]
        assert verdicts == [True, False, False, True]
        rng = random.Random(4)
        broken = 0
        for _ in range(200):
            fm = rand_fm(rng, 6)
            broken += not _agrees_with_products(PlacGen(rng, fm, REG, max_depth=4).plac())
        return f"4 fixtures and 200 random trees ({broken} not deductive) match product checks"

    criterion(4, "variational deductive check equals product checks", 60, body)


# --- 5 -----------------------------------------------------------------------------------------


def test_explode_aggregate_complete():
    def body():
        rng = random.Random(5)
        for _ in range(1000):
            fm = rand_fm(rng, 4)
            s = rand_varset(rng, fm, 8)
            for fam in (explode(s), aggregate(s)):
                for c in fm.configs():
                    assert derive_set(s, c) <= frozenset().union(*derive_family(fam, c))
        return "1000 random sets, no violation"

    criterion(5, "explode and aggregate completeness", 30, body)


# --- 6 -----------------------------------------------------------------------------------------


def test_family_model_checking():
    def body():
        m = cs.pump_fts()
        phi = cs.alarm_formula("Alrm_DoseRateHardLimitsViolationS")
        exact = mc_family(m, phi, "exact")
        assert exact.passed and all(exact.at(c).passed for c in m.fm.configs())
        assert len(m.fm.configs()) == 36
        assert mc_family(m, phi, "quasi").passed
        rng = random.Random(6)
        for _ in range(500):
            m = rand_fts(rng, rand_fm(rng, 4), 8)
            phi = rand_formula(rng)
            exact = mc_family(m, phi, "exact")
            products = {c: mc_product(derive_fts(m, c), phi).passed for c in m.fm.configs()}
            assert all(exact.at(c).passed == v for c, v in products.items())
            if mc_family(m, phi, "quasi").passed:
                assert all(products.values())
        return "pump property passes in 36 of 36 (exact) and in quasi mode; 500 random families agree"

    criterion(6, "family model checking", 120, body)


# --- 7 -----------------------------------------------------------------------------------------


def test_product_model_checker_oracle():
    def body():
        rng = random.Random(7)
        kinds = set()
        for _ in range(500):
            ts, phi = rand_ts(rng, 6), rand_formula(rng)
            kinds.add(type(phi).__name__)
            assert mc_product(ts, phi).passed == oracle_mc(ts, phi), (ts, phi)
        assert kinds == {"AG", "AU", "EF", "AGImpliesAU"}
        return "500 random systems agree with path enumeration"

    criterion(7, "product model checker against path enumeration", 60, body)


# --- 8 -----------------------------------------------------------------------------------------


def cli(*argv) -> tuple[int, dict]:
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main([*argv, "--json"])
    return code, json.loads(buf.getvalue())


def test_end_to_end_case_study(tmp_path):
    def body():
        ws = str(tmp_path / "ws")
        copy_demo(ws)
        ac = ("--ac", "pump_plac")
        code, _ = cli("instantiate", ws, *ac, "--template", "lifted-query", "--goal", "G0",
                      "--data", "pump,alarms", "--aux", "alarm_safe")
        assert code == 0
        code, out = cli("instantiate", ws, *ac, "--template", "domdecomp-explode", "--goal", "G0.5")
        assert code == 0
        _, q = cli("query", ws, "pump", "alarms", "--lifted")
        alarms = [e["value"] for e in q["results"]]
        assert out["children"] == [f"G0.5.{i}" for i in range(1, len(alarms) + 1)]
        for i, alarm in enumerate(alarms, 1):
            code, _ = cli("instantiate", ws, *ac, "--template", "lifted-mc-quasi", "--goal", f"G0.5.{i}",
                          "--data", f"pump,safe_{alarm}")
            assert code == 0, alarm
        # the remaining leaves are attested
        plac = load_workspace(ws).get("pump_plac")
        stubs = [n.id for n, _ in walk(plac.root) if not getattr(n, "children", ()) and not isinstance(n, VEvidence)]
        for g in stubs:
            code, _ = cli("instantiate", ws, *ac, "--template", "attest", "--goal", g, "--text", "reviewed",
                          "--signer", "qa")
            assert code == 0, g
        code, rep = cli("check-ac", ws, "pump_plac")
        assert rep["deductive"] and code == 1 and not rep["failures"]
        plac = load_workspace(ws).get("pump_plac")
        attested = {n.id for n, _ in walk(plac.root)
                    if isinstance(n, VEvidence) and isinstance(n.ev.kind, Attested)}
        assert set(rep["assumptions"]) == attested and rep["verdict"] == f"deductive modulo {len(attested)} assumptions"
        (target,) = [n.id for n, _ in walk(plac.root) if n.goal.pc == Atom("CHECK_INFUSION_RATE")]
        present, resolve = 0, load_workspace(ws).resolve
        for c in plac.fm.configs():
            path = tmp_path / "product.json"
            code, _ = cli("derive", ws, "pump_plac", "--config", str(c), "-o", str(path))
            assert code == 0
            root, _ = ac_from_json(json.loads(path.read_text()), resolve)
            present += any(n.id == target for n in _preorder(root))
        assert present == 24
        return f'verdict "{rep["verdict"]}" (all attested); {target} present in {present} of 36 products'

    criterion(8, "end-to-end case study through the CLI", 30, body)


def _preorder(n):
    yield n
    for ch in getattr(n, "children", ()):
        yield from _preorder(ch)
