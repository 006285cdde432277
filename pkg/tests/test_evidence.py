from __future__ import annotations

import pytest

from placidus import casestudy as cs
from placidus.codec import CodecError, Codec, digest, fts_from_json, fts_to_json, ts_from_json, ts_to_json
from placidus.evidence import (
    Analytic,
    Attested,
    AttestedRecord,
    EvidenceError,
    EvidenceStatus,
    Exhaustive,
    MachineRecord,
    MissingEvidenceError,
    VariationalEvidence,
    derive_record,
    describe_output,
    lift_certificate,
    lift_report,
    machine_record,
    run_lifted,
    verify_var_evidence,
)
from placidus.featexpr import TRUE, Atom, semantics
from placidus.fts import derive_fts, mc_product, parse_formula
from placidus.registry import default_registry
from placidus.variability import LiftStatus, VarSet
from placidus.vgsn import explode

REG = default_registry()


def test_machine_record_verdicts():
    rec = machine_record("mc", 1, 2, True)
    assert rec.passed and rec.input_digest == digest(1)
    with pytest.raises(EvidenceError):
        MachineRecord("mc", "a", "b", "maybe")


def test_derive_record_per_kind():
    fm = cs.toy_fm()
    a, b = fm.configs()
    table = {a: machine_record("x", 0, 0, True)}
    ev = VariationalEvidence(TRUE, Exhaustive(table))
    assert derive_record(ev, a).passed
    with pytest.raises(MissingEvidenceError):
        derive_record(ev, b)
    assert derive_record(VariationalEvidence(TRUE, Attested("t", "s")), b) == AttestedRecord("t", "s")


def test_run_lifted_certificate():
    fm, m = cs.infusion_fm(), cs.pump_fts()
    out, cert = run_lifted("vquery", (m, "Alrm_*"), fm)
    assert isinstance(out, VarSet) and len(out) == 5
    assert len(cert.passing) == 36
    assert cert.detail.startswith("{Alrm_DoseRateHardLimitsViolationS [CHECK_INFUSION_RATE], Alrm_EmptyReservoirS,")


def test_exact_mc_certificate_passes_only_where_products_pass():
    fm, m = cs.toy_fm(), cs.toy_fts()
    out, cert = run_lifted("mc-family", (m, parse_formula("AG !s2")), fm)
    assert [str(c) for c in cert.passing] == ["B"]
    assert cert.detail == "1 of 2 product classes pass"
    rec = derive_record(VariationalEvidence(TRUE, Analytic(cert)), fm.universe.config(["A"]))
    assert rec.verdict == "fail"


def test_lift_reports_for_builtins():
    fm, m = cs.infusion_fm(), cs.pump_fts()
    assert lift_report("vquery", (m, "Alrm_*"), fm).status is LiftStatus.EXACT
    phi = cs.alarm_formula("Alrm_WrongDrugS")
    assert lift_report("mc-family", (m, phi), fm).status is LiftStatus.EXACT
    assert lift_report("mc-family-quasi", (m, phi), fm).status is LiftStatus.QUASI_SOUND
    report, cert = lift_certificate("vquery", (m, "Alrm_*"), fm, Atom("HW_MONITORING"))
    assert report.checked == 18 and len(cert.passing) == 18


def test_verify_analytic_evidence():
    fm, m = cs.infusion_fm(), cs.pump_fts()
    x = (m, cs.alarm_formula("Alrm_OcclusionS"))
    _, cert = run_lifted("mc-family", x, fm)
    ev = VariationalEvidence(TRUE, Analytic(cert))
    assert verify_var_evidence("mc_holds", x, TRUE, fm, ev, REG).status is EvidenceStatus.VERIFIED
    # a certificate for another input is rejected
    other = (m, cs.alarm_formula("Alrm_HwFailureS"))
    check = verify_var_evidence("mc_holds", other, TRUE, fm, ev, REG)
    assert check.status is EvidenceStatus.REJECTED
    assert "input digest differs from the certificate" in check.problems


def test_verify_exhaustive_evidence():
    fm, m = cs.toy_fm(), cs.toy_fts()
    table = {c: machine_record("deadlock-check", derive_fts(m, c), True, True) for c in fm.configs()}
    ev = VariationalEvidence(TRUE, Exhaustive(table))
    assert verify_var_evidence("deadlock_free", m, TRUE, fm, ev, REG).status is EvidenceStatus.VERIFIED
    partial = VariationalEvidence(TRUE, Exhaustive({fm.configs()[0]: table[fm.configs()[0]]}))
    check = verify_var_evidence("deadlock_free", m, TRUE, fm, partial, REG)
    assert check.status is EvidenceStatus.REJECTED and [str(c) for c in check.uncovered] == ["B"]
    attested = VariationalEvidence(TRUE, Attested("ok"))
    assert verify_var_evidence("deadlock_free", m, TRUE, fm, attested, REG).status is EvidenceStatus.ASSUMED


def test_complete_family_certificate():
    fm = cs.infusion_fm()
    s = VarSet.of(fm.universe, [("a", Atom("HW_MONITORING")), ("b", TRUE)])
    out, cert = run_lifted("complete-family", (s, explode(s)), fm)
    assert out == fm.conf and describe_output(out) == "holds in 36 configurations"


# --- codec ---------------------------------------------------------------------------


def test_codec_round_trips_carried_data():
    fm = cs.infusion_fm()
    codec = Codec(fm.universe)
    s = VarSet.of(fm.universe, [("a", Atom("HW_MONITORING")), ("b", TRUE)])
    values = [
        1, "x", None, True, (1, "a"), frozenset({1, 2}), s, explode(s),
        cs.alarm_formula("Alrm_OcclusionS"), fm.conf, fm.configs()[3],
        mc_product(cs.pump_product([]), parse_formula("EF Alrm_EmptyReservoirS")),
    ]
    for v in values:
        assert codec.decode(codec.encode(v)) == v, v


def test_fts_and_ts_json_round_trip():
    m = cs.pump_fts()
    assert fts_from_json(fts_to_json(m)) == m
    ts = cs.pump_product(["HW_MONITORING"])
    assert ts_from_json(ts_to_json(ts)) == ts


def test_codec_errors():
    with pytest.raises(CodecError):
        Codec().decode({"mystery": 1})
    with pytest.raises(CodecError):
        fts_from_json({**fts_to_json(cs.toy_fts()), "universe": "figmodel"})


def test_digest_is_stable_and_order_free():
    assert digest(frozenset({1, 2})) == digest(frozenset({2, 1}))
    assert digest((1, 2)) != digest((2, 1))
    assert digest("x").startswith("sha256:")
