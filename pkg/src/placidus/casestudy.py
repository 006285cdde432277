"""Worked models: a two-feature toy family and an infusion pump product line."""

from __future__ import annotations

from functools import lru_cache

from placidus.evidence import Exhaustive, VariationalEvidence, machine_record
from placidus.featexpr import TRUE, FeatureModel, parse_featexpr
from placidus.fts import AGImpliesAU, Fts, TransitionSystem, FtsState, FtsTransition, derive_fts, parse_formula
from placidus.gsn import Axiomatic, PredGoal
from placidus.registry import _deadlock_free
from placidus.vgsn import PlAc, VEvidence, VGoal, VStrategy

INFUSION_FEATURES = (
    "HW_MONITORING",
    "MULTIPLE_DRUGS",
    "CHECK_DRUG_TYPE",
    "PROGRAMMABLE_INFUSION",
    "CHECK_INFUSION_RATE",
    "VISUAL_DISPLAY",
)
INFUSION_MODEL = "(MULTIPLE_DRUGS -> CHECK_DRUG_TYPE) & (PROGRAMMABLE_INFUSION -> CHECK_INFUSION_RATE)"

ALARM_PATTERN = "Alrm_*"
ALARM_PRED = "alarm_safe"
NORMAL = "Infusion_NormalOperationS"
CLEAR = "E_ClearAlarm"


@lru_cache(maxsize=None)
def toy_fm() -> FeatureModel:
    return FeatureModel.parse(("A", "B"), "A xor B")


@lru_cache(maxsize=None)
def toy_fts() -> Fts:
    fm = toy_fm()
    pc = fm.pc
    return Fts(
        fm,
        (
            FtsState("s0", frozenset({"s0"})),
            FtsState("s1", frozenset({"s1"})),
            FtsState("s2", frozenset({"s2"}), pc("A")),
        ),
        (
            FtsTransition("s0", "a", "s1"),
            FtsTransition("s1", "d", "s2", pc("A")),
            FtsTransition("s2", "c", "s0", pc("A")),
            FtsTransition("s1", "b", "s0", pc("B")),
        ),
        ("s0",),
    )


@lru_cache(maxsize=None)
def infusion_fm() -> FeatureModel:
    return FeatureModel.parse(INFUSION_FEATURES, INFUSION_MODEL)


# alarm state -> presence condition
ALARMS = {
    "Alrm_DoseRateHardLimitsViolationS": "CHECK_INFUSION_RATE",
    "Alrm_EmptyReservoirS": "true",
    "Alrm_HwFailureS": "HW_MONITORING",
    "Alrm_OcclusionS": "true",
    "Alrm_WrongDrugS": "CHECK_DRUG_TYPE",
}


@lru_cache(maxsize=None)
def pump_fts() -> Fts:
    """Infusion pump behaviour; every alarm blocks infusion until it is cleared."""
    fm = infusion_fm()
    pc = fm.pc
    states = [
        ("Idle", ["Idle"], "true"),
        ("Display", ["Display"], "VISUAL_DISPLAY"),
        ("Programming", ["Programming"], "PROGRAMMABLE_INFUSION"),
        ("DrugCheck", ["DrugCheck"], "CHECK_DRUG_TYPE"),
        ("RateCheck", ["RateCheck"], "CHECK_INFUSION_RATE"),
        ("Infusing", [NORMAL], "true"),
        ("Paused", ["Paused"], "true"),
        ("Done", ["Done"], "true"),
        ("AlarmSilenced", ["AlarmSilenced"], "true"),
        ("ClearAlarm", [CLEAR], "true"),
    ]
    states += [(a, [a], p) for a, p in ALARMS.items()]
    trans = [
        ("Idle", "start", "Infusing", "true"),
        ("Idle", "show", "Display", "VISUAL_DISPLAY"),
        ("Display", "back", "Idle", "VISUAL_DISPLAY"),
        ("Idle", "program", "Programming", "PROGRAMMABLE_INFUSION"),
        ("Programming", "confirm", "RateCheck", "PROGRAMMABLE_INFUSION"),
        ("Idle", "load", "DrugCheck", "CHECK_DRUG_TYPE"),
        ("DrugCheck", "drug_ok", "Infusing", "CHECK_DRUG_TYPE"),
        ("DrugCheck", "wrong_drug", "Alrm_WrongDrugS", "CHECK_DRUG_TYPE"),
        ("Infusing", "rate_change", "RateCheck", "CHECK_INFUSION_RATE"),
        ("RateCheck", "rate_ok", "Infusing", "CHECK_INFUSION_RATE"),
        ("RateCheck", "rate_violation", "Alrm_DoseRateHardLimitsViolationS", "CHECK_INFUSION_RATE"),
        ("Infusing", "empty", "Alrm_EmptyReservoirS", "true"),
        ("Infusing", "occlusion", "Alrm_OcclusionS", "true"),
        ("Infusing", "hw_fault", "Alrm_HwFailureS", "HW_MONITORING"),
        ("Infusing", "pause", "Paused", "true"),
        ("Paused", "resume", "Infusing", "true"),
        ("Infusing", "finish", "Done", "true"),
        ("Done", "reset", "Idle", "true"),
        ("AlarmSilenced", "clear", "ClearAlarm", "true"),
        ("ClearAlarm", "to_idle", "Idle", "true"),
    ]
    for a, p in ALARMS.items():
        trans.append((a, "silence", "AlarmSilenced", p))
        trans.append((a, "clear", "ClearAlarm", p))
    return Fts(
        fm,
        tuple(FtsState(i, frozenset(ls), pc(p)) for i, ls, p in states),
        tuple(FtsTransition(s, a, d, pc(p)) for s, a, d, p in trans),
        ("Idle",),
    )


def pump_product(features) -> TransitionSystem:
    fm = infusion_fm()
    return derive_fts(pump_fts(), fm.universe.config(features))


def alarm_formula(alarm: str) -> AGImpliesAU:
    return parse_formula(f"AG ({alarm} -> A[!{NORMAL} U {CLEAR}])")


def alarm_pc(alarm: str):
    return parse_featexpr(ALARMS[alarm], infusion_fm().universe)


def pump_root() -> PlAc:
    """The pump PL AC before any development: one undeveloped root goal."""
    goal = PredGoal("alarm_safety", pump_fts(), "no dose is delivered while any alarm is active")
    return PlAc(infusion_fm(), VStrategy("G0", VGoal(TRUE, goal), None, (), "top-level alarm safety claim"))


def _toy_plac(break_b: bool) -> PlAc:
    fm = toy_fm()
    m = toy_fts()
    table = {}
    for c in fm.configs():
        ts = derive_fts(m, c)
        ok = _deadlock_free(ts) and not (break_b and c.members == {"B"})
        table[c] = machine_record("deadlock-check", ts, ok, ok)
    ev = VEvidence(
        "E1",
        VGoal(TRUE, PredGoal("deadlock_free", m, "the system never deadlocks")),
        VariationalEvidence(TRUE, Exhaustive(table)),
        "one deadlock check per product",
    )
    root = VStrategy(
        "G0",
        VGoal(TRUE, PredGoal("deadlock_free", m, "the system never deadlocks")),
        Axiomatic("the claim is exactly what the evidence shows"),
        (ev,),
    )
    return PlAc(fm, root)


def toy_plac() -> PlAc:
    return _toy_plac(False)


def broken_toy_plac() -> PlAc:
    """Same as :func:`toy_plac` but the evidence for ``{B}`` reports a failure."""
    return _toy_plac(True)


def pump_ac():
    """Model-checking argument over one pump product.

    G1, G2 and G4 are attested; G3 is restated once and closed by the
    machine-checked solution Sn.1.
    """
    from placidus.evidence import AttestedRecord
    from placidus.gsn import Evidence, Strategy, TemplateInstance, instantiate, undeveloped
    from placidus.registry import default_registry

    reg = default_registry()
    ts = pump_product(INFUSION_FEATURES)
    phi = alarm_formula("Alrm_DoseRateHardLimitsViolationS")
    claim = PredGoal("alarm_safe", frozenset({"Alrm_DoseRateHardLimitsViolationS"}), "dose-rate alarm is safe")
    root = instantiate(reg.template("mc"), "G0", (claim, (ts, phi)), None, "argument over model checking")
    children = []
    for ch in root.children:
        if isinstance(ch, Evidence):
            sn = Evidence("Sn.1", ch.goal, ch.record, "model checker output")
            children.append(Strategy(ch.id, ch.goal, TemplateInstance("identity", ch.goal), (sn,)))
        else:
            children.append(Evidence(ch.id, ch.goal, AttestedRecord("reviewed by the safety engineer", "review")))
    return Strategy(root.id, root.goal, root.justification, tuple(children), root.description)
