"""Evidence records for product ACs and variational evidence for PL ACs."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Optional, Union

from placidus.codec import digest
from placidus.featexpr import (
    TRUE,
    ConfigSet,
    Configuration,
    FeatExpr,
    FeatureModel,
    conj,
    to_text,
)
from placidus.fts import FamilyMcResult
from placidus.registry import NotCheckableError, Registry, RegistryError, default_registry
from placidus.variability import VarSet, check_lift, check_quasi_lift, derive


class EvidenceError(ValueError):
    pass


class MissingEvidenceError(EvidenceError):
    def __init__(self, config: Configuration):
        self.config = config
        super().__init__(f"exhaustive evidence has no entry for {config!r}")


# --- product-level records ------------------------------------------------------


@dataclass(frozen=True)
class MachineRecord:
    analysis: str
    input_digest: str
    output_digest: str
    verdict: str
    detail: str = field(default="", compare=False)

    def __post_init__(self):
        if self.verdict not in ("pass", "fail"):
            raise EvidenceError(f"machine verdict must be pass or fail, not {self.verdict!r}")

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


@dataclass(frozen=True)
class AttestedRecord:
    text: str
    source: str = ""


EvidenceRecord = Union[MachineRecord, AttestedRecord]


def machine_record(analysis: str, x: Any, output: Any, passed: bool, detail: str = "") -> MachineRecord:
    return MachineRecord(analysis, digest(x), digest(output), "pass" if passed else "fail", detail)


# --- variational evidence ----------------------------------------------------------


@dataclass(frozen=True)
class Exhaustive:
    """One product-level record per configuration in scope."""

    table: tuple[tuple[Configuration, EvidenceRecord], ...]

    def __post_init__(self):
        entries = dict(self.table) if not isinstance(self.table, dict) else self.table
        object.__setattr__(self, "table", tuple(sorted(entries.items(), key=lambda kv: kv[0].mask)))

    def get(self, c: Configuration) -> Optional[EvidenceRecord]:
        for k, v in self.table:
            if k.mask == c.mask:
                return v
        return None

    def keys(self) -> list[Configuration]:
        return [k for k, _ in self.table]


@dataclass(frozen=True)
class AnalyticCertificate:
    """Record of a family-level analysis run.

    ``passing`` holds the configurations at which the derived verdict is pass.
    """

    analysis: str
    input_digest: str
    output_digest: str
    passing: ConfigSet
    detail: str = field(default="", compare=False)


@dataclass(frozen=True)
class Analytic:
    certificate: AnalyticCertificate


@dataclass(frozen=True)
class Attested:
    text: str
    signer: str = ""


EvidenceKind = Union[Exhaustive, Analytic, Attested]


@dataclass(frozen=True)
class VariationalEvidence:
    scope: FeatExpr
    kind: EvidenceKind

    @property
    def tag(self) -> str:
        return {Exhaustive: "exhaustive", Analytic: "analytic", Attested: "attested"}[type(self.kind)]


def derive_record(ev: VariationalEvidence, c: Configuration) -> EvidenceRecord:
    kind = ev.kind
    if isinstance(kind, Exhaustive):
        rec = kind.get(c)
        if rec is None:
            raise MissingEvidenceError(c)
        return rec
    if isinstance(kind, Analytic):
        cert = kind.certificate
        verdict = "pass" if c in cert.passing else "fail"
        return MachineRecord(cert.analysis, cert.input_digest, cert.output_digest, verdict, cert.detail)
    if isinstance(kind, Attested):
        return AttestedRecord(kind.text, kind.signer)
    raise TypeError(f"unknown evidence kind {kind!r}")


# --- certificates for lifted analyses -------------------------------------------------

LIFT_CHECK = "lift-check"


def run_lifted(
    analysis_id: str, x: Any, fm: FeatureModel, scope: FeatExpr = TRUE, registry: Optional[Registry] = None
) -> tuple[Any, AnalyticCertificate]:
    """Run a lifted analysis over ``scope`` and certify the per-configuration verdicts."""
    reg = registry or default_registry()
    la = reg.lifted_analysis(analysis_id)
    product = reg.analysis(la.product)
    out = la.run(x, fm, scope)
    configs = fm.scope(scope)
    if la.mode == "exact":
        passing = [c for c in configs if product.verdict(la.out_derive(out, c))]
        passing_set = ConfigSet.of(fm.universe, passing)
    else:
        passing_set = configs if la.family_ok(out) else ConfigSet.empty(fm.universe)
    detail = describe_output(out)
    cert = AnalyticCertificate(la.id, digest(x), digest(out), passing_set, detail)
    return out, cert


def describe_output(out: Any) -> str:
    """Short human-readable summary of a family analysis output."""
    if isinstance(out, VarSet):
        return "{" + ", ".join(_annotated(e) for e in out) + "}"
    if isinstance(out, ConfigSet):
        return f"holds in {len(out)} configurations"
    if isinstance(out, FamilyMcResult):
        ok = sum(1 for _, r in out.classes if r.passed)
        return f"{ok} of {len(out.classes)} product classes pass"
    passed = getattr(out, "passed", None)
    if passed is None:
        return ""
    return "no violation reported" if passed else "violation reported"


def _annotated(e) -> str:
    return str(e.value) if e.pc == TRUE else f"{e.value} [{to_text(e.pc)}]"


def lift_report(
    analysis_id: str, x: Any, fm: FeatureModel, scope: FeatExpr = TRUE, registry: Optional[Registry] = None
):
    """Exact or quasi lift check of a registered lifted analysis on input ``x``."""
    reg = registry or default_registry()
    la = reg.lifted_analysis(analysis_id)
    product = reg.analysis(la.product)
    family = lambda v: la.run(v, fm, scope)
    if la.mode == "exact":
        return check_lift(product.run, family, x, fm, out_derive=la.out_derive, scope=scope)
    return check_quasi_lift(
        product.run, family, x, fm, ok=product.verdict, family_ok=la.family_ok, scope=scope
    )


def lift_certificate(
    analysis_id: str, x: Any, fm: FeatureModel, scope: FeatExpr = TRUE, registry: Optional[Registry] = None
) -> tuple[Any, AnalyticCertificate]:
    report = lift_report(analysis_id, x, fm, scope, registry)
    configs = fm.scope(scope)
    bad = ConfigSet.of(fm.universe, [w.config for w in report.witnesses])
    cert = AnalyticCertificate(
        LIFT_CHECK, digest((analysis_id, x)), digest(report.status.value), configs - bad, report.summary()
    )
    return report, cert


# --- verification -----------------------------------------------------------------


class EvidenceStatus(enum.Enum):
    VERIFIED = "verified"
    ASSUMED = "assumed"
    REJECTED = "rejected"


@dataclass(frozen=True)
class EvidenceCheck:
    status: EvidenceStatus
    uncovered: tuple[Configuration, ...] = ()
    problems: tuple[str, ...] = ()


def verify_var_evidence(
    pred_id: str,
    x: Any,
    pc: FeatExpr,
    fm: FeatureModel,
    ev: VariationalEvidence,
    registry: Optional[Registry] = None,
) -> EvidenceCheck:
    """Check that ``ev`` establishes ``pred_id`` on every product of ``x`` within ``pc``."""
    reg = registry or default_registry()
    scope = fm.scope(pc)
    if not scope:
        return EvidenceCheck(EvidenceStatus.VERIFIED)
    kind = ev.kind
    if isinstance(kind, Attested):
        return EvidenceCheck(EvidenceStatus.ASSUMED)
    if isinstance(kind, Exhaustive):
        return _verify_exhaustive(pred_id, x, scope, kind, reg)
    if isinstance(kind, Analytic):
        return _verify_analytic(pred_id, x, pc, fm, scope, kind.certificate, reg)
    raise TypeError(f"unknown evidence kind {kind!r}")


def _verify_exhaustive(pred_id, x, scope: ConfigSet, kind: Exhaustive, reg: Registry) -> EvidenceCheck:
    keys = {k.mask for k in kind.keys()}
    uncovered = tuple(c for c in scope if c.mask not in keys)
    extra = [k for k in kind.keys() if k not in scope]
    if uncovered or extra:
        problems = tuple(f"entry for {k!r} lies outside the scope" for k in extra)
        return EvidenceCheck(EvidenceStatus.REJECTED, uncovered, problems)
    pred = reg.predicate(pred_id)
    problems = []
    assumed = False
    for c in scope:
        rec = kind.get(c)
        if isinstance(rec, AttestedRecord):
            assumed = True
            continue
        if not rec.passed:
            problems.append(f"record for {c!r} reports fail")
            continue
        product = derive(x, c)
        if rec.input_digest != digest(product):
            problems.append(f"record for {c!r} was produced on a different input")
        if pred.external:
            assumed = True
        elif not reg.holds(pred_id, product):
            problems.append(f"{pred_id} does not hold at {c!r}")
    if problems:
        return EvidenceCheck(EvidenceStatus.REJECTED, (), tuple(problems))
    return EvidenceCheck(EvidenceStatus.ASSUMED if assumed else EvidenceStatus.VERIFIED)


def _verify_analytic(pred_id, x, pc, fm, scope, cert: AnalyticCertificate, reg: Registry) -> EvidenceCheck:
    problems = []
    if cert.analysis == LIFT_CHECK:
        return EvidenceCheck(EvidenceStatus.REJECTED, (), ("lift-check certificates back lift claims only",))
    try:
        la = reg.lifted_analysis(cert.analysis)
    except RegistryError as exc:
        return EvidenceCheck(EvidenceStatus.REJECTED, (), (str(exc),))
    product = reg.analysis(la.product)
    if product.decides != pred_id:
        problems.append(f"analysis {la.id!r} does not decide {pred_id!r}")
    out, fresh = run_lifted(la.id, x, fm, pc, reg)
    if fresh.input_digest != cert.input_digest:
        problems.append("input digest differs from the certificate")
    if fresh.output_digest != cert.output_digest:
        problems.append("re-running the analysis gives a different output")
    report = lift_report(la.id, x, fm, pc, reg)
    if not report.ok:
        problems.append(f"lift check failed: {report.summary()}")
    missing = scope - fresh.passing
    if missing:
        problems.append(f"verdict is fail at {len(missing)} configurations in scope")
    if problems:
        return EvidenceCheck(EvidenceStatus.REJECTED, tuple(missing), tuple(problems))
    return EvidenceCheck(EvidenceStatus.VERIFIED)


def effective_scope(*pcs: FeatExpr) -> FeatExpr:
    return conj(pcs)
