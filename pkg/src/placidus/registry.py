"""Registries of predicates, analyses and templates.

A :class:`Registry` is assembled once (see :func:`default_registry`) and then
only read.  Tests that need extra entries work on a :meth:`Registry.copy`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from placidus.featexpr import ConfigSet, Configuration, FeatExpr, FeatureModel
from placidus.fts import (
    FamilyMcResult,
    Fts,
    McResult,
    QuasiMcResult,
    TransitionSystem,
    _mc,
    mc_family,
    query,
    vquery,
)
from placidus.variability import VarFamily, VarSet, derive, derive_family, derive_set


class RegistryError(KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "registry lookup failed"


class NotCheckableError(ValueError):
    pass


@dataclass(frozen=True)
class Predicate:
    """A product-level predicate; ``check(data, registry)`` is ``None`` for external claims."""

    id: str
    check: Optional[Callable[[Any, "Registry"], bool]] = None
    text: str = ""

    @property
    def external(self) -> bool:
        return self.check is None


@dataclass(frozen=True)
class Analysis:
    id: str
    run: Callable[[Any], Any]
    verdict: Callable[[Any], bool] = lambda out: True
    decides: Optional[str] = None
    describe: Callable[[Any], str] = repr


@dataclass(frozen=True)
class LiftedAnalysis:
    """Family-level counterpart of a product analysis.

    ``run(x, fm, scope)`` analyses the family restricted to ``scope``;
    ``out_derive`` projects the family output to one configuration (exact mode);
    ``family_ok`` judges the family output (quasi mode).
    """

    id: str
    product: str
    mode: str
    run: Callable[[Any, FeatureModel, Optional[FeatExpr]], Any]
    out_derive: Optional[Callable[[Any, Configuration], Any]] = None
    family_ok: Optional[Callable[[Any], bool]] = None


@dataclass
class Registry:
    predicates: dict[str, Predicate] = field(default_factory=dict)
    analyses: dict[str, Analysis] = field(default_factory=dict)
    lifted: dict[str, LiftedAnalysis] = field(default_factory=dict)
    templates: dict[str, Any] = field(default_factory=dict)
    vtemplates: dict[str, Any] = field(default_factory=dict)
    memo: dict = field(default_factory=dict, repr=False, compare=False)

    def copy(self) -> "Registry":
        return Registry(
            dict(self.predicates), dict(self.analyses), dict(self.lifted),
            dict(self.templates), dict(self.vtemplates),
        )

    def add_predicate(self, pred: Predicate) -> Predicate:
        self.predicates[pred.id] = pred
        return pred

    def declare_external(self, pred_id: str, text: str = "") -> Predicate:
        return self.predicates.setdefault(pred_id, Predicate(pred_id, None, text))

    def add_analysis(self, a: Analysis) -> Analysis:
        self.analyses[a.id] = a
        return a

    def add_lifted(self, a: LiftedAnalysis) -> LiftedAnalysis:
        if a.product not in self.analyses:
            raise RegistryError(f"lifted analysis {a.id!r} refers to unknown analysis {a.product!r}")
        self.lifted[a.id] = a
        return a

    def predicate(self, pred_id: str) -> Predicate:
        try:
            return self.predicates[pred_id]
        except KeyError:
            raise RegistryError(f"unknown predicate {pred_id!r}") from None

    def analysis(self, aid: str) -> Analysis:
        try:
            return self.analyses[aid]
        except KeyError:
            raise RegistryError(f"unknown analysis {aid!r}") from None

    def lifted_analysis(self, aid: str) -> LiftedAnalysis:
        try:
            return self.lifted[aid]
        except KeyError:
            raise RegistryError(f"unknown lifted analysis {aid!r}") from None

    def template(self, tid: str):
        try:
            return self.templates[tid]
        except KeyError:
            raise RegistryError(f"unknown template {tid!r}") from None

    def vtemplate(self, tid: str):
        try:
            return self.vtemplates[tid]
        except KeyError:
            raise RegistryError(f"unknown variational template {tid!r}") from None

    def holds(self, pred_id: str, data: Any) -> bool:
        pred = self.predicate(pred_id)
        if pred.check is None:
            raise NotCheckableError(f"predicate {pred_id!r} is external")
        return bool(pred.check(data, self))


# --- built-in predicates ------------------------------------------------------


def is_complete(data) -> bool:
    """``S`` is covered by the union of the family ``F``."""
    s, family = data
    covered = frozenset().union(*family) if family else frozenset()
    return frozenset(s) <= covered


def _forall_in_set(data, reg: Registry) -> bool:
    xs, pred_id = data
    return all(reg.holds(pred_id, x) for x in xs)


def _deadlock_free(ts: TransitionSystem) -> bool:
    sources = {t.src for t in ts.transitions}
    reach, todo = set(ts.initial), list(ts.initial)
    while todo:
        s = todo.pop()
        for t in ts.transitions:
            if t.src == s and t.dst not in reach:
                reach.add(t.dst)
                todo.append(t.dst)
    return reach <= sources


# analyses run on derived products, where a label may legitimately be absent,
# so they skip the unknown-label warning of mc_product
def _mc_holds(data) -> bool:
    ts, phi = data
    return _mc(ts, phi).passed


# --- built-in analyses --------------------------------------------------------


def _run_mc(x) -> McResult:
    ts, phi = x
    return _mc(ts, phi)


def _run_query(x) -> frozenset:
    ts, pattern = x
    return frozenset(query(ts, pattern))


def _run_mc_exact(x, fm, scope) -> FamilyMcResult:
    m, phi = x
    return mc_family(m, phi, "exact", scope)


def _run_mc_quasi(x, fm, scope) -> QuasiMcResult:
    m, phi = x
    return mc_family(m, phi, "quasi", scope)


def _run_vquery(x, fm, scope) -> VarSet:
    m, pattern = x
    return vquery(m, pattern)


def _run_complete_family(x, fm, scope) -> ConfigSet:
    s, family = x
    conf = fm.conf if scope is None else fm.scope(scope)
    ok = [c for c in conf if is_complete((derive(s, c), derive(family, c)))]
    return ConfigSet.of(fm.universe, ok)


def install_builtin_analyses(reg: Registry) -> None:
    reg.add_predicate(Predicate("complete", lambda d, r: is_complete(d), "the family covers the set"))
    reg.add_predicate(Predicate("forall_in_set", _forall_in_set, "every element satisfies the predicate"))
    reg.add_predicate(Predicate("deadlock_free", lambda d, r: _deadlock_free(d), "every reachable state can move"))
    reg.add_predicate(Predicate("mc_holds", lambda d, r: _mc_holds(d), "the system satisfies the formula"))
    for pid, text in [
        ("represents", "the model faithfully represents the system"),
        ("formalizes", "the specification formalizes the claim"),
        ("analysis_result", "the analysis produced the recorded output"),
        ("analysis_sound", "the analysis is sound"),
        ("family_no_violation", "the family analysis reported no violation"),
        ("lift_correct", "the family analysis is a correct lift of the product analysis"),
        ("alarm_safe", "no dose is delivered while this alarm is active"),
        ("alarm_safety", "no dose is delivered while any alarm is active"),
    ]:
        reg.declare_external(pid, text)

    reg.add_analysis(Analysis("mc", _run_mc, lambda r: r.passed, "mc_holds", lambda r: r.describe()))
    reg.add_analysis(
        Analysis("query", _run_query, lambda r: True, None, lambda r: "{" + ", ".join(sorted(r)) + "}")
    )
    reg.add_analysis(Analysis("complete", is_complete, bool, "complete", str))

    reg.add_lifted(LiftedAnalysis("mc-family", "mc", "exact", _run_mc_exact, out_derive=lambda r, c: r.at(c)))
    reg.add_lifted(
        LiftedAnalysis("mc-family-quasi", "mc", "quasi", _run_mc_quasi, family_ok=lambda r: r.passed)
    )
    reg.add_lifted(LiftedAnalysis("vquery", "query", "exact", _run_vquery, out_derive=derive_set))
    reg.add_lifted(
        LiftedAnalysis("complete-family", "complete", "exact", _run_complete_family, out_derive=derive)
    )


_DEFAULT: Optional[Registry] = None


def default_registry() -> Registry:
    """The shared registry with every built-in predicate, analysis and template."""
    global _DEFAULT
    if _DEFAULT is None:
        from placidus.templates import install_builtin_templates

        reg = Registry()
        install_builtin_analyses(reg)
        install_builtin_templates(reg)
        _DEFAULT = reg
    return _DEFAULT
