"""Featured transition systems, a CTL-fragment model checker and its family lifts.

Atoms of temporal formulas are state labels.  Deadlocked states are treated
as carrying an implicit self-loop.
"""

from __future__ import annotations

import re
import warnings
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Union

from placidus.featexpr import (
    TRUE,
    ConfigSet,
    Configuration,
    FeatExpr,
    FeatureError,
    FeatureModel,
    check_bound,
    evaluate,
    parse_featexpr,
    sat,
    semantics,
    to_text,
)
from placidus.variability import VarSet, register_derivation


class FtsError(ValueError):
    pass


class InvalidConfigurationError(FeatureError):
    pass


# --- models -----------------------------------------------------------------


@dataclass(frozen=True)
class State:
    id: str
    labels: frozenset[str] = frozenset()


@dataclass(frozen=True, order=True)
class Transition:
    src: str
    action: str
    dst: str


@dataclass(frozen=True)
class TransitionSystem:
    states: tuple[State, ...]
    transitions: tuple[Transition, ...]
    initial: tuple[str, ...]

    def __post_init__(self):
        ids = [s.id for s in self.states]
        if len(set(ids)) != len(ids):
            raise FtsError("duplicate state ids")
        known = set(ids)
        for t in self.transitions:
            if t.src not in known or t.dst not in known:
                raise FtsError(f"transition {t.src} -{t.action}-> {t.dst} has an undeclared endpoint")
        if not self.initial:
            raise FtsError("no initial states")
        for s in self.initial:
            if s not in known:
                raise FtsError(f"initial state {s!r} is not declared")

    @cached_property
    def labels(self) -> dict[str, frozenset[str]]:
        return {s.id: s.labels for s in self.states}

    @cached_property
    def successors(self) -> dict[str, tuple[str, ...]]:
        """Sorted successor lists, with deadlocks closed by a self-loop."""
        succ: dict[str, set[str]] = {s.id: set() for s in self.states}
        for t in self.transitions:
            succ[t.src].add(t.dst)
        return {s: tuple(sorted(d)) if d else (s,) for s, d in succ.items()}

    @cached_property
    def all_labels(self) -> frozenset[str]:
        return frozenset().union(*(s.labels for s in self.states))


@dataclass(frozen=True)
class FtsState:
    id: str
    labels: frozenset[str] = frozenset()
    pc: FeatExpr = TRUE


@dataclass(frozen=True)
class FtsTransition:
    src: str
    action: str
    dst: str
    pc: FeatExpr = TRUE


@dataclass(frozen=True)
class Fts:
    """A transition system whose states and transitions carry presence conditions."""

    fm: FeatureModel
    states: tuple[FtsState, ...]
    transitions: tuple[FtsTransition, ...]
    initial: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "transitions", tuple(self.transitions))
        object.__setattr__(self, "initial", tuple(self.initial))
        ids = [s.id for s in self.states]
        if len(set(ids)) != len(ids):
            raise FtsError("duplicate state ids")
        if not self.initial:
            raise FtsError("no initial states")
        u = self.fm.universe
        by_id = {s.id: s for s in self.states}
        for s in self.states:
            check_bound(s.pc, u)
        for s in self.initial:
            if s not in by_id:
                raise FtsError(f"initial state {s!r} is not declared")
            if not self.fm.conf <= semantics(by_id[s].pc, u):
                raise FtsError(f"initial state {s!r} is absent in some valid configuration")
        for t in self.transitions:
            check_bound(t.pc, u)
            for end in (t.src, t.dst):
                if end not in by_id:
                    raise FtsError(f"transition {t.src} -{t.action}-> {t.dst} has an undeclared endpoint")
                if not self.fm.scope(t.pc) <= semantics(by_id[end].pc, u):
                    raise FtsError(
                        f"transition {t.src} -{t.action}-> {t.dst} can outlive its endpoint {end!r}"
                    )


def derive_fts(m: Fts, c: Configuration) -> TransitionSystem:
    if not m.fm.is_valid(c):
        raise InvalidConfigurationError(f"{c!r} is not a valid configuration")
    states = tuple(State(s.id, s.labels) for s in m.states if sat(c, s.pc))
    alive = {s.id for s in states}
    transitions = []
    for t in m.transitions:
        if sat(c, t.pc):
            if t.src not in alive or t.dst not in alive:
                raise FtsError(f"derived transition {t.src} -{t.action}-> {t.dst} dangles")
            transitions.append(Transition(t.src, t.action, t.dst))
    return TransitionSystem(states, tuple(transitions), m.initial)


register_derivation(Fts, derive_fts)


# --- temporal formulas --------------------------------------------------------


@dataclass(frozen=True)
class AG:
    p: FeatExpr


@dataclass(frozen=True)
class AU:
    p: FeatExpr
    q: FeatExpr


@dataclass(frozen=True)
class EF:
    p: FeatExpr


@dataclass(frozen=True)
class AGImpliesAU:
    """``AG (trigger -> A[hold U release])``."""

    trigger: FeatExpr
    hold: FeatExpr
    release: FeatExpr


TemporalFormula = Union[AG, AU, EF, AGImpliesAU]

_AU = re.compile(r"A\s*\[(?P<p>.*?)\bU\b(?P<q>.*)\]")
_AG_AU = re.compile(r"AG\s*\((?P<t>.*?)->\s*A\s*\[(?P<p>.*?)\bU\b(?P<q>.*)\]\s*\)")


def parse_formula(text: str) -> TemporalFormula:
    """Parse ``AG p``, ``A[p U q]``, ``EF p`` or ``AG (p -> A[q U r])``."""
    s = text.strip()
    try:
        m = _AG_AU.fullmatch(s)
        if m:
            return AGImpliesAU(
                parse_featexpr(m["t"]), parse_featexpr(m["p"]), parse_featexpr(m["q"])
            )
        m = _AU.fullmatch(s)
        if m:
            return AU(parse_featexpr(m["p"]), parse_featexpr(m["q"]))
        if s.startswith("AG"):
            return AG(parse_featexpr(s[2:]))
        if s.startswith("EF"):
            return EF(parse_featexpr(s[2:]))
    except FeatureError as exc:
        raise FtsError(f"bad state predicate in {text!r}: {exc}") from None
    raise FtsError(f"unrecognised temporal formula {text!r}")


def formula_text(phi: TemporalFormula) -> str:
    if isinstance(phi, AG):
        return f"AG ({to_text(phi.p)})"
    if isinstance(phi, EF):
        return f"EF ({to_text(phi.p)})"
    if isinstance(phi, AU):
        return f"A[{to_text(phi.p)} U {to_text(phi.q)}]"
    if isinstance(phi, AGImpliesAU):
        return f"AG ({to_text(phi.trigger)} -> A[{to_text(phi.hold)} U {to_text(phi.release)}])"
    raise TypeError(f"not a temporal formula: {phi!r}")


def formula_atoms(phi: TemporalFormula) -> frozenset[str]:
    if isinstance(phi, AGImpliesAU):
        return phi.trigger.atoms() | phi.hold.atoms() | phi.release.atoms()
    if isinstance(phi, AU):
        return phi.p.atoms() | phi.q.atoms()
    return phi.p.atoms()


# --- product model checking ---------------------------------------------------


@dataclass(frozen=True)
class McResult:
    """Verdict with a counterexample path on failure.

    ``loop`` is the index in ``path`` the last state loops back to, for lasso
    counterexamples.  ``violating`` names the state that breaks the property.
    """

    passed: bool
    path: tuple[str, ...] = ()
    loop: Optional[int] = None
    violating: Optional[str] = None

    def describe(self) -> str:
        if self.passed:
            return "pass"
        if not self.path:
            return f"fail (no witness from initial state {self.violating})"
        trace = " -> ".join(self.path)
        if self.loop is not None:
            trace += f" -> [loop to {self.path[self.loop]}]"
        return f"fail: {trace}"


def _holds(ts: TransitionSystem, p: FeatExpr) -> set[str]:
    return {s.id for s in ts.states if evaluate(p, s.labels)}


def _au_set(ts: TransitionSystem, p: set[str], q: set[str]) -> set[str]:
    z = set(q)
    changed = True
    while changed:
        changed = False
        for s in ts.successors:
            if s not in z and s in p and all(t in z for t in ts.successors[s]):
                z.add(s)
                changed = True
    return z


def _ef_set(ts: TransitionSystem, p: set[str]) -> set[str]:
    z = set(p)
    changed = True
    while changed:
        changed = False
        for s in ts.successors:
            if s not in z and any(t in z for t in ts.successors[s]):
                z.add(s)
                changed = True
    return z


def _bfs_path(ts: TransitionSystem, sources: Iterable[str], targets: set[str], allowed=None):
    """Shortest path from ``sources`` to a target, exploring in sorted order."""
    parent: dict[str, Optional[str]] = {}
    queue: deque[str] = deque()
    for s in sorted(sources):
        if s not in parent:
            parent[s] = None
            queue.append(s)
    while queue:
        s = queue.popleft()
        if s in targets:
            path = [s]
            while parent[path[-1]] is not None:
                path.append(parent[path[-1]])
            return tuple(reversed(path))
        if allowed is not None and s not in allowed:
            continue
        for t in ts.successors[s]:
            if t not in parent:
                parent[t] = s
                queue.append(t)
    return None


def _au_counterexample(ts: TransitionSystem, start: str, p: set[str], z: set[str]) -> McResult:
    """Counterexample to ``A[p U q]`` from ``start``, which lies outside ``z``."""
    bad_end = {s for s in ts.successors if s not in z and s not in p}
    # only p-states that already fail may be passed through
    path = _bfs_path(ts, [start], bad_end, allowed=p - z)
    if path is not None:
        return McResult(False, path, None, path[-1])
    path = [start]
    seen = {start: 0}
    while True:
        nxt = next(t for t in ts.successors[path[-1]] if t not in z)
        if nxt in seen:
            return McResult(False, tuple(path), seen[nxt], nxt)
        seen[nxt] = len(path)
        path.append(nxt)


def _warn_unknown(labels: frozenset, phi: TemporalFormula) -> None:
    unknown = formula_atoms(phi) - labels
    if unknown:
        warnings.warn(f"labels {sorted(unknown)} occur in no state; they evaluate false", stacklevel=3)


def mc_product(ts: TransitionSystem, phi: TemporalFormula) -> McResult:
    _warn_unknown(ts.all_labels, phi)
    return _mc(ts, phi)


def _mc(ts: TransitionSystem, phi: TemporalFormula) -> McResult:
    init = sorted(set(ts.initial))
    if isinstance(phi, AG):
        bad = set(ts.successors) - _holds(ts, phi.p)
        path = _bfs_path(ts, init, bad)
        return McResult(True) if path is None else McResult(False, path, None, path[-1])
    if isinstance(phi, EF):
        z = _ef_set(ts, _holds(ts, phi.p))
        failing = [s for s in init if s not in z]
        return McResult(True) if not failing else McResult(False, (), None, failing[0])
    if isinstance(phi, AU):
        p = _holds(ts, phi.p)
        z = _au_set(ts, p, _holds(ts, phi.q))
        failing = [s for s in init if s not in z]
        return McResult(True) if not failing else _au_counterexample(ts, failing[0], p, z)
    if isinstance(phi, AGImpliesAU):
        hold = _holds(ts, phi.hold)
        z = _au_set(ts, hold, _holds(ts, phi.release))
        bad = _holds(ts, phi.trigger) - z
        prefix = _bfs_path(ts, init, bad)
        if prefix is None:
            return McResult(True)
        tail = _au_counterexample(ts, prefix[-1], hold, z)
        loop = None if tail.loop is None else tail.loop + len(prefix) - 1
        return McResult(False, prefix[:-1] + tail.path, loop, tail.violating)
    raise TypeError(f"not a temporal formula: {phi!r}")


# --- family model checking ----------------------------------------------------


@dataclass(frozen=True)
class FamilyMcResult:
    """One model-checking result per class of configurations with equal products."""

    classes: tuple[tuple[ConfigSet, McResult], ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for _, r in self.classes)

    def at(self, c: Configuration) -> McResult:
        for cs, r in self.classes:
            if c in cs:
                return r
        raise KeyError(f"{c!r} is not covered by this result")

    def failing(self) -> Optional[ConfigSet]:
        bad = [cs for cs, r in self.classes if not r.passed]
        if not bad:
            return None
        out = bad[0]
        for cs in bad[1:]:
            out = out | cs
        return out


@dataclass(frozen=True)
class QuasiMcResult:
    """Single family verdict; on failure one counterexample and its configurations."""

    passed: bool
    counterexample: Optional[McResult] = None
    configs: Optional[ConfigSet] = None


def product_classes(m: Fts, scope: Optional[FeatExpr] = None) -> list[tuple[ConfigSet, TransitionSystem]]:
    """Partition the valid configurations (optionally within ``scope``) by derived product."""
    conf = m.fm.conf if scope is None else m.fm.scope(scope)
    groups: dict[TransitionSystem, list[Configuration]] = {}
    for c in conf:
        groups.setdefault(derive_fts(m, c), []).append(c)
    return [(ConfigSet.of(m.fm.universe, cs), ts) for ts, cs in groups.items()]


def mc_family(
    m: Fts, phi: TemporalFormula, mode: str = "exact", scope: Optional[FeatExpr] = None
) -> Union[FamilyMcResult, QuasiMcResult]:
    # warn once against the family; a label may be absent from some products only
    _warn_unknown(frozenset().union(*(st.labels for st in m.states)), phi)
    results = [(cs, _mc(ts, phi)) for cs, ts in product_classes(m, scope)]
    if mode == "exact":
        return FamilyMcResult(tuple(results))
    if mode == "quasi":
        for cs, r in results:
            if not r.passed:
                return QuasiMcResult(False, r, cs)
        return QuasiMcResult(True)
    raise ValueError(f"unknown mode {mode!r}")


register_derivation(FamilyMcResult, lambda r, c: r.at(c))


# --- queries ----------------------------------------------------------------


def _glob(pattern: str) -> re.Pattern:
    return re.compile(".*".join(re.escape(part) for part in pattern.split("*")))


def query(ts: TransitionSystem, pattern: str) -> tuple[str, ...]:
    """Ids of states with at least one label matching ``pattern`` (``*`` wildcard)."""
    rx = _glob(pattern)
    return tuple(sorted(s.id for s in ts.states if any(rx.fullmatch(l) for l in s.labels)))


def vquery(m: Fts, pattern: str) -> VarSet:
    rx = _glob(pattern)
    hits = sorted(
        (s for s in m.states if any(rx.fullmatch(l) for l in s.labels)), key=lambda s: s.id
    )
    return VarSet.of(m.fm.universe, [(s.id, s.pc) for s in hits])
