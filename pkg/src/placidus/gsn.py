"""Product-level assurance cases: goals, evidence, strategies and deductive checking."""

from __future__ import annotations

import enum
import dataclasses
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, Optional, Union

from placidus.evidence import AttestedRecord, EvidenceRecord, MachineRecord
from placidus.registry import Registry, RegistryError, default_registry
from placidus.variability import derive, register_derivation


class GsnError(ValueError):
    pass


class DanglingReferenceError(GsnError):
    pass


class InstantiationError(GsnError):
    def __init__(self, message: str, witnesses: tuple = ()):
        self.witnesses = witnesses
        super().__init__(message)


# --- goals -------------------------------------------------------------------


@dataclass(frozen=True)
class AtomGoal:
    """An opaque claim; it can only ever be attested."""

    claim: str
    text: str = field(default="", compare=False)

    @property
    def key(self) -> str:
        return self.claim


@dataclass(frozen=True)
class PredGoal:
    """The claim ``pred(data)``; ``data`` may be variational in a PL AC."""

    pred: str
    data: Any
    text: str = field(default="", compare=False)

    @property
    def key(self) -> str:
        return self.pred


Goal = Union[AtomGoal, PredGoal]


def _derive_goal(g: PredGoal, c) -> PredGoal:
    return PredGoal(g.pred, derive(g.data, c), g.text)


register_derivation(PredGoal, _derive_goal)


# --- nodes -------------------------------------------------------------------


class _Nil:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NIL"


NIL = _Nil()


@dataclass(frozen=True)
class Axiomatic:
    rationale: str


@dataclass(frozen=True)
class TemplateInstance:
    template: str
    data: Any
    aux: Any = None
    prec_evidence: Optional[EvidenceRecord] = None


StrategyJustification = Union[TemplateInstance, Axiomatic]


@dataclass(frozen=True)
class Evidence:
    id: str
    goal: Goal
    record: EvidenceRecord
    description: str = field(default="", compare=False)


@dataclass(frozen=True)
class Strategy:
    id: str
    goal: Goal
    justification: Optional[StrategyJustification] = None
    children: tuple["GsnNode", ...] = ()
    description: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))


GsnNode = Union[_Nil, Evidence, Strategy]


def undeveloped(node_id: str, goal: Goal, description: str = "") -> Strategy:
    return Strategy(node_id, goal, None, (), description)


def preorder(node) -> Iterator:
    if node is NIL:
        return
    yield node
    for child in getattr(node, "children", ()):
        yield from preorder(child)


def find(node, node_id: str):
    for n in preorder(node):
        if n.id == node_id:
            return n
    raise KeyError(node_id)


def replace(node, node_id: str, new):
    """Copy of ``node`` with the subtree rooted at ``node_id`` replaced by ``new``."""
    if node is NIL:
        return node
    if node.id == node_id:
        return new
    children = getattr(node, "children", None)
    if not children:
        return node
    updated = tuple(replace(ch, node_id, new) for ch in children)
    if all(a is b for a, b in zip(updated, children)):
        return node
    return dataclasses.replace(node, children=updated)


def present_children(node: Strategy) -> tuple:
    return tuple(ch for ch in node.children if ch is not NIL)


# --- templates ----------------------------------------------------------------


@dataclass(frozen=True)
class Template:
    """A goal-decomposition rule.

    ``parent(x)`` is the goal it decomposes, ``prec(x, d)`` its validity
    precondition and ``inst(x, d, prefix)`` the subgoal nodes, with ids under
    ``prefix``.  Only the child goals matter for refinement.  When
    ``prec_pred`` is set, ``prec_input(x, d)`` is the data it is checked on.
    """

    id: str
    parent: Callable[[Any], Goal]
    prec: Callable[[Any, Any], bool]
    inst: Callable[..., list]
    prec_pred: Optional[str] = None
    description: str = ""
    prec_input: Callable[[Any, Any], Any] = lambda x, d: (x, d)


def instantiate(template: Template, node_id: str, x: Any, d: Any = None, description: str = "") -> Strategy:
    """Build the strategy node decomposing ``template.parent(x)`` with the template's subgoals."""
    try:
        ok = template.prec(x, d)
    except Exception as exc:
        raise InstantiationError(f"precondition of {template.id!r} could not be evaluated: {exc}") from exc
    if not ok:
        raise InstantiationError(f"precondition of template {template.id!r} does not hold")
    try:
        children = template.inst(x, d, prefix=node_id)
    except InstantiationError:
        raise
    except Exception as exc:
        raise InstantiationError(f"instantiation of {template.id!r} failed: {exc}") from exc
    return Strategy(node_id, template.parent(x), TemplateInstance(template.id, x, d), tuple(children), description)


# --- checking -----------------------------------------------------------------


class Status(enum.Enum):
    CERTIFIED = "certified"
    ASSUMED = "assumed"
    EVIDENCE_BACKED = "evidence-backed"
    UNDEVELOPED = "undeveloped"
    BROKEN = "broken"

    @property
    def rank(self) -> int:
        return _RANK[self]

    @property
    def ok(self) -> bool:
        return self.rank <= _RANK[Status.EVIDENCE_BACKED]


_RANK = {
    Status.CERTIFIED: 0,
    Status.ASSUMED: 1,
    Status.EVIDENCE_BACKED: 2,
    Status.UNDEVELOPED: 3,
    Status.BROKEN: 4,
}


def worst(statuses) -> Status:
    return max(statuses, key=lambda s: s.rank, default=Status.CERTIFIED)


def refines_check(node: Strategy, registry: Optional[Registry] = None) -> Status:
    """Status of one strategy: does the justification make its children imply its goal?"""
    if not isinstance(node, Strategy):
        raise GsnError("refines_check needs a strategy node")
    reg = registry or default_registry()
    just = node.justification
    children = present_children(node)
    if just is None:
        return Status.UNDEVELOPED if not children else Status.BROKEN
    if isinstance(just, Axiomatic):
        return Status.ASSUMED
    try:
        template = reg.template(just.template)
    except RegistryError as exc:
        raise DanglingReferenceError(str(exc)) from None
    try:
        if node.goal != template.parent(just.data):
            return Status.BROKEN
        if not template.prec(just.data, just.aux):
            return Status.BROKEN
        expected = template.inst(just.data, just.aux, prefix=node.id)
    except (DanglingReferenceError, RegistryError):
        raise
    except Exception:
        return Status.BROKEN
    if [ch.goal for ch in children] != [n.goal for n in expected]:
        return Status.BROKEN
    return Status.CERTIFIED


def node_status(node, registry: Optional[Registry] = None) -> Status:
    """Status of a node on its own, ignoring its descendants."""
    if node is NIL:
        return Status.UNDEVELOPED
    if isinstance(node, Evidence):
        rec = node.record
        if isinstance(rec, AttestedRecord):
            return Status.ASSUMED
        return Status.EVIDENCE_BACKED if rec.passed else Status.BROKEN
    if not present_children(node):
        return Status.UNDEVELOPED
    return refines_check(node, registry)


@dataclass(frozen=True)
class DeductiveReport:
    statuses: dict[str, Status]
    subtree: dict[str, Status]
    root: Status
    assumptions: tuple[str, ...]

    @property
    def deductive(self) -> bool:
        return self.root.ok

    def count(self, status: Status) -> int:
        return sum(1 for s in self.statuses.values() if s is status)

    @property
    def verdict(self) -> str:
        if not self.deductive:
            return (
                f"not deductive ({self.count(Status.BROKEN)} broken, "
                f"{self.count(Status.UNDEVELOPED)} undeveloped)"
            )
        n = len(self.assumptions)
        if n == 0:
            return "deductive"
        return f"deductive modulo {n} assumption{'s' if n != 1 else ''}"


def deductive_check(ac, registry: Optional[Registry] = None) -> DeductiveReport:
    reg = registry or default_registry()
    statuses: dict[str, Status] = {}
    subtree: dict[str, Status] = {}

    def go(node) -> Status:
        own = node_status(node, reg)
        if node is NIL:
            return own
        statuses[node.id] = own
        below = [go(ch) for ch in present_children(node)] if isinstance(node, Strategy) else []
        subtree[node.id] = worst([own, *below])
        return subtree[node.id]

    root = go(ac)
    assumptions = tuple(i for i, s in statuses.items() if s is Status.ASSUMED)
    return DeductiveReport(statuses, subtree, root, assumptions)


# --- domain decomposition -------------------------------------------------------

FORALL = "forall_in_set"


def domdecomp_check_complete(s, family) -> bool:
    """True iff ``s`` is covered by the union of the family's members."""
    covered = frozenset().union(*family) if family else frozenset()
    return frozenset(s) <= covered


def domdecomp_instantiate(s, family, pred: str, prefix: str = "G") -> list[Strategy]:
    if not family and s:
        raise InstantiationError("an empty family cannot decompose a non-empty set")
    return [
        undeveloped(f"{prefix}.{i}", PredGoal(FORALL, (frozenset(x), pred), _forall_text(x, pred)))
        for i, x in enumerate(family, 1)
    ]


def _forall_text(xs, pred: str) -> str:
    shown = ", ".join(sorted(map(str, xs)))
    return f"{pred} holds for every element of {{{shown}}}"
