"""Variational GSN: presence-condition-annotated assurance cases over variational data.

Every node carries a local presence condition; a node exists in a product iff
its own condition and those of all its ancestors hold.  Evidence is
variational and scoped to that path conjunction.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterator, Optional, Union

from placidus.evidence import (
    Analytic,
    Attested,
    AttestedRecord,
    EvidenceStatus,
    Exhaustive,
    MissingEvidenceError,
    VariationalEvidence,
    derive_record,
    verify_var_evidence,
)
from placidus.featexpr import (
    TRUE,
    ConfigSet,
    Configuration,
    FeatExpr,
    FeatureModel,
    conj,
    sat,
    semantics,
    to_text,
)
from placidus.fts import InvalidConfigurationError
from placidus.gsn import (
    FORALL,
    NIL,
    Axiomatic,
    Evidence,
    Goal,
    GsnError,
    InstantiationError,
    PredGoal,
    Status,
    Strategy,
    Template,
    TemplateInstance,
    _forall_text,
    refines_check,
    worst,
)
from placidus.registry import Registry, RegistryError, default_registry
from placidus.variability import (
    Annotated,
    LiftReport,
    VarFamily,
    VarSet,
    check_lift,
    derive,
)

# --- tree --------------------------------------------------------------------


@dataclass(frozen=True)
class VGoal:
    pc: FeatExpr
    body: Goal

    @property
    def text(self) -> str:
        return self.body.text


@dataclass(frozen=True)
class VTemplateInstance:
    vtemplate: str
    data: Any
    aux: Any = None
    scope: FeatExpr = TRUE
    prec_evidence: Optional[VariationalEvidence] = None


VStrategyJustification = Union[VTemplateInstance, Axiomatic]


@dataclass(frozen=True)
class VEvidence:
    id: str
    goal: VGoal
    ev: VariationalEvidence
    description: str = field(default="", compare=False)


@dataclass(frozen=True)
class VStrategy:
    id: str
    goal: VGoal
    justification: Optional[VStrategyJustification] = None
    children: tuple["VGsnNode", ...] = ()
    description: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))


VGsnNode = Union[VEvidence, VStrategy]


@dataclass(frozen=True)
class PlAc:
    """A product line of assurance cases: a vGSN tree and its feature model."""

    fm: FeatureModel
    root: VGsnNode


def vundeveloped(node_id: str, pc: FeatExpr, body: Goal, description: str = "") -> VStrategy:
    return VStrategy(node_id, VGoal(pc, body), None, (), description)


def walk(node: VGsnNode, scope: FeatExpr = TRUE) -> Iterator[tuple[VGsnNode, FeatExpr]]:
    """Preorder traversal yielding each node with its effective presence condition."""
    eff = conj([scope, node.goal.pc])
    yield node, eff
    for ch in getattr(node, "children", ()):
        yield from walk(ch, eff)


def vfind(root: VGsnNode, node_id: str) -> tuple[VGsnNode, FeatExpr]:
    for n, eff in walk(root):
        if n.id == node_id:
            return n, eff
    raise KeyError(node_id)


def vreplace(node: VGsnNode, node_id: str, new: VGsnNode) -> VGsnNode:
    if node.id == node_id:
        return new
    if not isinstance(node, VStrategy) or not node.children:
        return node
    updated = tuple(vreplace(ch, node_id, new) for ch in node.children)
    if all(a is b for a, b in zip(updated, node.children)):
        return node
    return replace(node, children=updated)


def validate_plac(plac: PlAc) -> list[str]:
    """Load-time checks: evidence scopes match effective pcs and tables cover them."""
    fm = plac.fm
    problems = []
    ids = set()
    for node, eff in walk(plac.root):
        if node.id in ids:
            problems.append(f"duplicate node id {node.id!r}")
        ids.add(node.id)
        if isinstance(node, VEvidence):
            if fm.scope(node.ev.scope) != fm.scope(eff):
                problems.append(
                    f"{node.id}: evidence scope {to_text(node.ev.scope)!r} differs from "
                    f"effective presence condition {to_text(eff)!r}"
                )
            kind = node.ev.kind
            if isinstance(kind, Exhaustive):
                want = {c.mask for c in fm.scope(eff)}
                have = {k.mask for k in kind.keys()}
                if want != have:
                    problems.append(f"{node.id}: exhaustive evidence does not cover its scope exactly")
    return problems


# --- derivation ----------------------------------------------------------------


def derive_goal(g: VGoal, c: Configuration) -> Goal:
    return derive(g.body, c)


def derive_node(node: VGsnNode, c: Configuration, registry: Optional[Registry] = None):
    """Product node at ``c``, or ``NIL`` when the node is absent."""
    reg = registry or default_registry()
    if not sat(c, node.goal.pc):
        return NIL
    goal = derive_goal(node.goal, c)
    if isinstance(node, VEvidence):
        return Evidence(node.id, goal, derive_record(node.ev, c), node.description)
    children = tuple(d for d in (derive_node(ch, c, reg) for ch in node.children) if d is not NIL)
    return Strategy(node.id, goal, derive_justification(node.justification, c, reg), children, node.description)


def derive_justification(just, c: Configuration, registry: Registry):
    if just is None or isinstance(just, Axiomatic):
        return just
    return registry.vtemplate(just.vtemplate).retarget(just, c)


def derive_ac(plac: PlAc, c: Configuration, registry: Optional[Registry] = None):
    if not plac.fm.is_valid(c):
        raise InvalidConfigurationError(f"{c!r} is not a valid configuration")
    return derive_node(plac.root, c, registry)


# --- variational templates ---------------------------------------------------------


def child_goals(nodes, c: Configuration) -> list[Goal]:
    """Goals of the nodes present at ``c``, in order (the mapFilterNil view)."""
    return [derive_goal(n.goal, c) for n in nodes if sat(c, n.goal.pc)]


@dataclass(frozen=True)
class VTemplate:
    """A template instantiated on variational data.

    ``inst(x, d, prefix, fm, scope)`` builds the variational subgoals;
    ``retarget(instance, c)`` gives the product justification at ``c``;
    ``obligation(x, d, fm, scope)`` is the lift check that gates instantiation;
    ``check_prec(instance, fm, scope, registry)`` verifies the variational
    precondition evidence, enabling certification without per-product descent;
    ``vprec(x, d, fm, scope)`` is the set of configurations where the product
    precondition fails on the derived data.
    """

    id: str
    product: str
    parent: Callable[[Any], Goal]
    inst: Callable[..., list]
    retarget: Callable[[VTemplateInstance, Configuration], TemplateInstance]
    obligation: Callable[..., LiftReport]
    check_prec: Callable[..., bool]
    vprec: Callable[..., ConfigSet]
    description: str = ""


def lift_template(
    template: Template,
    inst_lifted: Callable[..., list],
    registry: Optional[Registry] = None,
    vtemplate_id: Optional[str] = None,
) -> VTemplate:
    """Register a variational version of ``template`` with a mandatory lift obligation.

    Every instantiation checks that deriving ``inst_lifted(x, d)`` at each
    valid configuration gives exactly the goals of ``template.inst`` on the
    derived data.
    """
    reg = registry if registry is not None else default_registry()

    def obligation(x, d, fm: FeatureModel, scope: FeatExpr = TRUE) -> LiftReport:
        return check_lift(
            lambda xd: [n.goal for n in template.inst(xd[0], xd[1], prefix="")],
            lambda xd: inst_lifted(xd[0], xd[1], "", fm, scope),
            (x, d),
            fm,
            out_derive=child_goals,
            scope=scope,
        )

    def retarget(inst: VTemplateInstance, c: Configuration) -> TemplateInstance:
        ev = inst.prec_evidence
        rec = None
        if ev is not None:
            try:
                rec = derive_record(ev, c)
            except MissingEvidenceError:
                rec = None
        return TemplateInstance(template.id, derive(inst.data, c), derive(inst.aux, c), rec)

    def check_prec(inst: VTemplateInstance, fm: FeatureModel, scope: FeatExpr, reg_: Registry) -> bool:
        if inst.prec_evidence is None or template.prec_pred is None:
            return False
        res = verify_var_evidence(
            template.prec_pred, template.prec_input(inst.data, inst.aux), scope, fm, inst.prec_evidence, reg_)
        return res.status is EvidenceStatus.VERIFIED

    def vprec(x, d, fm: FeatureModel, scope: FeatExpr = TRUE) -> ConfigSet:
        bad = [c for c in fm.scope(scope) if not template.prec(derive(x, c), derive(d, c))]
        return ConfigSet.of(fm.universe, bad)

    vt = VTemplate(
        vtemplate_id or f"v{template.id}",
        template.id,
        template.parent,
        inst_lifted,
        retarget,
        obligation,
        check_prec,
        vprec,
        template.description,
    )
    reg.vtemplates[vt.id] = vt
    return vt


def vinstantiate(
    vt: VTemplate,
    node: VStrategy,
    x: Any,
    d: Any,
    fm: FeatureModel,
    scope: FeatExpr,
    prec_evidence: Optional[VariationalEvidence] = None,
) -> VStrategy:
    """Decompose ``node`` (whose effective pc is ``scope``) with ``vt``; refuse failed lifts."""
    if node.goal.body != vt.parent(x):
        raise InstantiationError(f"{vt.id}: the template decomposes a different claim than {node.id}")
    report = vt.obligation(x, d, fm, scope)
    if not report.ok:
        raise InstantiationError(f"{vt.id}: instantiation is not a lift ({report.summary()})", report.witnesses)
    bad = vt.vprec(x, d, fm, scope)
    if bad:
        raise InstantiationError(f"{vt.id}: precondition fails in {len(bad)} configurations", tuple(bad))
    children = vt.inst(x, d, node.id, fm, scope)
    just = VTemplateInstance(vt.id, x, d, scope, prec_evidence)
    return VStrategy(node.id, node.goal, just, tuple(children), node.description)


# --- domain decomposition on variational sets ---------------------------------------------


def explode(s: VarSet) -> VarFamily:
    """One annotated singleton per annotated element."""
    return VarFamily(s.universe, tuple(Annotated(frozenset([e.value]), e.pc) for e in s))


def aggregate(s: VarSet) -> VarFamily:
    """Group elements whose presence conditions denote the same configurations."""
    groups: list[tuple[ConfigSet, list, list[FeatExpr]]] = []
    for e in s:
        sem = semantics(e.pc, s.universe)
        for g_sem, values, pcs in groups:
            if g_sem == sem:
                values.append(e.value)
                pcs.append(e.pc)
                break
        else:
            groups.append((sem, [e.value], [e.pc]))
    return VarFamily(
        s.universe,
        tuple(Annotated(frozenset(vals), min(pcs, key=_pc_key)) for _, vals, pcs in groups),
    )


def _pc_key(pc: FeatExpr) -> tuple[int, str]:
    text = to_text(pc)
    return (len(text), text)


def vdomdecomp_instantiate(s: VarSet, family: VarFamily, pred: str, prefix: str = "G") -> list[VStrategy]:
    if not len(family) and len(s):
        raise InstantiationError("an empty family cannot decompose a non-empty set")
    return [
        vundeveloped(f"{prefix}.{i}", m.pc, PredGoal(FORALL, (m.value, pred), _forall_text(m.value, pred)))
        for i, m in enumerate(family, 1)
    ]


def _vdomdecomp_inst(x, d, prefix, fm=None, scope=TRUE):
    s, pred = x
    return vdomdecomp_instantiate(s, d, pred, prefix)


# --- checking -------------------------------------------------------------------------


def _subtree_at(node: VStrategy, c: Configuration, reg: Registry):
    return derive_node(node, c, reg)


def vrefines_check(
    node: VStrategy,
    fm: FeatureModel,
    scope: FeatExpr = TRUE,
    registry: Optional[Registry] = None,
    method: str = "auto",
) -> tuple[Status, ConfigSet]:
    """Status of a variational strategy over ``scope`` (its effective pc) and where it fails.

    ``method`` is ``"shortcut"`` (precondition evidence only), ``"descent"``
    (refines_check on every derived product) or ``"auto"`` (shortcut, falling
    back to descent).
    """
    reg = registry or default_registry()
    if not isinstance(node, VStrategy):
        raise GsnError("vrefines_check needs a strategy node")
    configs = fm.scope(scope)
    empty = ConfigSet.empty(fm.universe)
    just = node.justification
    if isinstance(just, Axiomatic):
        return Status.ASSUMED, empty
    if just is None:
        if not node.children:
            return Status.UNDEVELOPED, configs
        return Status.BROKEN, configs
    if method in ("auto", "shortcut"):
        if shortcut_certifies(node, fm, scope, reg):
            return Status.CERTIFIED, empty
        if method == "shortcut":
            return Status.BROKEN, configs
    bad = [c for c in configs if refines_check(_subtree_at(node, c, reg), reg) is not Status.CERTIFIED]
    failures = ConfigSet.of(fm.universe, bad)
    return (Status.BROKEN if failures else Status.CERTIFIED), failures


def shortcut_certifies(node: VStrategy, fm: FeatureModel, scope: FeatExpr, registry: Registry) -> bool:
    """Certify from the template certificate alone, without visiting products."""
    just = node.justification
    if not isinstance(just, VTemplateInstance):
        return False
    try:
        vt = registry.vtemplate(just.vtemplate)
        if node.goal.body != vt.parent(just.data):
            return False
        if not vt.check_prec(just, fm, scope, registry):
            return False
        if not vt.obligation(just.data, just.aux, fm, scope).ok:
            return False
        expected = vt.inst(just.data, just.aux, node.id, fm, just.scope)
    except (RegistryError, InstantiationError):
        return False
    return [ch.goal for ch in node.children] == [n.goal for n in expected]


@dataclass(frozen=True)
class VNodeReport:
    status: Status
    by_status: dict[Status, ConfigSet]
    scope: ConfigSet

    @property
    def failures(self) -> ConfigSet:
        return self.by_status[Status.BROKEN] | self.by_status[Status.UNDEVELOPED]


@dataclass(frozen=True)
class VDeductiveReport:
    fm: FeatureModel
    scope: ConfigSet
    nodes: dict[str, VNodeReport]

    @property
    def failures(self) -> ConfigSet:
        out = ConfigSet.empty(self.fm.universe)
        for r in self.nodes.values():
            out = out | r.failures
        return out

    @property
    def deductive(self) -> bool:
        return not self.failures

    def assumptions_at(self, c: Configuration) -> tuple[str, ...]:
        return tuple(i for i, r in self.nodes.items() if c in r.by_status[Status.ASSUMED])

    def assumption_ids(self) -> tuple[str, ...]:
        return tuple(i for i, r in self.nodes.items() if r.by_status[Status.ASSUMED])

    @property
    def verdict(self) -> str:
        if not self.deductive:
            return f"not deductive (fails in {len(self.failures)} of {len(self.scope)} configurations)"
        n = len(self.assumption_ids())
        if n == 0:
            return "deductive"
        return f"deductive modulo {n} assumption{'s' if n != 1 else ''}"


def _evidence_sets(node: VEvidence, configs: ConfigSet, fm: FeatureModel) -> dict[Status, list]:
    out: dict[Status, list] = {s: [] for s in Status}
    kind = node.ev.kind
    if isinstance(kind, Attested):
        out[Status.ASSUMED] = list(configs)
        return out
    for c in configs:
        try:
            rec = derive_record(node.ev, c)
        except MissingEvidenceError:
            out[Status.BROKEN].append(c)
            continue
        if isinstance(rec, AttestedRecord):
            out[Status.ASSUMED].append(c)
        elif rec.passed:
            out[Status.EVIDENCE_BACKED].append(c)
        else:
            out[Status.BROKEN].append(c)
    return out


def vdeductive_check(plac: PlAc, registry: Optional[Registry] = None, method: str = "auto") -> VDeductiveReport:
    """Per-node statuses with the configurations where each status occurs.

    The report is deductive exactly when every product derived within the
    root's scope is deductive, with the same assumptions per product.
    """
    reg = registry or default_registry()
    fm = plac.fm
    u = fm.universe
    nodes: dict[str, VNodeReport] = {}

    def record(node, configs: ConfigSet, sets: dict[Status, ConfigSet]) -> None:
        present = [s for s, cs in sets.items() if cs]
        status = worst(present) if present else Status.CERTIFIED
        nodes[node.id] = VNodeReport(status, sets, configs)

    def go(node, configs: ConfigSet, eff: FeatExpr) -> None:
        if isinstance(node, VEvidence):
            raw = _evidence_sets(node, configs, fm)
            record(node, configs, {s: ConfigSet.of(u, cs) for s, cs in raw.items()})
            return
        child_scopes = [configs & semantics(ch.goal.pc, u) for ch in node.children]
        developed = ConfigSet.empty(u)
        for cs in child_scopes:
            developed = developed | cs
        sets = {s: ConfigSet.empty(u) for s in Status}
        sets[Status.UNDEVELOPED] = configs - developed
        if developed:
            status, failures = vrefines_check(node, fm, eff, reg, method)
            failures = failures & developed
            ok_status = Status.ASSUMED if status is Status.ASSUMED else Status.CERTIFIED
            sets[Status.BROKEN] = failures
            sets[ok_status] = developed - failures
        record(node, configs, sets)
        for ch, cs in zip(node.children, child_scopes):
            go(ch, cs, conj([eff, ch.goal.pc]))

    root_eff = plac.root.goal.pc
    root_scope = fm.scope(root_eff)
    go(plac.root, root_scope, root_eff)
    return VDeductiveReport(fm, root_scope, nodes)
