"""Built-in templates: domain decomposition, identity, and analytic templates.

An analytic template decomposes a claim ``x[0]`` about an input ``x[1] =
(model, spec)`` through one analysis run.  Its subgoals are: the model
represents the system, the spec formalizes the claim, the analysis produced
the recorded output (evidence), and the analysis is sound.  The query template
adds a fifth subgoal stating the claim's predicate on every element of the
output, so the output can be decomposed further.

Lifted analytic templates run a family analysis instead and add a subgoal
backed by the lift check of that analysis on this input.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

from placidus.evidence import (
    Analytic,
    VariationalEvidence,
    lift_certificate,
    machine_record,
    run_lifted,
)
from placidus.featexpr import TRUE, ConfigSet, Configuration, FeatExpr, FeatureModel
from placidus.gsn import (
    FORALL,
    NIL,
    Evidence,
    InstantiationError,
    PredGoal,
    Template,
    TemplateInstance,
    _forall_text,
    domdecomp_instantiate,
    undeveloped,
)
from placidus.registry import Registry, is_complete
from placidus.variability import VarSet, derive
from placidus.vgsn import (
    VEvidence,
    VGoal,
    VStrategy,
    VTemplate,
    VTemplateInstance,
    _vdomdecomp_inst,
    derive_node,
    lift_template,
    vundeveloped,
)

LIFTED_VIEW = "lifted-analytic"


@dataclass(frozen=True)
class AnalyticSpec:
    id: str
    analysis: str
    consequence: bool = False
    description: str = ""


def _claim_key(claim) -> str:
    return getattr(claim, "key", str(claim))


def _side_goals(aid: str, claim, inp) -> tuple[PredGoal, PredGoal, PredGoal]:
    key = _claim_key(claim)
    model, spec = inp
    return (
        PredGoal("represents", (model, key), f"the model represents the system with respect to {key}"),
        PredGoal("formalizes", (spec, key), f"the specification formalizes {key}"),
        PredGoal("analysis_sound", aid, f"analysis {aid} is sound"),
    )


def _result_goal(aid: str, inp, out) -> PredGoal:
    return PredGoal("analysis_result", (aid, inp, out), f"analysis {aid} produced the recorded output")


def _consequence_goal(out, pred: str) -> PredGoal:
    return PredGoal(FORALL, (out, pred), f"{pred} holds for every element of the analysis output")


# --- product analytic templates ---------------------------------------------------


def analytic_template(spec: AnalyticSpec, registry: Registry) -> Template:
    def prec(x, d) -> bool:
        claim, inp = x
        if spec.consequence and not isinstance(d, str):
            return False
        return spec.analysis in registry.analyses and isinstance(inp, tuple) and len(inp) == 2

    def inst(x, d, prefix: str = "G", labels: Optional[tuple] = None) -> list:
        claim, inp = x
        a = registry.analysis(spec.analysis)
        try:
            out = a.run(inp)
        except Exception as exc:
            raise InstantiationError(f"analysis {a.id} could not run: {exc}") from exc
        goals = list(_side_goals(a.id, claim, inp))
        if labels:
            goals = [PredGoal(g.pred, g.data, t or g.text) for g, t in zip(goals, (labels[0], labels[1], labels[-1]))]
        g1, g2, g4 = goals
        # a failing verdict is still a result: the record says fail and carries the counterexample
        rec = machine_record(a.id, inp, out, bool(a.verdict(out)), a.describe(out))
        g3 = _result_goal(a.id, inp, out)
        if labels and len(labels) > 2 and labels[2]:
            g3 = PredGoal(g3.pred, g3.data, labels[2])
        nodes = [
            undeveloped(f"{prefix}.1", g1),
            undeveloped(f"{prefix}.2", g2),
            Evidence(f"{prefix}.3", g3, rec),
            undeveloped(f"{prefix}.4", g4),
        ]
        if spec.consequence:
            nodes.append(undeveloped(f"{prefix}.5", _consequence_goal(frozenset(out), d)))
        return nodes

    return Template(spec.id, lambda x: x[0], prec, inst, None, spec.description)


def analytic_instantiate(
    template_id: str, x: Any, d: Any = None, labels: Optional[tuple] = None, prefix: str = "G",
    registry: Optional[Registry] = None,
) -> list:
    """Subgoals of a product analytic template; ``labels`` overrides the G1..G4 texts."""
    from placidus.registry import default_registry

    reg = registry or default_registry()
    t = reg.template(template_id)
    if not t.prec(x, d):
        raise InstantiationError(f"precondition of template {template_id!r} does not hold")
    return t.inst(x, d, prefix, labels)


# --- lifted analytic templates ---------------------------------------------------------


@dataclass(frozen=True)
class LiftedAnalyticSpec:
    id: str
    base: AnalyticSpec
    lifted: str


def _lifted_children(ls: LiftedAnalyticSpec, x, d, prefix: str, fm: FeatureModel, scope: FeatExpr, reg: Registry):
    """Subgoals of a lifted analytic instantiation, plus the lift report; no gating."""
    key = ("lifted-children", ls.id, x, d, prefix, fm, scope)
    try:
        return reg.memo[key]
    except (KeyError, TypeError):
        pass
    result = _build_lifted_children(ls, x, d, prefix, fm, scope, reg)
    try:
        reg.memo[key] = result
    except TypeError:
        pass
    return result


def _build_lifted_children(ls, x, d, prefix, fm, scope, reg):
    claim, inp = x
    la = reg.lifted_analysis(ls.lifted)
    try:
        out, cert = run_lifted(la.id, inp, fm, scope, reg)
        report, lcert = lift_certificate(la.id, inp, fm, scope, reg)
    except Exception as exc:
        raise InstantiationError(f"analysis {la.id} could not run: {exc}") from exc
    g1, g2, g4 = _side_goals(la.product, claim, inp)
    if la.mode == "exact":
        g3 = _result_goal(la.product, inp, out)
    else:
        g3 = PredGoal(
            "family_no_violation", (la.id, inp, bool(la.family_ok(out))),
            f"family analysis {la.id} reported no violation",
        )
    nodes = [
        vundeveloped(f"{prefix}.1", TRUE, g1),
        vundeveloped(f"{prefix}.2", TRUE, g2),
        VEvidence(f"{prefix}.3", VGoal(TRUE, g3), VariationalEvidence(scope, Analytic(cert))),
        vundeveloped(f"{prefix}.4", TRUE, g4),
    ]
    if ls.base.consequence:
        nodes.append(vundeveloped(f"{prefix}.5", TRUE, _consequence_goal(out, d)))
    lift_goal = PredGoal(
        "lift_correct", (la.id, la.product, la.mode, inp),
        f"{la.id} is a {la.mode} lift of {la.product} on this input",
    )
    nodes.append(
        VEvidence(f"{prefix}.{len(nodes) + 1}", VGoal(TRUE, lift_goal), VariationalEvidence(scope, Analytic(lcert)))
    )
    return nodes, report, cert


def lifted_analytic_template(ls: LiftedAnalyticSpec, reg: Registry) -> VTemplate:
    def inst(x, d, prefix, fm, scope=TRUE):
        nodes, report, cert = _lifted_children(ls, x, d, prefix, fm, scope, reg)
        if not report.ok:
            raise InstantiationError(f"{ls.lifted} is not a lift here: {report.summary()}", report.witnesses)
        return nodes

    def obligation(x, d, fm, scope=TRUE):
        _, report, _ = _lifted_children(ls, x, d, "", fm, scope, reg)
        return report

    def retarget(ti: VTemplateInstance, c: Configuration) -> TemplateInstance:
        x, d, fm = ti.data, ti.aux[0], ti.aux[1]
        return TemplateInstance(LIFTED_VIEW, (ls.id, x, d, fm, ti.scope, c))

    def check_prec(ti: VTemplateInstance, fm, scope, reg_) -> bool:
        ev = ti.prec_evidence
        if ev is None or not isinstance(ev.kind, Analytic):
            return False
        report, fresh = lift_certificate(ls.lifted, ti.data[1], fm, scope, reg_)
        cert = ev.kind.certificate
        return (
            report.ok
            and fresh.input_digest == cert.input_digest
            and fresh.output_digest == cert.output_digest
            and not (fm.scope(scope) - cert.passing)
        )

    def vprec(x, d, fm, scope=TRUE):
        return ConfigSet.empty(fm.universe)

    return VTemplate(
        ls.id, LIFTED_VIEW, lambda x: x[0],
        lambda x, d, prefix, fm, scope=TRUE: inst(x, d[0] if isinstance(d, tuple) else d, prefix, fm, scope),
        retarget,
        lambda x, d, fm, scope=TRUE: obligation(x, d[0] if isinstance(d, tuple) else d, fm, scope),
        check_prec,
        vprec,
        f"{ls.base.description} over the whole family",
    )


def lifted_analytic_instantiate(
    vtemplate_id: str,
    node: VStrategy,
    x: Any,
    fm: FeatureModel,
    scope: FeatExpr = TRUE,
    pred: Optional[str] = None,
    registry: Optional[Registry] = None,
) -> VStrategy:
    """Decompose ``node`` with a lifted analytic template; refuses if the lift fails."""
    from placidus.registry import default_registry

    reg = registry or default_registry()
    vt = reg.vtemplate(vtemplate_id)
    report = vt.obligation(x, (pred, fm), fm, scope)
    if not report.ok:
        raise InstantiationError(f"{vt.id}: {report.summary()}", report.witnesses)
    la_id = _LIFTED_SPECS[vtemplate_id].lifted
    _, lcert = lift_certificate(la_id, x[1], fm, scope, reg)
    children = vt.inst(x, (pred, fm), node.id, fm, scope)
    prec = VariationalEvidence(scope, Analytic(lcert))
    return VStrategy(
        node.id, VGoal(node.goal.pc, x[0]), VTemplateInstance(vt.id, x, (pred, fm), scope, prec),
        tuple(children), node.description,
    )


def _lifted_view(reg: Registry) -> Template:
    """Product-side template for nodes derived from a lifted analytic instantiation.

    The data is ``(vtemplate, x, d, fm, scope, c)``; the precondition is the
    pointwise lift at ``c``, and the subgoals are the variational subgoals
    derived at ``c``.
    """

    def parent(data):
        _, x, _, _, _, c = data
        return derive(x[0], c)

    def prec(data, aux) -> bool:
        vid, x, d, fm, scope, c = data
        if c not in fm.scope(scope):
            return False
        la = reg.lifted_analysis(_LIFTED_SPECS[vid].lifted)
        product = reg.analysis(la.product)
        key = ("family-output", la.id, x[1], fm, scope)
        if key not in reg.memo:
            reg.memo[key] = la.run(x[1], fm, scope)
        out = reg.memo[key]
        local = product.run(derive(x[1], c))
        if la.mode == "exact":
            return la.out_derive(out, c) == local
        return (not la.family_ok(out)) or bool(product.verdict(local))

    def inst(data, aux, prefix: str = "G") -> list:
        vid, x, d, fm, scope, c = data
        nodes, _, _ = _lifted_children(_LIFTED_SPECS[vid], x, d, prefix, fm, scope, reg)
        derived = (derive_node(n, c, reg) for n in nodes)
        return [n for n in derived if n is not NIL]

    return Template(LIFTED_VIEW, parent, prec, inst, None, "lifted analytic template seen in one product")


# --- domain decomposition and identity -----------------------------------------------------


def _as_set(s):
    return s if isinstance(s, VarSet) else frozenset(s)


def _values(s):
    return s.values() if isinstance(s, VarSet) else s


def domdecomp_template() -> Template:
    return Template(
        "domdecomp",
        lambda x: PredGoal(FORALL, (_as_set(x[0]), x[1]), _forall_text(_values(x[0]), x[1])),
        lambda x, d: is_complete((x[0], d)),
        lambda x, d, prefix="G": domdecomp_instantiate(x[0], d, x[1], prefix),
        "complete",
        "split a universally quantified claim over a covering family",
        lambda x, d: (x[0], d),
    )


def identity_template() -> Template:
    return Template(
        "identity",
        lambda x: x,
        lambda x, d: True,
        lambda x, d, prefix="G": [undeveloped(f"{prefix}.1", x)],
        None,
        "restate a goal unchanged",
    )


def _videntity_inst(x, d, prefix, fm=None, scope=TRUE):
    return [vundeveloped(f"{prefix}.1", TRUE, x)]


ANALYTIC_SPECS = (
    AnalyticSpec("mc", "mc", False, "argue a claim by model checking"),
    AnalyticSpec("query", "query", True, "argue a claim by querying the model"),
)

_LIFTED_SPECS: dict[str, LiftedAnalyticSpec] = {
    "lifted-mc-exact": LiftedAnalyticSpec("lifted-mc-exact", ANALYTIC_SPECS[0], "mc-family"),
    "lifted-mc-quasi": LiftedAnalyticSpec("lifted-mc-quasi", ANALYTIC_SPECS[0], "mc-family-quasi"),
    "lifted-query": LiftedAnalyticSpec("lifted-query", ANALYTIC_SPECS[1], "vquery"),
}


def install_builtin_templates(reg: Registry) -> None:
    dd = domdecomp_template()
    ident = identity_template()
    reg.templates[dd.id] = dd
    reg.templates[ident.id] = ident
    for spec in ANALYTIC_SPECS:
        reg.templates[spec.id] = analytic_template(spec, reg)
    reg.templates[LIFTED_VIEW] = _lifted_view(reg)
    lift_template(dd, _vdomdecomp_inst, reg, "vdomdecomp")
    lift_template(ident, _videntity_inst, reg, "videntity")
    for ls in _LIFTED_SPECS.values():
        reg.vtemplates[ls.id] = lifted_analytic_template(ls, reg)
