"""Random instances and brute-force oracles shared by the test modules."""

from __future__ import annotations

import random
from functools import lru_cache
from typing import Optional

from hypothesis import strategies as st

from placidus import casestudy as cs
from placidus.evidence import (
    Analytic,
    AnalyticCertificate,
    Attested,
    AttestedRecord,
    Exhaustive,
    VariationalEvidence,
    machine_record,
    run_lifted,
)
from placidus.featexpr import (
    FALSE,
    TRUE,
    And,
    Atom,
    ConfigSet,
    FeatExpr,
    FeatureModel,
    FeatureUniverse,
    Not,
    Or,
    conj,
    evaluate,
)
from placidus.fts import AG, AU, EF, AGImpliesAU, Fts, FtsState, FtsTransition, State, Transition, TransitionSystem
from placidus.gsn import AtomGoal, Axiomatic, deductive_check
from placidus.registry import Registry, default_registry
from placidus.templates import lifted_analytic_instantiate
from placidus.variability import Annotated, VarSet
from placidus.vgsn import (
    PlAc,
    VEvidence,
    VGoal,
    VStrategy,
    aggregate,
    derive_ac,
    explode,
    vfind,
    vinstantiate,
    vreplace,
    walk,
)

FEATURES = ("A", "B", "C", "D", "E", "F")
LABELS = ("p", "q", "r")


# --- feature expressions --------------------------------------------------------


def rand_expr(rng: random.Random, names, depth: int = 3) -> FeatExpr:
    roll = rng.random()
    if depth == 0 or roll < 0.3:
        if rng.random() < 0.1:
            return rng.choice((TRUE, FALSE))
        return Atom(rng.choice(names))
    if roll < 0.45:
        return Not(rand_expr(rng, names, depth - 1))
    op = And if rng.random() < 0.5 else Or
    return op(rand_expr(rng, names, depth - 1), rand_expr(rng, names, depth - 1))


def rand_pc(rng: random.Random, names, p_true: float = 0.5) -> FeatExpr:
    return TRUE if rng.random() < p_true else rand_expr(rng, names, 2)


def rand_fm(rng: random.Random, max_features: int = 4, min_features: int = 1) -> FeatureModel:
    """A feature model with at least one valid configuration."""
    n = rng.randint(min_features, max_features)
    u = FeatureUniverse(FEATURES[:n])
    while True:
        expr = TRUE if rng.random() < 0.3 else rand_expr(rng, u.features, 2)
        fm = FeatureModel(u, expr)
        if fm.conf:
            return fm


def exprs(names=("A", "B", "C")):
    """Hypothesis strategy for feature expressions over ``names``."""
    leaves = st.one_of(st.sampled_from([TRUE, FALSE]), st.sampled_from(names).map(Atom))
    return st.recursive(
        leaves,
        lambda sub: st.one_of(
            sub.map(Not),
            st.tuples(sub, sub).map(lambda t: And(*t)),
            st.tuples(sub, sub).map(lambda t: Or(*t)),
        ),
        max_leaves=8,
    )


# --- variational sets ------------------------------------------------------------------


def rand_varset(rng: random.Random, fm: FeatureModel, max_size: int = 8) -> VarSet:
    names = fm.universe.features
    return VarSet(
        fm.universe,
        tuple(Annotated(rng.randint(0, 9), rand_pc(rng, names)) for _ in range(rng.randint(0, max_size))),
    )


# --- transition systems ----------------------------------------------------------------


def rand_labels(rng: random.Random) -> frozenset:
    return frozenset(l for l in LABELS if rng.random() < 0.4)


def rand_ts(rng: random.Random, max_states: int = 6, density: float = 0.3) -> TransitionSystem:
    n = rng.randint(1, max_states)
    ids = [f"s{i}" for i in range(n)]
    states = tuple(State(i, rand_labels(rng)) for i in ids)
    trans = tuple(
        Transition(a, "t", b) for a in ids for b in ids if rng.random() < density
    )
    initial = tuple(i for i in ids if rng.random() < 0.3) or (ids[0],)
    return TransitionSystem(states, trans, initial)


def rand_state_pred(rng: random.Random) -> FeatExpr:
    return rand_expr(rng, LABELS, 2)


def rand_formula(rng: random.Random):
    kind = rng.randrange(4)
    if kind == 0:
        return AG(rand_state_pred(rng))
    if kind == 1:
        return EF(rand_state_pred(rng))
    if kind == 2:
        return AU(rand_state_pred(rng), rand_state_pred(rng))
    return AGImpliesAU(rand_state_pred(rng), rand_state_pred(rng), rand_state_pred(rng))


def rand_fts(
    rng: random.Random, fm: Optional[FeatureModel] = None, max_states: int = 8, labels=LABELS
) -> Fts:
    fm = fm or rand_fm(rng, 4)
    names = fm.universe.features
    n = rng.randint(1, max_states)
    ids = [f"s{i}" for i in range(n)]
    pcs = {i: (TRUE if k == 0 else rand_pc(rng, names)) for k, i in enumerate(ids)}
    states = tuple(FtsState(i, frozenset(l for l in labels if rng.random() < 0.4), pcs[i]) for i in ids)
    trans = []
    for a in ids:
        for b in ids:
            if rng.random() < 0.3:
                trans.append(FtsTransition(a, "t", b, conj([pcs[a], pcs[b], rand_pc(rng, names)])))
    return Fts(fm, states, tuple(trans), (ids[0],))


# --- path-enumeration model checking oracle --------------------------------------------------


def _succ(ts: TransitionSystem) -> dict:
    out = {s.id: [] for s in ts.states}
    for t in ts.transitions:
        if t.dst not in out[t.src]:
            out[t.src].append(t.dst)
    # a deadlocked state stutters forever
    return {s: (d or [s]) for s, d in out.items()}


def _simple_paths(succ, start):
    stack = [(start,)]
    while stack:
        path = stack.pop()
        yield path
        for nxt in succ[path[-1]]:
            if nxt not in path:
                stack.append(path + (nxt,))


def _reachable(ts, succ) -> set:
    return {p[-1] for s in set(ts.initial) for p in _simple_paths(succ, s)}


def _au_holds(ts, succ, s, p, q) -> bool:
    """Every path from ``s`` reaches ``q`` through ``p`` states: explore paths until they settle."""
    lab = ts.labels
    stack = [(s,)]
    while stack:
        path = stack.pop()
        cur = path[-1]
        if evaluate(q, lab[cur]):
            continue
        if not evaluate(p, lab[cur]):
            return False
        for nxt in succ[cur]:
            if nxt in path:
                # a cycle of p-and-not-q states never releases
                return False
            stack.append(path + (nxt,))
    return True


def oracle_mc(ts: TransitionSystem, phi) -> bool:
    succ = _succ(ts)
    lab = ts.labels
    if isinstance(phi, AG):
        return all(evaluate(phi.p, lab[s]) for s in _reachable(ts, succ))
    if isinstance(phi, EF):
        return all(
            any(evaluate(phi.p, lab[p[-1]]) for p in _simple_paths(succ, s)) for s in set(ts.initial)
        )
    if isinstance(phi, AU):
        return all(_au_holds(ts, succ, s, phi.p, phi.q) for s in set(ts.initial))
    if isinstance(phi, AGImpliesAU):
        return all(
            _au_holds(ts, succ, s, phi.hold, phi.release)
            for s in _reachable(ts, succ)
            if evaluate(phi.trigger, lab[s])
        )
    raise TypeError(phi)


def is_path(ts: TransitionSystem, path) -> bool:
    succ = _succ(ts)
    return all(b in succ[a] for a, b in zip(path, path[1:]))


# --- random PL ACs --------------------------------------------------------------------------


class PlacGen:
    """Random vGSN trees mixing every justification and evidence kind.

    About one strategy in five built from a template is tampered with
    afterwards, so some trees are broken in some configurations.
    """

    def __init__(self, rng: random.Random, fm: FeatureModel, reg: Registry, max_depth: int = 4):
        self.rng = rng
        self.fm = fm
        self.reg = reg
        self.max_depth = max_depth
        self.names = fm.universe.features
        self.claims = 0

    def pc(self) -> FeatExpr:
        return rand_pc(self.rng, self.names, 0.6)

    def atom(self) -> AtomGoal:
        self.claims += 1
        return AtomGoal(f"c{self.claims}")

    def plac(self) -> PlAc:
        pc = self.pc() if self.rng.random() < 0.3 else TRUE
        return PlAc(self.fm, self.node("G", pc, None, pc, 0))

    def evidence(self, eff: FeatExpr) -> VariationalEvidence:
        rng = self.rng
        scope = self.fm.scope(eff)
        roll = rng.random()
        if roll < 0.3:
            return VariationalEvidence(eff, Attested("reviewed", "qa"))
        if roll < 0.7:
            table = {}
            for c in scope:
                if rng.random() < 0.1:
                    table[c] = AttestedRecord("checked by hand")
                else:
                    ok = rng.random() < 0.85
                    table[c] = machine_record("deadlock-check", c.mask, ok, ok)
            return VariationalEvidence(eff, Exhaustive(table))
        passing = scope if rng.random() < 0.7 else ConfigSet.of(
            self.fm.universe, [c for c in scope if rng.random() < 0.7]
        )
        cert = AnalyticCertificate("mc-family", "sha256:x", "sha256:y", passing)
        return VariationalEvidence(eff, Analytic(cert))

    def node(self, node_id: str, pc: FeatExpr, body, eff: FeatExpr, depth: int):
        rng = self.rng
        free = body is None
        goal = VGoal(pc, body if body is not None else self.atom())
        # undeveloped leaves are kept rare so that about half the trees are deductive
        weights = {"evidence": 6, "undeveloped": 1}
        if depth < self.max_depth:
            weights.update(axiomatic=2, identity=1, dd=3 if free else 0)
        kind = rng.choices(list(weights), list(weights.values()))[0]
        if kind == "undeveloped":
            return VStrategy(node_id, goal)
        if kind == "evidence":
            return VEvidence(node_id, goal, self.evidence(eff))
        if kind == "axiomatic":
            children = []
            for i in range(1, rng.randint(1, 3) + 1):
                cpc = self.pc()
                children.append(self.node(f"{node_id}.{i}", cpc, None, conj([eff, cpc]), depth + 1))
            return VStrategy(node_id, goal, Axiomatic("accepted"), tuple(children))
        if kind == "identity":
            stub = VStrategy(node_id, goal)
            node = vinstantiate(self.reg.vtemplate("videntity"), stub, goal.body, None, self.fm, eff)
        else:
            s = rand_varset(rng, self.fm, 6)
            family = explode(s) if rng.random() < 0.5 else aggregate(s)
            goal = VGoal(pc, self.reg.vtemplate("vdomdecomp").parent((s, "p")))
            stub = VStrategy(node_id, goal)
            prec = None
            if rng.random() < 0.5:
                _, cert = run_lifted("complete-family", (s, family), self.fm, eff, self.reg)
                prec = VariationalEvidence(eff, Analytic(cert))
            node = vinstantiate(self.reg.vtemplate("vdomdecomp"), stub, (s, "p"), family, self.fm, eff, prec)
        children = [
            self.node(ch.id, ch.goal.pc, ch.goal.body, conj([eff, ch.goal.pc]), depth + 1) for ch in node.children
        ]
        if children and rng.random() < 0.2:
            children = self.tamper(children, eff, depth)
        return VStrategy(node.id, node.goal, node.justification, tuple(children))

    def tamper(self, children: list, eff: FeatExpr, depth: int) -> list:
        rng = self.rng
        roll = rng.random()
        if roll < 0.4:
            return children[:-1]
        if roll < 0.7 and len(children) > 1:
            return children[::-1]
        i = rng.randrange(len(children))
        ch = children[i]
        cpc = self.pc()
        children[i] = self.node(ch.id, cpc, ch.goal.body, conj([eff, cpc]), depth + 1)
        return children


def brute_force(plac, reg):
    fails, assumptions = set(), {}
    for c in plac.fm.scope(plac.root.goal.pc):
        r = deductive_check(derive_ac(plac, c, reg), reg)
        if not r.deductive:
            fails.add(c)
        assumptions[c] = sorted(r.assumptions)
    return fails, assumptions


# --- the developed pump argument -------------------------------------------------------------


@lru_cache(maxsize=None)
def pump_developed() -> PlAc:
    """The pump PL AC developed through lifted query, explode, lifted model checking and attestation."""
    reg = default_registry()
    fm, m = cs.infusion_fm(), cs.pump_fts()
    plac = cs.pump_root()
    node, eff = vfind(plac.root, "G0")
    new = lifted_analytic_instantiate("lifted-query", node, (node.goal.body, (m, cs.ALARM_PATTERN)), fm, eff,
                                      cs.ALARM_PRED, reg)
    root = vreplace(plac.root, "G0", new)
    node, eff = vfind(root, "G0.5")
    s, pred = node.goal.body.data
    fam = explode(s)
    _, cert = run_lifted("complete-family", (s, fam), fm, eff, reg)
    dd = vinstantiate(reg.vtemplate("vdomdecomp"), node, (s, pred), fam, fm, eff,
                      VariationalEvidence(eff, Analytic(cert)))
    root = vreplace(root, "G0.5", dd)
    for i, alarm in enumerate(cs.ALARMS, 1):
        node, eff = vfind(root, f"G0.5.{i}")
        x = (node.goal.body, (m, cs.alarm_formula(alarm)))
        root = vreplace(root, node.id, lifted_analytic_instantiate("lifted-mc-quasi", node, x, fm, eff, None, reg))
    for node, eff in list(walk(root)):
        if isinstance(node, VStrategy) and node.justification is None and not node.children:
            ev = VEvidence(node.id, node.goal, VariationalEvidence(eff, Attested("reviewed", "qa")))
            root = vreplace(root, node.id, ev)
    return PlAc(fm, root)
