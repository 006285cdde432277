"""Command-line interface over a workspace.

Exit codes: 0 success, 1 a check failed or was refused, 2 usage or input error.
Every subcommand accepts ``--json`` and then prints one JSON object whose
``exit`` field equals the process exit code.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Optional

from placidus.codec import CodecError
from placidus.evidence import (
    Analytic,
    Attested,
    AttestedRecord,
    VariationalEvidence,
    lift_report,
    run_lifted,
)
from placidus.featexpr import TRUE, FeatureError, FeatureModel, parse_featexpr, to_text
from placidus.fts import Fts, FtsError, TransitionSystem, derive_fts, formula_text, mc_family, mc_product, parse_formula
from placidus.fts import query as run_query
from placidus.fts import vquery
from placidus.frontend.dot import render_dot
from placidus.frontend.workspace import DEMO_DIR, Workspace, WorkspaceError, load_workspace
from placidus.gsn import (
    FORALL,
    Evidence,
    GsnError,
    InstantiationError,
    PredGoal,
    Strategy,
    deductive_check,
    find,
    instantiate,
    preorder,
    replace,
)
from placidus.registry import RegistryError
from placidus.templates import lifted_analytic_instantiate
from placidus.variability import VarSet, check_quasi_lift
from placidus.vgsn import (
    PlAc,
    VEvidence,
    VStrategy,
    aggregate,
    derive_ac,
    explode,
    vdeductive_check,
    vfind,
    vinstantiate,
    vreplace,
    walk,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

LIFTED_ANALYTIC = ("lifted-query", "lifted-mc-exact", "lifted-mc-quasi")
DECOMPOSE = ("domdecomp-explode", "domdecomp-aggregate")

SCHEMA_DIR = Path(__file__).parent / "schemas"


def output_schema(command: str) -> dict:
    """Published JSON schema for ``--json`` output of ``command`` (or ``"error"``)."""
    return json.loads((SCHEMA_DIR / f"{command}.json").read_text())


class UsageError(Exception):
    pass


# --- output -----------------------------------------------------------------


class Out:
    def __init__(self, as_json: bool, stream=None):
        self.as_json = as_json
        self.stream = stream or sys.stdout
        self.lines: list[str] = []

    def line(self, text: str = "") -> None:
        self.lines.append(text)

    def finish(self, payload: dict, code: int) -> int:
        if self.as_json:
            payload["exit"] = code
            print(json.dumps(payload, indent=2, sort_keys=True), file=self.stream)
        else:
            for ln in self.lines:
                print(ln, file=self.stream)
        return code


def _cfg(c) -> str:
    return "{" + str(c) + "}"


def _cfgs(cs) -> list[str]:
    return [_cfg(c) for c in cs]


# --- helpers -------------------------------------------------------------------


def _load(args) -> Workspace:
    return load_workspace(args.workspace)


def _fm_of(ws: Workspace, name: str) -> FeatureModel:
    art = ws.artifact(name)
    v = art.value
    if art.kind == "feature-model":
        return v
    if art.kind in ("fts", "plac"):
        return v.fm
    raise UsageError(f"artifact {name!r} has no feature model")


def _value_or_text(ws: Workspace, text: str, kind: str, parse):
    if text in ws and ws.artifact(text).kind == kind:
        return ws.get(text)
    return parse(text)


def _inputs(ws: Workspace, spec: Optional[str]) -> tuple:
    if not spec:
        return ()
    return tuple(ws.get(part.strip()) for part in spec.split(",") if part.strip())


# --- subcommands -------------------------------------------------------------------


def cmd_configs(args, out: Out) -> int:
    ws = _load(args)
    fm = _fm_of(ws, args.feature_model)
    configs = fm.configs()
    for c in configs:
        out.line(str(c) or "{}")
    payload = {
        "command": "configs",
        "feature_model": args.feature_model,
        "count": len(configs),
        "configs": [c.names() for c in configs],
    }
    return out.finish(payload, EXIT_OK)


def cmd_derive(args, out: Out) -> int:
    ws = _load(args)
    art = ws.artifact(args.artifact, "fts", "plac")
    fm = art.value.fm
    c = fm.universe.parse_config(args.config)
    if not fm.is_valid(c):
        raise UsageError(f"{c!r} is not a valid configuration of {args.artifact!r}")
    if art.kind == "fts":
        kind, value = "ts", derive_fts(art.value, c)
    else:
        kind, value = "ac", (derive_ac(art.value, c, ws.registry), fm)
    slug = "_".join(c.names()) or "empty"
    target = Path(args.output) if args.output else Path.cwd() / f"{args.artifact}-{slug}.json"
    target.write_text(json.dumps(ws.encode(kind, value), indent=2) + "\n")
    out.line(f"wrote {kind} for {_cfg(c)} to {target}")
    payload = {"command": "derive", "artifact": args.artifact, "config": c.names(), "kind": kind, "output": str(target)}
    return out.finish(payload, EXIT_OK)


def cmd_check_ac(args, out: Out) -> int:
    ws = _load(args)
    art = ws.artifact(args.artifact, "ac", "plac")
    payload: dict[str, Any] = {"command": "check-ac", "artifact": args.artifact, "kind": art.kind}
    if art.kind == "ac":
        root, _ = art.value
        rep = deductive_check(root, ws.registry)
        nodes = [{"id": i, "status": s.value, "subtree": rep.subtree[i].value} for i, s in rep.statuses.items()]
        for n in nodes:
            out.line(f"{n['id']:<16} {n['status']:<16} subtree {n['subtree']}")
        deductive, assumptions, failures = rep.deductive, list(rep.assumptions), None
        verdict = rep.verdict
    else:
        rep = vdeductive_check(art.value, ws.registry, args.method)
        nodes = []
        for i, r in rep.nodes.items():
            entry = {"id": i, "status": r.status.value, "failures": _cfgs(r.failures)}
            nodes.append(entry)
            extra = f"  fails at {' '.join(entry['failures'])}" if entry["failures"] else ""
            out.line(f"{i:<16} {r.status.value:<16}{extra}")
        deductive, assumptions = rep.deductive, list(rep.assumption_ids())
        failures = _cfgs(rep.failures)
        verdict = rep.verdict
        payload["configurations"] = len(rep.scope)
        if failures:
            out.line(f"failing configurations: {' '.join(failures)}")
    if assumptions and deductive:
        out.line(f"assumptions: {', '.join(assumptions)}")
    out.line(f"verdict: {verdict}")
    payload.update(
        verdict=verdict, deductive=deductive, assumptions=assumptions, nodes=nodes,
        failures=failures if failures is not None else [],
    )
    code = EXIT_OK if deductive and not assumptions else EXIT_FAIL
    return out.finish(payload, code)


def _target_ac(ws: Workspace, args) -> str:
    if args.ac:
        ws.artifact(args.ac, "ac", "plac")
        return args.ac
    hits = []
    for name in ws.names():
        art = ws.artifacts[name]
        if art.kind == "plac" and any(n.id == args.goal for n, _ in walk(art.value.root)):
            hits.append(name)
        elif art.kind == "ac" and any(n.id == args.goal for n in preorder(art.value[0])):
            hits.append(name)
    if len(hits) != 1:
        where = "no" if not hits else f"{len(hits)} ({', '.join(hits)})"
        raise UsageError(f"{where} assurance cases contain goal {args.goal!r}; use --ac")
    return hits[0]


def _decomposition_input(ws: Workspace, node_goal, args):
    if args.data:
        s = ws.get(args.data)
        if not args.aux:
            raise UsageError("--aux must name the element predicate when --data is given")
        return s, args.aux
    if isinstance(node_goal, PredGoal) and node_goal.pred == FORALL:
        return node_goal.data
    raise UsageError("goal is not a for-all claim; give --data and --aux")


def _instantiate_plac(ws: Workspace, plac: PlAc, args) -> tuple[PlAc, Any]:
    reg = ws.registry
    fm = plac.fm
    try:
        node, eff = vfind(plac.root, args.goal)
    except KeyError:
        raise UsageError(f"no node {args.goal!r}") from None
    if not isinstance(node, VStrategy) or node.children or node.justification is not None:
        raise UsageError(f"node {args.goal!r} is already developed")
    t = args.template
    if t == "attest":
        if not args.text:
            raise UsageError("attest needs --text")
        new = VEvidence(node.id, node.goal, VariationalEvidence(eff, Attested(args.text, args.signer)), node.description)
    elif t in DECOMPOSE:
        s, pred = _decomposition_input(ws, node.goal.body, args)
        if not isinstance(s, VarSet):
            raise UsageError("a variational decomposition needs a variational set")
        family = explode(s) if t == "domdecomp-explode" else aggregate(s)
        _, cert = run_lifted("complete-family", (s, family), fm, eff, reg)
        prec = VariationalEvidence(eff, Analytic(cert))
        new = vinstantiate(reg.vtemplate("vdomdecomp"), node, (s, pred), family, fm, eff, prec)
    elif t in LIFTED_ANALYTIC:
        x = _inputs(ws, args.data)
        if len(x) != 2:
            raise UsageError(f"{t} needs --data MODEL,SPEC")
        if t == "lifted-query" and not args.aux:
            raise UsageError("lifted-query needs --aux naming the element predicate")
        new = lifted_analytic_instantiate(t, node, (node.goal.body, x), fm, eff, args.aux, reg)
    elif t in ("identity", "videntity"):
        new = vinstantiate(reg.vtemplate("videntity"), node, node.goal.body, None, fm, eff)
    else:
        raise UsageError(f"template {t!r} does not apply to a PL AC")
    return PlAc(fm, vreplace(plac.root, node.id, new)), new


def _instantiate_ac(ws: Workspace, value, args):
    reg = ws.registry
    root, fm = value
    try:
        node = find(root, args.goal)
    except KeyError:
        raise UsageError(f"no node {args.goal!r}") from None
    if not isinstance(node, Strategy) or node.children or node.justification is not None:
        raise UsageError(f"node {args.goal!r} is already developed")
    t = args.template
    if t == "attest":
        if not args.text:
            raise UsageError("attest needs --text")
        new = Evidence(node.id, node.goal, AttestedRecord(args.text, args.signer), node.description)
    elif t in DECOMPOSE or t == "domdecomp":
        s, pred = _decomposition_input(ws, node.goal, args)
        s = frozenset(s)
        family = tuple(frozenset([v]) for v in sorted(s, key=str)) if t != "domdecomp-aggregate" else (s,)
        new = instantiate(reg.template("domdecomp"), node.id, (s, pred), family, node.description)
    elif t in ("mc", "query"):
        x = _inputs(ws, args.data)
        if len(x) != 2:
            raise UsageError(f"{t} needs --data MODEL,SPEC")
        new = instantiate(reg.template(t), node.id, (node.goal, x), args.aux, node.description)
    elif t == "identity":
        new = instantiate(reg.template("identity"), node.id, node.goal, None, node.description)
    else:
        raise UsageError(f"template {t!r} does not apply to a product AC")
    if new.goal != node.goal:
        raise InstantiationError(f"{t}: the template decomposes a different claim than {node.id}")
    return (replace(root, node.id, new), fm), new


def cmd_instantiate(args, out: Out) -> int:
    if str(args.workspace) == "demo" or Path(args.workspace).resolve() in (DEMO_DIR, DEMO_DIR / "manifest.json"):
        raise UsageError("the built-in demo workspace is read-only; copy it first with placidus.frontend.copy_demo")
    ws = _load(args)
    name = _target_ac(ws, args)
    art = ws.artifact(name)
    payload: dict[str, Any] = {
        "command": "instantiate", "artifact": name, "template": args.template, "goal": args.goal,
    }
    try:
        if art.kind == "plac":
            value, new = _instantiate_plac(ws, art.value, args)
        else:
            value, new = _instantiate_ac(ws, art.value, args)
    except InstantiationError as exc:
        out.line(f"refused: {exc}")
        witnesses = [_cfg(getattr(w, "config", w)) for w in exc.witnesses]
        for w in witnesses:
            out.line(f"  witness: {w}")
        payload.update(ok=False, message=str(exc), witnesses=witnesses, children=[])
        return out.finish(payload, EXIT_FAIL)
    path = ws.save(name, value)
    children = [ch.id for ch in getattr(new, "children", ())]
    out.line(f"{args.goal}: {args.template} applied in {name}; {len(children)} subgoals")
    for ch in getattr(new, "children", ()):
        pc = getattr(ch.goal, "pc", None)
        body = getattr(ch.goal, "body", ch.goal)
        suffix = f" [{to_text(pc)}]" if pc is not None else ""
        out.line(f"  {ch.id}: {body.text or body.key}{suffix}")
    out.line(f"updated {path} (previous version in {path.name}.bak)")
    payload.update(ok=True, message="", witnesses=[], children=children, output=str(path))
    return out.finish(payload, EXIT_OK)


def cmd_check_lift(args, out: Out) -> int:
    ws = _load(args)
    reg = ws.registry
    la = reg.lifted_analysis(args.family)
    if la.product != args.product:
        raise UsageError(f"{args.family!r} lifts {la.product!r}, not {args.product!r}")
    product = reg.analysis(args.product)
    x = _inputs(ws, args.input)
    if len(x) == 1:
        x = x[0]
    if args.fm:
        fm = _fm_of(ws, args.fm)
    else:
        carriers = [v for v in (x if isinstance(x, tuple) else (x,)) if isinstance(v, Fts)]
        if not carriers:
            raise UsageError("cannot tell the feature model; give --fm")
        fm = carriers[0].fm
    scope = parse_featexpr(args.scope, fm.universe) if args.scope else TRUE
    mode = "quasi" if args.quasi else la.mode
    if mode == la.mode:
        report = lift_report(la.id, x, fm, scope, reg)
    else:
        configs = fm.scope(scope)
        if la.family_ok is not None:
            family_ok = la.family_ok
        else:
            family_ok = lambda o: all(product.verdict(la.out_derive(o, c)) for c in configs)
        report = check_quasi_lift(
            product.run, lambda v: la.run(v, fm, scope), x, fm, ok=product.verdict, family_ok=family_ok, scope=scope
        )
    out.line(f"{args.family} vs {args.product} ({mode}): {report.summary()}")
    witnesses = []
    for w in report.witnesses:
        entry = {"config": _cfg(w.config), "product": _show(w.product_result), "family": _show(w.family_result)}
        witnesses.append(entry)
        out.line(f"  {entry['config']}: product {entry['product']}; family {entry['family']}")
    payload = {
        "command": "check-lift", "product": args.product, "family": args.family, "mode": mode,
        "status": report.status.value, "checked": report.checked, "witnesses": witnesses,
    }
    return out.finish(payload, EXIT_OK if report.ok else EXIT_FAIL)


def _show(v: Any) -> str:
    if hasattr(v, "describe"):
        return v.describe()
    if isinstance(v, frozenset):
        return "{" + ", ".join(sorted(map(str, v))) + "}"
    return repr(v)


def _mc_entry(configs, r) -> dict:
    return {
        "configs": configs,
        "passed": r.passed,
        "path": list(r.path),
        "loop": r.loop,
        "violating": r.violating,
    }


def cmd_modelcheck(args, out: Out) -> int:
    ws = _load(args)
    art = ws.artifact(args.model, "fts", "ts")
    phi = _value_or_text(ws, args.formula, "formula", parse_formula)
    classes = []
    if art.kind == "ts":
        mode = "product"
        r = mc_product(art.value, phi)
        classes.append(_mc_entry(None, r))
        out.line(f"{'pass' if r.passed else 'fail'}  {r.describe()}")
        passed = r.passed
    else:
        mode = args.family or "exact"
        res = mc_family(art.value, phi, mode)
        if mode == "exact":
            for cs, r in res.classes:
                classes.append(_mc_entry(_cfgs(cs), r))
                out.line(f"{'pass' if r.passed else 'fail'}  {' '.join(_cfgs(cs))}  {r.describe()}")
        else:
            cex = res.counterexample
            if res.passed:
                out.line("pass  no violation in any configuration")
            else:
                classes.append(_mc_entry(_cfgs(res.configs), cex))
                out.line(f"fail  {' '.join(_cfgs(res.configs))}  {cex.describe()}")
        passed = res.passed
    out.line(f"verdict: {'pass' if passed else 'fail'}")
    payload = {
        "command": "modelcheck", "model": args.model, "formula": formula_text(phi), "mode": mode,
        "passed": passed, "classes": classes,
    }
    return out.finish(payload, EXIT_OK if passed else EXIT_FAIL)


def cmd_query(args, out: Out) -> int:
    ws = _load(args)
    art = ws.artifact(args.model, "fts", "ts")
    pattern = _value_or_text(ws, args.pattern, "query", str)
    results = []
    if art.kind == "fts" and args.lifted:
        for e in vquery(art.value, pattern):
            results.append({"value": e.value, "pc": to_text(e.pc)})
            out.line(f"{e.value} [{to_text(e.pc)}]")
    else:
        ts = art.value
        if art.kind == "fts":
            if not args.config:
                raise UsageError("querying an FTS needs --lifted or --config")
            c = ts.fm.universe.parse_config(args.config)
            ts = derive_fts(ts, c)
        for sid in run_query(ts, pattern):
            results.append({"value": sid, "pc": None})
            out.line(sid)
    payload = {"command": "query", "model": args.model, "pattern": pattern, "lifted": bool(args.lifted),
               "results": results}
    return out.finish(payload, EXIT_OK)


def cmd_render(args, out: Out) -> int:
    ws = _load(args)
    art = ws.artifact(args.artifact, "ac", "plac")
    if art.kind == "ac":
        root = art.value[0]
        report = deductive_check(root, ws.registry) if args.status else None
    else:
        root = art.value.root
        report = vdeductive_check(art.value, ws.registry) if args.status else None
    dot = render_dot(root, report, args.artifact)
    n_nodes = sum(1 for ln in dot.splitlines() if "[label=" in ln)
    n_edges = sum(1 for ln in dot.splitlines() if "->" in ln)
    payload: dict[str, Any] = {"command": "render", "artifact": args.artifact, "nodes": n_nodes, "edges": n_edges}
    if args.output:
        Path(args.output).write_text(dot)
        payload["output"] = args.output
        out.line(f"wrote {n_nodes} nodes and {n_edges} edges to {args.output}")
    else:
        payload["dot"] = dot
        out.line(dot.rstrip("\n"))
    return out.finish(payload, EXIT_OK)


# --- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="placidus", description="Product lines of assurance cases.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name: str, fn, help_: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("workspace", help="manifest file, workspace directory, or 'demo'")
        sp.add_argument("--json", action="store_true", help="print one JSON object")
        sp.set_defaults(fn=fn)
        return sp

    sp = add("configs", cmd_configs, "list valid configurations")
    sp.add_argument("feature_model")

    sp = add("derive", cmd_derive, "derive the product of an fts or PL AC")
    sp.add_argument("artifact")
    sp.add_argument("--config", required=True, help='features, e.g. "A,B"')
    sp.add_argument("-o", "--output")

    sp = add("check-ac", cmd_check_ac, "check that an AC or PL AC is deductive")
    sp.add_argument("artifact")
    sp.add_argument("--method", choices=("auto", "shortcut", "descent"), default="auto")

    sp = add("instantiate", cmd_instantiate, "develop a goal with a template")
    sp.add_argument("--template", required=True)
    sp.add_argument("--goal", required=True)
    sp.add_argument("--data", help="artifact name(s), comma separated; optional when the goal carries the input")
    sp.add_argument("--aux", help="auxiliary input: the element predicate id")
    sp.add_argument("--ac", help="AC or PL AC artifact (default: the one containing the goal)")
    sp.add_argument("--text", help="attestation text for the attest template")
    sp.add_argument("--signer", default="", help="who attests")

    sp = add("check-lift", cmd_check_lift, "check a family analysis against its product analysis")
    sp.add_argument("--product", required=True)
    sp.add_argument("--family", required=True)
    sp.add_argument("--input", required=True, help="artifact name(s), comma separated")
    sp.add_argument("--quasi", action="store_true")
    sp.add_argument("--fm", help="feature model artifact (default: taken from the input)")
    sp.add_argument("--scope", help="presence condition restricting the check")

    sp = add("modelcheck", cmd_modelcheck, "model check an fts or ts")
    sp.add_argument("model")
    sp.add_argument("formula", help="formula text or formula artifact")
    sp.add_argument("--family", choices=("exact", "quasi"))

    sp = add("query", cmd_query, "find states with matching labels")
    sp.add_argument("model")
    sp.add_argument("pattern", help="label glob or query artifact")
    sp.add_argument("--lifted", action="store_true")
    sp.add_argument("--config")

    sp = add("render", cmd_render, "render an AC or PL AC as DOT")
    sp.add_argument("artifact")
    sp.add_argument("-o", "--output")
    sp.add_argument("--status", action="store_true", help="colour nodes by check status")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Out(args.json)
    try:
        return args.fn(args, out)
    except (UsageError, WorkspaceError, FeatureError, FtsError, CodecError, RegistryError, GsnError) as exc:
        msg = str(exc)
        print(f"error: {msg}", file=sys.stderr)
        if args.json:
            print(json.dumps({"command": args.command, "error": msg, "exit": EXIT_USAGE}, indent=2, sort_keys=True))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
