"""Graphviz DOT rendering of product and variational assurance cases."""

from __future__ import annotations

from typing import Any, Mapping, Optional

from placidus.featexpr import to_text
from placidus.gsn import NIL, AtomGoal, Evidence, Status, preorder
from placidus.vgsn import VEvidence, VStrategy

STATUS_COLOURS = {
    Status.CERTIFIED: "palegreen",
    Status.ASSUMED: "lightyellow",
    Status.EVIDENCE_BACKED: "lightblue",
    Status.UNDEVELOPED: "lightgrey",
    Status.BROKEN: "salmon",
}


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")


def _goal_text(goal) -> str:
    if goal.text:
        return goal.text
    if isinstance(goal, AtomGoal):
        return goal.claim
    return goal.pred


def _statuses(report: Any) -> Mapping[str, Status]:
    if report is None:
        return {}
    if isinstance(report, Mapping):
        return report
    if hasattr(report, "statuses"):
        return report.statuses
    return {i: r.status for i, r in report.nodes.items()}


def _vpreorder(node):
    yield node
    for ch in getattr(node, "children", ()):
        yield from _vpreorder(ch)


def render_dot(ac, report: Any = None, title: Optional[str] = None) -> str:
    """DOT text with one node per AC node, in preorder.

    Variational nodes get their presence condition as a bracketed suffix.
    ``report`` (a deductive report or an id-to-status mapping) colours nodes.
    """
    variational = isinstance(ac, (VStrategy, VEvidence))
    nodes = list(_vpreorder(ac)) if variational else list(preorder(ac))
    status = _statuses(report)
    lines = [f'digraph "{_escape(title or "ac")}" {{', "  rankdir=TB;", '  node [fontname="Helvetica"];']
    for n in nodes:
        goal = n.goal.body if variational else n.goal
        label = f"{n.id}: {_goal_text(goal)}"
        if variational:
            label += f" [{to_text(n.goal.pc)}]"
        is_ev = isinstance(n, (Evidence, VEvidence))
        attrs = [f'label="{_escape(label)}"', "shape=ellipse" if is_ev else "shape=box"]
        s = status.get(n.id)
        if s is not None:
            attrs += ["style=filled", f"fillcolor={STATUS_COLOURS[s]}", f'tooltip="{s.value}"']
        lines.append(f'  "{_escape(n.id)}" [{", ".join(attrs)}];')
    for n in nodes:
        for ch in getattr(n, "children", ()):
            if ch is NIL:
                continue
            lines.append(f'  "{_escape(n.id)}" -> "{_escape(ch.id)}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
