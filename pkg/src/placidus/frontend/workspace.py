"""Workspaces: a manifest naming artifact files, loaded and cross-checked together."""

from __future__ import annotations

import json
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

from placidus.codec import CodecError, fts_from_json, fts_to_json, ts_from_json, ts_to_json
from placidus.featexpr import FeatureError, FeatureModel
from placidus.fts import FtsError, formula_text, parse_formula
from placidus.frontend.io import (
    ac_from_json,
    ac_to_json,
    plac_from_json,
    plac_to_json,
    varset_from_json,
    varset_to_json,
)
from placidus.gsn import PredGoal, preorder
from placidus.registry import Registry, default_registry
from placidus.vgsn import validate_plac, walk

KINDS = ("feature-model", "fts", "ts", "varset", "ac", "plac", "formula", "query")

DEMO_DIR = Path(__file__).parent / "demo"


class WorkspaceError(ValueError):
    """Problems found while loading; ``problems`` lists every one of them."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


class _Dangling(Exception):
    def __init__(self, name: str):
        self.name = name
        super().__init__(name)


@dataclass
class Artifact:
    name: str
    kind: str
    path: Path
    value: Any = None


@dataclass
class Workspace:
    manifest: Optional[Path]
    artifacts: dict[str, Artifact] = field(default_factory=dict)
    registry: Registry = field(default_factory=default_registry)

    @property
    def root(self) -> Path:
        return self.manifest.parent if self.manifest is not None else Path.cwd()

    def __contains__(self, name: str) -> bool:
        return name in self.artifacts

    def get(self, name: str, *kinds: str) -> Any:
        art = self.artifact(name, *kinds)
        return art.value

    def artifact(self, name: str, *kinds: str) -> Artifact:
        if name not in self.artifacts:
            raise WorkspaceError([f"unknown artifact {name!r}"])
        art = self.artifacts[name]
        if kinds and art.kind not in kinds:
            raise WorkspaceError([f"artifact {name!r} is a {art.kind}, expected {' or '.join(kinds)}"])
        return art

    def names(self, kind: Optional[str] = None) -> list[str]:
        return sorted(n for n, a in self.artifacts.items() if kind is None or a.kind == kind)

    def name_of(self, value: Any) -> Optional[str]:
        """Artifact whose value equals ``value`` (used to write references)."""
        if isinstance(value, (str, int, float, bool)) or value is None:
            return None
        for name in sorted(self.artifacts):
            art = self.artifacts[name]
            if art.kind in ("ac", "plac", "query"):
                continue
            if type(art.value) is type(value) and art.value == value:
                return name
        return None

    def resolve(self, name: str) -> Any:
        if name not in self.artifacts:
            raise _Dangling(name)
        return self.artifacts[name].value

    # -- writing

    def encode(self, kind: str, value: Any) -> dict:
        if kind == "feature-model":
            return value.to_json()
        if kind == "fts":
            out = fts_to_json(value)
            ref = self.name_of(value.fm)
            if ref is not None:
                out["universe"] = ref
                out.pop("feature_model")
            return out
        if kind == "ts":
            return ts_to_json(value)
        if kind == "varset":
            return varset_to_json(value, self._fm_ref(value.universe), self.name_of)
        if kind == "ac":
            root, fm = value if isinstance(value, tuple) else (value, None)
            return ac_to_json(root, fm, self.name_of)
        if kind == "plac":
            return plac_to_json(value, self.name_of)
        if kind == "formula":
            return {"formula": formula_text(value)}
        if kind == "query":
            return {"pattern": value}
        raise WorkspaceError([f"unknown artifact kind {kind!r}"])

    def _fm_ref(self, universe) -> Optional[str]:
        for name in self.names("feature-model"):
            if self.artifacts[name].value.universe == universe:
                return name
        return None

    def save(self, name: str, value: Any, backup: bool = True) -> Path:
        art = self.artifact(name)
        data = self.encode(art.kind, value)
        if backup and art.path.exists():
            shutil.copyfile(art.path, art.path.with_name(art.path.name + ".bak"))
        art.path.write_text(json.dumps(data, indent=2, sort_keys=False) + "\n")
        art.value = value
        return art.path


def _decode(kind: str, obj: Any, resolve) -> Any:
    if kind == "feature-model":
        return FeatureModel.from_json(obj)
    if kind == "fts":
        return fts_from_json(obj, resolve=resolve)
    if kind == "ts":
        return ts_from_json(obj)
    if kind == "varset":
        return varset_from_json(obj, resolve)
    if kind == "ac":
        return ac_from_json(obj, resolve)
    if kind == "plac":
        return plac_from_json(obj, resolve)
    if kind == "formula":
        return parse_formula(obj["formula"] if isinstance(obj, dict) else obj)
    if kind == "query":
        return obj["pattern"] if isinstance(obj, dict) else obj
    raise WorkspaceError([f"unknown artifact kind {kind!r}"])


# load order: everything else may refer to feature models
_ORDER = {k: i for i, k in enumerate(("feature-model", "fts", "ts", "formula", "query", "varset", "ac", "plac"))}


def load_workspace(manifest: Union[str, Path], registry: Optional[Registry] = None) -> Workspace:
    """Load every artifact named in ``manifest`` and validate cross-references.

    ``manifest`` is a JSON file path, a directory containing ``manifest.json``,
    or ``"demo"`` for the shipped demo workspace.  All problems are collected
    and reported together in one :class:`WorkspaceError`.
    """
    path = DEMO_DIR / "manifest.json" if str(manifest) == "demo" else Path(manifest)
    if path.is_dir():
        path = path / "manifest.json"
    try:
        spec = json.loads(path.read_text())
    except FileNotFoundError:
        raise WorkspaceError([f"manifest {str(path)!r} not found"]) from None
    except json.JSONDecodeError as exc:
        raise WorkspaceError([f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}"]) from None
    if not isinstance(spec, dict):
        raise WorkspaceError([f"{path}: manifest must be a JSON object"])

    reg = (registry or default_registry()).copy()
    for pid in spec.get("external_predicates", []):
        reg.declare_external(pid)
    ws = Workspace(path, {}, reg)
    problems: list[str] = []

    entries = spec.get("artifacts", {})
    for name, entry in entries.items():
        kind = entry.get("kind") if isinstance(entry, dict) else None
        if kind not in KINDS:
            problems.append(f"{name}: unknown kind {kind!r}")
            continue
        if "path" not in entry:
            problems.append(f"{name}: no path given")
            continue
        ws.artifacts[name] = Artifact(name, kind, path.parent / entry["path"])

    raw: dict[str, Any] = {}
    for name, art in list(ws.artifacts.items()):
        try:
            raw[name] = json.loads(art.path.read_text())
        except FileNotFoundError:
            problems.append(f"{name}: file {str(art.path)!r} not found")
        except json.JSONDecodeError as exc:
            problems.append(f"{name}: {art.path}:{exc.lineno}:{exc.colno}: {exc.msg}")

    loaded: set[str] = set()
    failed: set[str] = set()

    def load(name: str) -> Any:
        if name in loaded:
            return ws.artifacts[name].value
        if name not in raw or name in failed:
            raise _Dangling(name)
        art = ws.artifacts[name]
        art.value = _decode(art.kind, raw[name], load)
        loaded.add(name)
        return art.value

    for name in sorted(raw, key=lambda n: (_ORDER[ws.artifacts[n].kind], n)):
        if name in loaded or name in failed:
            continue
        try:
            load(name)
        except _Dangling as exc:
            failed.add(name)
            problems.append(f"{name}: dangling reference to {exc.name!r}")
        except (CodecError, FeatureError, FtsError, KeyError, TypeError, ValueError) as exc:
            failed.add(name)
            problems.append(f"{name}: {type(exc).__name__}: {exc}")

    for name in sorted(loaded):
        problems.extend(f"{name}: {p}" for p in _validate(ws.artifacts[name], reg))
    if problems:
        raise WorkspaceError(problems)
    return ws


def _goal_preds(goal) -> list[str]:
    return [goal.pred] if isinstance(goal, PredGoal) else []


def _validate(art: Artifact, reg: Registry) -> list[str]:
    problems: list[str] = []
    if art.kind == "plac":
        problems.extend(validate_plac(art.value))
        for node, _ in walk(art.value.root):
            problems.extend(_check_ids(node.goal.body, getattr(node, "justification", None), reg, True))
    elif art.kind == "ac":
        root, _ = art.value
        for node in preorder(root):
            problems.extend(_check_ids(node.goal, getattr(node, "justification", None), reg, False))
    return problems


def _check_ids(goal, just, reg: Registry, variational: bool) -> list[str]:
    out = []
    for pid in _goal_preds(goal):
        if pid not in reg.predicates:
            out.append(f"unknown predicate {pid!r}")
    if just is not None and hasattr(just, "vtemplate" if variational else "template"):
        tid = just.vtemplate if variational else just.template
        table = reg.vtemplates if variational else reg.templates
        if tid not in table:
            out.append(f"unknown template {tid!r}")
    return out


def copy_demo(dest: Union[str, Path]) -> Path:
    """Copy the shipped demo workspace to ``dest`` so it can be edited."""
    dest = Path(dest)
    shutil.copytree(DEMO_DIR, dest, dirs_exist_ok=True)
    return dest / "manifest.json"
