"""Tagged JSON encoding for data carried in goals, evidence and artifact files."""

from __future__ import annotations

import hashlib
import json
from typing import Any, Callable, Optional

from placidus.featexpr import (
    ConfigSet,
    Configuration,
    FeatExpr,
    FeatureModel,
    FeatureUniverse,
    parse_featexpr,
    to_text,
)
from placidus.fts import (
    AG,
    AU,
    EF,
    AGImpliesAU,
    FamilyMcResult,
    Fts,
    FtsState,
    FtsTransition,
    McResult,
    QuasiMcResult,
    State,
    Transition,
    TransitionSystem,
    formula_text,
    parse_formula,
)
from placidus.variability import Annotated, VarFamily, VarSet


class CodecError(ValueError):
    pass


def _canon(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


class Codec:
    """Encoder/decoder bound to a universe for presence conditions.

    ``name_of`` maps a value to an artifact name (written as ``{"ref": name}``);
    ``resolve`` maps names back to values.
    """

    def __init__(
        self,
        universe: Optional[FeatureUniverse] = None,
        name_of: Optional[Callable[[Any], Optional[str]]] = None,
        resolve: Optional[Callable[[str], Any]] = None,
    ):
        self.universe = universe
        self.name_of = name_of
        self.resolve = resolve

    # -- encoding

    def encode(self, v: Any) -> Any:
        if self.name_of is not None and not isinstance(v, (str, int, float, bool, type(None))):
            name = self.name_of(v)
            if name is not None:
                return {"ref": name}
        if v is None or isinstance(v, (bool, int, float, str)):
            return v
        if isinstance(v, tuple):
            return {"tuple": [self.encode(x) for x in v]}
        if isinstance(v, (frozenset, set)):
            items = [self.encode(x) for x in v]
            return {"set": sorted(items, key=_canon)}
        if isinstance(v, FeatExpr):
            return {"pc": to_text(v)}
        if isinstance(v, Configuration):
            return {"config": str(v)}
        if isinstance(v, ConfigSet):
            return {"configset": [str(c) for c in v]}
        if isinstance(v, VarSet):
            return {"varset": [{"value": self.encode(e.value), "pc": to_text(e.pc)} for e in v]}
        if isinstance(v, VarFamily):
            return {
                "varfamily": [
                    {"set": sorted((self.encode(x) for x in m.value), key=_canon), "pc": to_text(m.pc)}
                    for m in v
                ]
            }
        if isinstance(v, (AG, AU, EF, AGImpliesAU)):
            return {"formula": formula_text(v)}
        if isinstance(v, Fts):
            return {"fts": fts_to_json(v)}
        if isinstance(v, TransitionSystem):
            return {"ts": ts_to_json(v)}
        if isinstance(v, McResult):
            return {"mc": mc_to_json(v)}
        if isinstance(v, FamilyMcResult):
            return {
                "family_mc": [{"configs": [str(c) for c in cs], "result": mc_to_json(r)} for cs, r in v.classes]
            }
        if isinstance(v, QuasiMcResult):
            return {
                "quasi_mc": {
                    "passed": v.passed,
                    "counterexample": None if v.counterexample is None else mc_to_json(v.counterexample),
                    "configs": None if v.configs is None else [str(c) for c in v.configs],
                }
            }
        if isinstance(v, list):
            return [self.encode(x) for x in v]
        raise CodecError(f"cannot encode value of type {type(v).__name__}")

    # -- decoding

    def _u(self) -> FeatureUniverse:
        if self.universe is None:
            raise CodecError("presence conditions need a feature universe")
        return self.universe

    def decode(self, obj: Any) -> Any:
        if obj is None or isinstance(obj, (bool, int, float, str)):
            return obj
        if isinstance(obj, list):
            return tuple(self.decode(x) for x in obj)
        if not isinstance(obj, dict) or len(obj) != 1:
            raise CodecError(f"expected a single-key tagged object, got {obj!r}")
        (tag, body), = obj.items()
        if tag == "ref":
            if self.resolve is None:
                raise CodecError(f"no artifact resolver for reference {body!r}")
            return self.resolve(body)
        if tag == "tuple":
            return tuple(self.decode(x) for x in body)
        if tag == "set":
            return frozenset(self.decode(x) for x in body)
        if tag == "pc":
            return parse_featexpr(body, self._u())
        if tag == "config":
            return self._u().parse_config(body)
        if tag == "configset":
            u = self._u()
            return ConfigSet.of(u, [u.parse_config(c) for c in body])
        if tag == "varset":
            u = self._u()
            return VarSet(
                u, tuple(Annotated(self.decode(e["value"]), parse_featexpr(e.get("pc", "true"), u)) for e in body)
            )
        if tag == "varfamily":
            u = self._u()
            return VarFamily(
                u,
                tuple(
                    Annotated(frozenset(self.decode(x) for x in m["set"]), parse_featexpr(m.get("pc", "true"), u))
                    for m in body
                ),
            )
        if tag == "formula":
            return parse_formula(body)
        if tag == "fts":
            return fts_from_json(body, resolve=self.resolve)
        if tag == "ts":
            return ts_from_json(body)
        if tag == "mc":
            return mc_from_json(body)
        if tag == "family_mc":
            u = self._u()
            return FamilyMcResult(
                tuple(
                    (ConfigSet.of(u, [u.parse_config(c) for c in k["configs"]]), mc_from_json(k["result"]))
                    for k in body
                )
            )
        if tag == "quasi_mc":
            u = self._u()
            cs = body.get("configs")
            cex = body.get("counterexample")
            return QuasiMcResult(
                body["passed"],
                None if cex is None else mc_from_json(cex),
                None if cs is None else ConfigSet.of(u, [u.parse_config(c) for c in cs]),
            )
        raise CodecError(f"unknown tag {tag!r}")


PLAIN = Codec()


def digest(value: Any) -> str:
    """Content digest of a value, independent of workspace naming."""
    return "sha256:" + hashlib.sha256(_canon(PLAIN.encode(value)).encode()).hexdigest()[:32]


# --- transition systems -------------------------------------------------------


def fts_to_json(m: Fts) -> dict:
    return {
        "universe": list(m.fm.universe.features),
        "feature_model": to_text(m.fm.expr),
        "states": [{"id": s.id, "labels": sorted(s.labels), "pc": to_text(s.pc)} for s in m.states],
        "transitions": [
            {"src": t.src, "action": t.action, "dst": t.dst, "pc": to_text(t.pc)} for t in m.transitions
        ],
        "initial": list(m.initial),
    }


def fts_from_json(obj: dict, resolve: Optional[Callable[[str], Any]] = None) -> Fts:
    universe = obj["universe"]
    if isinstance(universe, str):
        if resolve is None:
            raise CodecError(f"cannot resolve universe reference {universe!r}")
        base = resolve(universe)
        if not isinstance(base, FeatureModel):
            raise CodecError(f"{universe!r} is not a feature model")
        u = base.universe
        fm_text = obj.get("feature_model")
        fm = base if fm_text is None else FeatureModel(u, parse_featexpr(fm_text, u))
    else:
        fm = FeatureModel.parse(universe, obj.get("feature_model", "true"))
        u = fm.universe
    states = tuple(
        FtsState(s["id"], frozenset(s.get("labels", [])), parse_featexpr(s.get("pc", "true"), u))
        for s in obj["states"]
    )
    transitions = tuple(
        FtsTransition(t["src"], t.get("action", ""), t["dst"], parse_featexpr(t.get("pc", "true"), u))
        for t in obj["transitions"]
    )
    return Fts(fm, states, transitions, tuple(obj["initial"]))


def ts_to_json(ts: TransitionSystem) -> dict:
    return {
        "states": [{"id": s.id, "labels": sorted(s.labels)} for s in ts.states],
        "transitions": [{"src": t.src, "action": t.action, "dst": t.dst} for t in ts.transitions],
        "initial": list(ts.initial),
    }


def ts_from_json(obj: dict) -> TransitionSystem:
    return TransitionSystem(
        tuple(State(s["id"], frozenset(s.get("labels", []))) for s in obj["states"]),
        tuple(Transition(t["src"], t.get("action", ""), t["dst"]) for t in obj["transitions"]),
        tuple(obj["initial"]),
    )


def mc_to_json(r: McResult) -> dict:
    return {"passed": r.passed, "path": list(r.path), "loop": r.loop, "violating": r.violating}


def mc_from_json(obj: dict) -> McResult:
    return McResult(obj["passed"], tuple(obj.get("path", ())), obj.get("loop"), obj.get("violating"))
