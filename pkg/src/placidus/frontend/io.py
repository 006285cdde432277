"""JSON files for product ACs and PL ACs."""

from __future__ import annotations

from typing import Any, Callable, Optional

from placidus.codec import Codec, CodecError
from placidus.evidence import (
    Analytic,
    AnalyticCertificate,
    Attested,
    AttestedRecord,
    Exhaustive,
    MachineRecord,
    VariationalEvidence,
)
from placidus.featexpr import ConfigSet, FeatureModel, FeatureUniverse, parse_featexpr, to_text
from placidus.gsn import (
    AtomGoal,
    Axiomatic,
    Evidence,
    PredGoal,
    Strategy,
    TemplateInstance,
)
from placidus.vgsn import PlAc, VEvidence, VGoal, VStrategy, VTemplateInstance


class AcCodec(Codec):
    """Codec that also handles goals and feature models nested in data."""

    def encode(self, v: Any) -> Any:
        if isinstance(v, (PredGoal, AtomGoal)):
            ref = self._ref(v)
            return ref if ref is not None else {"goal": self.goal(v)}
        if isinstance(v, FeatureModel):
            ref = self._ref(v)
            return ref if ref is not None else {"fm": v.to_json()}
        return super().encode(v)

    def _ref(self, v: Any) -> Optional[dict]:
        if self.name_of is None:
            return None
        name = self.name_of(v)
        return None if name is None else {"ref": name}

    def decode(self, obj: Any) -> Any:
        if isinstance(obj, dict) and len(obj) == 1:
            (tag, body), = obj.items()
            if tag == "goal":
                return self.read_goal(body)
            if tag == "fm":
                return FeatureModel.from_json(body)
        return super().decode(obj)

    # -- goals

    def goal(self, g) -> dict:
        if isinstance(g, AtomGoal):
            return {"atom": g.claim, "text": g.text}
        return {"pred": g.pred, "data": self.encode(g.data), "text": g.text}

    def read_goal(self, obj: dict):
        if "atom" in obj:
            return AtomGoal(obj["atom"], obj.get("text", ""))
        if "pred" not in obj:
            raise CodecError(f"goal needs 'pred' or 'atom': {obj!r}")
        return PredGoal(obj["pred"], self.decode(obj.get("data")), obj.get("text", ""))

    # -- records

    @staticmethod
    def record(r) -> dict:
        if isinstance(r, AttestedRecord):
            return {"attested": {"text": r.text, "source": r.source}}
        return {
            "machine": {
                "analysis": r.analysis,
                "input_digest": r.input_digest,
                "output_digest": r.output_digest,
                "verdict": r.verdict,
                "detail": r.detail,
            }
        }

    @staticmethod
    def read_record(obj: dict):
        if "attested" in obj:
            a = obj["attested"]
            return AttestedRecord(a.get("text", ""), a.get("source", ""))
        m = obj["machine"]
        return MachineRecord(m["analysis"], m["input_digest"], m["output_digest"], m["verdict"], m.get("detail", ""))

    def var_evidence(self, ev: VariationalEvidence) -> dict:
        out: dict = {"scope": to_text(ev.scope), "kind": ev.tag}
        k = ev.kind
        if isinstance(k, Exhaustive):
            out["table"] = [{"config": str(c), "record": self.record(r)} for c, r in k.table]
        elif isinstance(k, Analytic):
            cert = k.certificate
            out["certificate"] = {
                "analysis": cert.analysis,
                "input_digest": cert.input_digest,
                "output_digest": cert.output_digest,
                "passing": [str(c) for c in cert.passing],
                "detail": cert.detail,
            }
        else:
            out["text"] = k.text
            out["signer"] = k.signer
        return out

    def read_var_evidence(self, obj: dict) -> VariationalEvidence:
        u = self._u()
        scope = parse_featexpr(obj.get("scope", "true"), u)
        kind = obj.get("kind")
        if kind == "exhaustive":
            table = {u.parse_config(e["config"]): self.read_record(e["record"]) for e in obj.get("table", [])}
            return VariationalEvidence(scope, Exhaustive(table))
        if kind == "analytic":
            c = obj["certificate"]
            passing = ConfigSet.of(u, [u.parse_config(x) for x in c.get("passing", [])])
            cert = AnalyticCertificate(
                c["analysis"], c["input_digest"], c["output_digest"], passing, c.get("detail", "")
            )
            return VariationalEvidence(scope, Analytic(cert))
        if kind == "attested":
            return VariationalEvidence(scope, Attested(obj.get("text", ""), obj.get("signer", "")))
        raise CodecError(f"unknown evidence kind {kind!r}")

    # -- product trees

    def node(self, n) -> dict:
        if isinstance(n, Evidence):
            out = {"id": n.id, "kind": "evidence", "goal": self.goal(n.goal), "record": self.record(n.record)}
        else:
            out = {
                "id": n.id,
                "kind": "strategy",
                "goal": self.goal(n.goal),
                "justification": self.justification(n.justification),
                "children": [self.node(ch) for ch in n.children],
            }
        if n.description:
            out["description"] = n.description
        return out

    def justification(self, j) -> Optional[dict]:
        if j is None:
            return None
        if isinstance(j, Axiomatic):
            return {"axiomatic": j.rationale}
        return {
            "template": j.template,
            "data": self.encode(j.data),
            "aux": self.encode(j.aux),
            "prec_evidence": None if j.prec_evidence is None else self.record(j.prec_evidence),
        }

    def read_node(self, obj: dict):
        kind = obj.get("kind")
        desc = obj.get("description", "")
        goal = self.read_goal(obj["goal"])
        if kind == "evidence":
            return Evidence(obj["id"], goal, self.read_record(obj["record"]), desc)
        if kind != "strategy":
            raise CodecError(f"node {obj.get('id')!r}: unknown kind {kind!r}")
        j = obj.get("justification")
        if j is None:
            just = None
        elif "axiomatic" in j:
            just = Axiomatic(j["axiomatic"])
        else:
            pe = j.get("prec_evidence")
            just = TemplateInstance(
                j["template"], self.decode(j.get("data")), self.decode(j.get("aux")),
                None if pe is None else self.read_record(pe),
            )
        children = tuple(self.read_node(ch) for ch in obj.get("children", []))
        return Strategy(obj["id"], goal, just, children, desc)

    # -- variational trees

    def vnode(self, n) -> dict:
        out: dict = {"id": n.id, "pc": to_text(n.goal.pc), "goal": self.goal(n.goal.body)}
        if isinstance(n, VEvidence):
            out["kind"] = "evidence"
            out["evidence"] = self.var_evidence(n.ev)
        else:
            out["kind"] = "strategy"
            out["justification"] = self.vjustification(n.justification)
            out["children"] = [self.vnode(ch) for ch in n.children]
        if n.description:
            out["description"] = n.description
        return out

    def vjustification(self, j) -> Optional[dict]:
        if j is None:
            return None
        if isinstance(j, Axiomatic):
            return {"axiomatic": j.rationale}
        return {
            "vtemplate": j.vtemplate,
            "data": self.encode(j.data),
            "aux": self.encode(j.aux),
            "scope": to_text(j.scope),
            "prec_evidence": None if j.prec_evidence is None else self.var_evidence(j.prec_evidence),
        }

    def read_vnode(self, obj: dict):
        u = self._u()
        pc = parse_featexpr(obj.get("pc", "true"), u)
        goal = VGoal(pc, self.read_goal(obj["goal"]))
        desc = obj.get("description", "")
        kind = obj.get("kind")
        if kind == "evidence":
            return VEvidence(obj["id"], goal, self.read_var_evidence(obj["evidence"]), desc)
        if kind != "strategy":
            raise CodecError(f"node {obj.get('id')!r}: unknown kind {kind!r}")
        j = obj.get("justification")
        if j is None:
            just = None
        elif "axiomatic" in j:
            just = Axiomatic(j["axiomatic"])
        else:
            pe = j.get("prec_evidence")
            just = VTemplateInstance(
                j["vtemplate"], self.decode(j.get("data")), self.decode(j.get("aux")),
                parse_featexpr(j.get("scope", "true"), u),
                None if pe is None else self.read_var_evidence(pe),
            )
        children = tuple(self.read_vnode(ch) for ch in obj.get("children", []))
        return VStrategy(obj["id"], goal, just, children, desc)


def _fm_json(fm: Optional[FeatureModel], name_of) -> Any:
    if fm is None:
        return None
    name = name_of(fm) if name_of else None
    return name if name is not None else fm.to_json()


def _read_fm(obj: Any, resolve) -> Optional[FeatureModel]:
    if obj is None:
        return None
    if isinstance(obj, str):
        if resolve is None:
            raise CodecError(f"cannot resolve feature model {obj!r}")
        fm = resolve(obj)
        if not isinstance(fm, FeatureModel):
            raise CodecError(f"{obj!r} is not a feature model")
        return fm
    return FeatureModel.from_json(obj)


def ac_to_json(root, fm: Optional[FeatureModel] = None, name_of: Optional[Callable] = None) -> dict:
    codec = AcCodec(fm.universe if fm else None, name_of)
    out: dict = {"root": codec.node(root)}
    if fm is not None:
        out["feature_model"] = _fm_json(fm, name_of)
    return out


def ac_from_json(obj: dict, resolve: Optional[Callable] = None):
    """Product AC and the feature model its data refers to (``None`` when absent)."""
    fm = _read_fm(obj.get("feature_model"), resolve)
    codec = AcCodec(fm.universe if fm else None, None, resolve)
    return codec.read_node(obj["root"]), fm


def plac_to_json(plac: PlAc, name_of: Optional[Callable] = None) -> dict:
    codec = AcCodec(plac.fm.universe, name_of)
    return {"feature_model": _fm_json(plac.fm, name_of), "root": codec.vnode(plac.root)}


def plac_from_json(obj: dict, resolve: Optional[Callable] = None) -> PlAc:
    fm = _read_fm(obj.get("feature_model"), resolve)
    if fm is None:
        raise CodecError("a PL AC needs a feature_model")
    codec = AcCodec(fm.universe, None, resolve)
    return PlAc(fm, codec.read_vnode(obj["root"]))


def varset_to_json(s, universe_ref: Optional[str] = None, name_of: Optional[Callable] = None) -> dict:
    """``universe_ref`` names a feature-model artifact; otherwise the features are inlined."""
    codec = AcCodec(s.universe, name_of)
    return {
        "universe": universe_ref if universe_ref is not None else list(s.universe.features),
        "elements": [{"value": codec.encode(e.value), "pc": to_text(e.pc)} for e in s],
    }


def varset_from_json(obj: dict, resolve: Optional[Callable] = None):
    from placidus.variability import Annotated, VarSet

    u = obj.get("universe")
    if isinstance(u, str):
        fm = _read_fm(u, resolve)
        universe = fm.universe
    else:
        universe = FeatureUniverse(tuple(u))
    codec = AcCodec(universe, None, resolve)
    return VarSet(
        universe,
        tuple(Annotated(codec.decode(e["value"]), parse_featexpr(e.get("pc", "true"), universe))
              for e in obj.get("elements", [])),
    )
