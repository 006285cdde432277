"""Regenerate the shipped demo workspace from the models in placidus.casestudy."""

from __future__ import annotations

import json
import sys
from pathlib import Path

from placidus import casestudy as cs
from placidus.fts import vquery
from placidus.frontend.workspace import DEMO_DIR, Artifact, Workspace


def artifacts():
    yield "figmodel", "feature-model", cs.toy_fm()
    yield "toy_fts", "fts", cs.toy_fts()
    yield "infusion", "feature-model", cs.infusion_fm()
    yield "pump", "fts", cs.pump_fts()
    yield "pump_full", "ts", cs.pump_product(cs.INFUSION_FEATURES)
    yield "alarms", "query", cs.ALARM_PATTERN
    yield "alarm_states", "varset", vquery(cs.pump_fts(), cs.ALARM_PATTERN)
    yield "alarm_property", "formula", cs.alarm_formula("Alrm_DoseRateHardLimitsViolationS")
    for alarm in cs.ALARMS:
        yield f"safe_{alarm}", "formula", cs.alarm_formula(alarm)
    yield "pump_plac", "plac", cs.pump_root()
    yield "toy_plac", "plac", cs.toy_plac()
    yield "broken_plac", "plac", cs.broken_toy_plac()
    yield "pump_ac", "ac", (cs.pump_ac(), cs.infusion_fm())


def main(dest: Path = DEMO_DIR) -> None:
    dest.mkdir(parents=True, exist_ok=True)
    ws = Workspace(dest / "manifest.json")
    manifest = {"artifacts": {}, "external_predicates": []}
    items = list(artifacts())
    for name, kind, value in items:
        ws.artifacts[name] = Artifact(name, kind, dest / f"{name}.json", value)
        manifest["artifacts"][name] = {"kind": kind, "path": f"{name}.json"}
    for name, _, value in items:
        ws.save(name, value, backup=False)
    (dest / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else DEMO_DIR)
