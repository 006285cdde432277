"""
The command line on a scratch workspace
=======================================

Copies the shipped demo workspace, develops the pump argument with
``placidus instantiate`` and checks it with ``placidus check-ac``.
"""

import subprocess
import sys
import tempfile
from pathlib import Path

from placidus.frontend import copy_demo


def placidus(*args: str) -> str:
    done = subprocess.run([sys.executable, "-m", "placidus.frontend.cli", *args], capture_output=True, text=True)
    print(f"$ placidus {' '.join(args)}  (exit {done.returncode})")
    return done.stdout


ws = str(Path(tempfile.mkdtemp()) / "ws")
copy_demo(ws)
ac = ("--ac", "pump_plac")

print(placidus("configs", ws, "infusion").count("\n"), "valid configurations")
print(placidus("instantiate", ws, *ac, "--template", "lifted-query", "--goal", "G0",
               "--data", "pump,alarms", "--aux", "alarm_safe"))
print(placidus("instantiate", ws, *ac, "--template", "domdecomp-explode", "--goal", "G0.5"))

alarms = [ln.split()[0] for ln in placidus("query", ws, "pump", "alarms", "--lifted").splitlines()]
for i, alarm in enumerate(alarms, 1):
    placidus("instantiate", ws, *ac, "--template", "lifted-mc-quasi", "--goal", f"G0.5.{i}",
             "--data", f"pump,safe_{alarm}")

# attest what the analyses cannot establish
leaves = ["G0.1", "G0.2", "G0.4"] + [f"G0.5.{i}.{j}" for i in range(1, len(alarms) + 1) for j in (1, 2, 4)]
for goal in leaves:
    placidus("instantiate", ws, *ac, "--template", "attest", "--goal", goal, "--text", "reviewed", "--signer", "qa")

print(placidus("check-ac", ws, "pump_plac").splitlines()[-1])
