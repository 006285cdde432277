"""
Arguing alarm safety for a family of infusion pumps
===================================================

Builds the variational assurance case for all 36 pump variants with the
library API: a lifted query finds the alarms, a domain decomposition splits
the claim per alarm, and lifted model checking closes each alarm goal.
Remaining leaves are attested.  The result is checked once for the family
and then compared against one product.
"""

import warnings

from placidus import casestudy as cs
from placidus.evidence import Analytic, Attested, VariationalEvidence, run_lifted
from placidus.gsn import deductive_check
from placidus.registry import default_registry
from placidus.templates import lifted_analytic_instantiate
from placidus.vgsn import PlAc, VEvidence, VStrategy, derive_ac, explode, vdeductive_check, vfind, vinstantiate, vreplace, walk

warnings.simplefilter("ignore")
reg = default_registry()
fm, pump = cs.infusion_fm(), cs.pump_fts()

# the root claim: every alarm state is handled safely
plac = cs.pump_root()
print("root:", plac.root.goal.body.text)

# lifted query: which alarms exist, and in which variants
node, scope = vfind(plac.root, "G0")
x = (node.goal.body, (pump, cs.ALARM_PATTERN))
root = vreplace(plac.root, "G0", lifted_analytic_instantiate("lifted-query", node, x, fm, scope, cs.ALARM_PRED, reg))
node, scope = vfind(root, "G0.5")
alarms, pred = node.goal.body.data
print("alarms:", ", ".join(f"{e.value} [{e.pc}]" for e in alarms))

# one subgoal per alarm; the family is shown complete by an analysis
family = explode(alarms)
_, cert = run_lifted("complete-family", (alarms, family), fm, scope, reg)
dd = vinstantiate(reg.vtemplate("vdomdecomp"), node, (alarms, pred), family, fm, scope,
                  VariationalEvidence(scope, Analytic(cert)))
root = vreplace(root, "G0.5", dd)

# each alarm goal is discharged by model checking the whole family at once
for i, alarm in enumerate(cs.ALARMS, 1):
    node, scope = vfind(root, f"G0.5.{i}")
    x = (node.goal.body, (pump, cs.alarm_formula(alarm)))
    root = vreplace(root, node.id, lifted_analytic_instantiate("lifted-mc-quasi", node, x, fm, scope, None, reg))

# whatever is left (model fidelity, formalization) is reviewed by hand
for node, scope in list(walk(root)):
    if isinstance(node, VStrategy) and node.justification is None and not node.children:
        root = vreplace(root, node.id, VEvidence(node.id, node.goal, VariationalEvidence(scope, Attested("reviewed", "qa"))))
plac = PlAc(fm, root)

report = vdeductive_check(plac, reg)
print("family verdict:", report.verdict)

# one product: the variant without rate checking has no dose-rate alarm subgoal
c = fm.universe.config(["HW_MONITORING"])
product = deductive_check(derive_ac(plac, c, reg), reg)
print(f"product {{{c}}}:", product.verdict)
