"""Executable product lines of assurance cases.

Feature expressions and their configuration semantics, variational data and
lift checking, product and variational GSN trees with template-based
certification, and featured transition systems with family model checking.
"""

from placidus.featexpr import (
    FALSE,
    TRUE,
    ConfigSet,
    Configuration,
    FeatureModel,
    FeatureUniverse,
    parse_featexpr,
    sat,
    semantics,
    valid_configs,
)
from placidus.fts import Fts, TransitionSystem, derive_fts, mc_family, mc_product, parse_formula, query, vquery
from placidus.gsn import deductive_check, domdecomp_check_complete, domdecomp_instantiate, refines_check
from placidus.registry import default_registry
from placidus.templates import analytic_instantiate, lifted_analytic_instantiate
from placidus.variability import VarFamily, VarSet, check_lift, check_quasi_lift, derive, derive_family, derive_set
from placidus.vgsn import (
    PlAc,
    aggregate,
    derive_ac,
    explode,
    lift_template,
    vdeductive_check,
    vdomdecomp_instantiate,
    vrefines_check,
)

__version__ = "0.1.0"

__all__ = [
    "FALSE", "TRUE", "ConfigSet", "Configuration", "FeatureModel", "FeatureUniverse", "parse_featexpr",
    "sat", "semantics", "valid_configs", "Fts", "TransitionSystem", "derive_fts", "mc_family", "mc_product",
    "parse_formula", "query", "vquery", "deductive_check", "domdecomp_check_complete", "domdecomp_instantiate",
    "refines_check", "default_registry", "analytic_instantiate", "lifted_analytic_instantiate", "VarFamily",
    "VarSet", "check_lift", "check_quasi_lift", "derive", "derive_family", "derive_set", "PlAc", "aggregate",
    "derive_ac", "explode", "lift_template", "vdeductive_check", "vdomdecomp_instantiate", "vrefines_check",
]
