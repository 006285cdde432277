"""Variational data: annotated sets and families, derivation, and lift checking."""

from __future__ import annotations

import enum
import operator
from dataclasses import dataclass, field
from typing import Any, Callable, Generic, Iterable, Optional, TypeVar

from placidus.featexpr import (
    TRUE,
    ConfigSet,
    Configuration,
    FeatExpr,
    FeatureModel,
    FeatureUniverse,
    UniverseMismatchError,
    check_bound,
    sat,
    semantics,
)

T = TypeVar("T")


@dataclass(frozen=True)
class Annotated(Generic[T]):
    value: T
    pc: FeatExpr = TRUE


def _same_universe(u: FeatureUniverse, c: Configuration) -> None:
    if c.universe != u:
        raise UniverseMismatchError("configuration and variational value use different universes")


@dataclass(frozen=True)
class VarSet(Generic[T]):
    """Elements annotated with presence conditions; order is first occurrence."""

    universe: FeatureUniverse
    elements: tuple[Annotated[T], ...] = ()

    def __post_init__(self):
        kept: list[Annotated] = []
        sems: dict[Any, list[ConfigSet]] = {}
        for el in self.elements:
            if not isinstance(el, Annotated):
                el = Annotated(*el)
            check_bound(el.pc, self.universe)
            s = semantics(el.pc, self.universe)
            seen = sems.setdefault(el.value, [])
            if any(s == t for t in seen):
                continue
            seen.append(s)
            kept.append(el)
        object.__setattr__(self, "elements", tuple(kept))

    @classmethod
    def of(cls, universe: FeatureUniverse, pairs: Iterable[tuple[Any, FeatExpr]]) -> "VarSet":
        return cls(universe, tuple(Annotated(v, pc) for v, pc in pairs))

    def __iter__(self):
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def values(self) -> frozenset:
        return frozenset(el.value for el in self.elements)

    def map_pc(self, fn: Callable[[FeatExpr], FeatExpr]) -> "VarSet":
        return VarSet(self.universe, tuple(Annotated(el.value, fn(el.pc)) for el in self.elements))


@dataclass(frozen=True)
class VarFamily(Generic[T]):
    """A finite family of sets, each annotated with a presence condition."""

    universe: FeatureUniverse
    members: tuple[Annotated[frozenset], ...] = ()

    def __post_init__(self):
        members = []
        for m in self.members:
            if not isinstance(m, Annotated):
                m = Annotated(*m)
            check_bound(m.pc, self.universe)
            members.append(Annotated(frozenset(m.value), m.pc))
        object.__setattr__(self, "members", tuple(members))

    def __iter__(self):
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)


# --- derivation -------------------------------------------------------------

_DERIVERS: dict[type, Callable[[Any, Configuration], Any]] = {}


def register_derivation(cls: type, fn: Callable[[Any, Configuration], Any]) -> None:
    """Declare ``cls`` a variational type whose products are given by ``fn``."""
    _DERIVERS[cls] = fn


def is_variational(x: Any) -> bool:
    return any(isinstance(x, cls) for cls in _DERIVERS)


def derive(x: Any, c: Configuration) -> Any:
    """Derive the product of ``x`` at ``c``.

    Registered variational types use their own operator, plain tuples derive
    componentwise, and everything else is product data already.
    """
    for cls in type(x).__mro__:
        fn = _DERIVERS.get(cls)
        if fn is not None:
            return fn(x, c)
    if type(x) is tuple:
        return tuple(derive(v, c) for v in x)
    return x


def derive_set(s: VarSet, c: Configuration) -> frozenset:
    _same_universe(s.universe, c)
    return frozenset(el.value for el in s.elements if sat(c, el.pc))


def derive_family(f: VarFamily, c: Configuration) -> tuple[frozenset, ...]:
    _same_universe(f.universe, c)
    return tuple(m.value for m in f.members if sat(c, m.pc))


def _derive_configset(s: ConfigSet, c: Configuration) -> bool:
    return c in s


register_derivation(VarSet, derive_set)
register_derivation(VarFamily, derive_family)
# a ConfigSet is a variational boolean: true exactly at its members
register_derivation(ConfigSet, _derive_configset)


# --- lifting ----------------------------------------------------------------


class LiftStatus(enum.Enum):
    EXACT = "exact"
    QUASI_SOUND = "quasi-sound"
    FAILED = "failed"


@dataclass(frozen=True)
class LiftWitness:
    config: Configuration
    product_result: Any
    family_result: Any


@dataclass(frozen=True)
class LiftReport:
    status: LiftStatus
    witnesses: tuple[LiftWitness, ...] = ()
    checked: int = 0

    def __post_init__(self):
        if self.status is LiftStatus.FAILED and not self.witnesses:
            raise ValueError("a failed lift report needs at least one witness")

    @property
    def ok(self) -> bool:
        return self.status is not LiftStatus.FAILED

    def summary(self) -> str:
        if self.ok:
            return f"{self.status.value} ({self.checked} configurations checked)"
        cs = ", ".join(repr(w.config) for w in self.witnesses)
        return f"failed at {len(self.witnesses)} of {self.checked} configurations: {cs}"


def _configs(fm: FeatureModel, scope: Optional[FeatExpr]) -> list[Configuration]:
    return (fm.scope(scope) if scope is not None else fm.conf).configs()


def check_lift(
    f: Callable[[Any], Any],
    F: Callable[[Any], Any],
    x: Any,
    fm: FeatureModel,
    out_derive: Callable[[Any, Configuration], Any] = derive,
    in_derive: Callable[[Any, Configuration], Any] = derive,
    eq: Callable[[Any, Any], bool] = operator.eq,
    scope: Optional[FeatExpr] = None,
) -> LiftReport:
    """Check ``out_derive(F(x), c) == f(in_derive(x, c))`` at every valid ``c``.

    ``scope`` restricts the check to valid configurations satisfying it.
    """
    family = F(x)
    configs = _configs(fm, scope)
    witnesses = []
    for c in configs:
        lifted = out_derive(family, c)
        product = f(in_derive(x, c))
        if not eq(lifted, product):
            witnesses.append(LiftWitness(c, product, lifted))
    status = LiftStatus.FAILED if witnesses else LiftStatus.EXACT
    return LiftReport(status, tuple(witnesses), len(configs))


def check_quasi_lift(
    f: Callable[[Any], Any],
    F: Callable[[Any], Any],
    x: Any,
    fm: FeatureModel,
    ok: Callable[[Any], bool],
    family_ok: Optional[Callable[[Any], bool]] = None,
    in_derive: Callable[[Any, Configuration], Any] = derive,
    scope: Optional[FeatExpr] = None,
) -> LiftReport:
    """Check soundness only: a clean family verdict implies every product is clean.

    ``ok`` judges product outputs; ``family_ok`` judges ``F(x)`` and defaults to ``ok``.
    """
    family = F(x)
    configs = _configs(fm, scope)
    if not (family_ok or ok)(family):
        # a reported violation never contradicts soundness
        return LiftReport(LiftStatus.QUASI_SOUND, (), len(configs))
    witnesses = []
    for c in configs:
        product = f(in_derive(x, c))
        if not ok(product):
            witnesses.append(LiftWitness(c, product, family))
    status = LiftStatus.FAILED if witnesses else LiftStatus.QUASI_SOUND
    return LiftReport(status, tuple(witnesses), len(configs))
