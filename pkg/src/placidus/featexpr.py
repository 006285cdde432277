"""Feature universes, feature expressions and their configuration-set semantics.

A configuration over a universe of ``n`` features is encoded as an ``n``-bit
mask (feature ``i`` at bit ``i``).  A :class:`ConfigSet` is an exact boolean
vector over all ``2**n`` masks, so every set operation is a numpy vector op.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Optional, Union

import numpy as np

HARD_MAX_FEATURES = 24


def max_features() -> int:
    """Enumeration bound; ``PLACIDUS_MAX_FEATURES`` may lower it, never raise it."""
    raw = os.environ.get("PLACIDUS_MAX_FEATURES")
    if raw is None:
        return HARD_MAX_FEATURES
    try:
        value = int(raw)
    except ValueError:
        return HARD_MAX_FEATURES
    return max(0, min(value, HARD_MAX_FEATURES))


class FeatureError(ValueError):
    """Base class for feature-universe and expression errors."""


class EnumerationBoundError(FeatureError):
    pass


class UnknownFeatureError(FeatureError):
    def __init__(self, name: str, pos: Optional[int] = None):
        self.name = name
        self.pos = pos
        where = f" at position {pos}" if pos is not None else ""
        super().__init__(f"unknown feature {name!r}{where}")


class FeatExprSyntaxError(FeatureError):
    def __init__(self, message: str, pos: int):
        self.pos = pos
        super().__init__(f"{message} at position {pos}")


class UniverseMismatchError(FeatureError):
    pass


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass(frozen=True)
class FeatureUniverse:
    features: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        if len(set(self.features)) != len(self.features):
            raise FeatureError(f"duplicate feature names in {self.features}")
        for name in self.features:
            if not _IDENT.fullmatch(name) or name in _KEYWORDS:
                raise FeatureError(f"invalid feature name {name!r}")
        bound = max_features()
        if len(self.features) > bound:
            raise EnumerationBoundError(
                f"universe has {len(self.features)} features; bound is {bound}"
            )

    def __len__(self) -> int:
        return len(self.features)

    def __contains__(self, name: object) -> bool:
        return name in self._index

    def __iter__(self) -> Iterator[str]:
        return iter(self.features)

    @cached_property
    def _index(self) -> dict[str, int]:
        return {f: i for i, f in enumerate(self.features)}

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownFeatureError(name) from None

    @property
    def n_configs(self) -> int:
        return 1 << len(self.features)

    @cached_property
    def _masks(self) -> np.ndarray:
        masks = np.arange(self.n_configs, dtype=np.int64)
        masks.setflags(write=False)
        return masks

    def config(self, names: Iterable[str] = ()) -> "Configuration":
        mask = 0
        for name in names:
            mask |= 1 << self.index(name)
        return Configuration(self, mask)

    def parse_config(self, text: str) -> "Configuration":
        """Parse ``"F1,F2"`` (empty string or ``"{}"`` for the empty configuration)."""
        text = text.strip()
        if text in ("", "{}"):
            return Configuration(self, 0)
        return self.config(part.strip() for part in text.split(",") if part.strip())


@dataclass(frozen=True, order=True)
class Configuration:
    universe: FeatureUniverse = field(compare=False)
    mask: int

    def __post_init__(self):
        if not 0 <= self.mask < self.universe.n_configs:
            raise FeatureError(f"mask {self.mask} outside universe of size {len(self.universe)}")

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.mask == other.mask and self.universe == other.universe

    def __hash__(self):
        return hash(self.mask)

    @property
    def members(self) -> frozenset[str]:
        return frozenset(self.names())

    def names(self) -> list[str]:
        return [f for i, f in enumerate(self.universe.features) if self.mask >> i & 1]

    def __contains__(self, feature: str) -> bool:
        return bool(self.mask >> self.universe.index(feature) & 1)

    def __str__(self) -> str:
        return ",".join(self.names())

    def __repr__(self) -> str:
        return "{" + ", ".join(self.names()) + "}"


class ConfigSet:
    """An exact set of configurations of one universe, one bit per subset."""

    __slots__ = ("universe", "bits")

    def __init__(self, universe: FeatureUniverse, bits: np.ndarray):
        bits = np.asarray(bits, dtype=bool)
        if bits.shape != (universe.n_configs,):
            raise ValueError("bit vector length does not match universe")
        bits.setflags(write=False)
        self.universe = universe
        self.bits = bits

    @classmethod
    def universal(cls, universe: FeatureUniverse) -> "ConfigSet":
        return cls(universe, np.ones(universe.n_configs, dtype=bool))

    @classmethod
    def empty(cls, universe: FeatureUniverse) -> "ConfigSet":
        return cls(universe, np.zeros(universe.n_configs, dtype=bool))

    @classmethod
    def of(cls, universe: FeatureUniverse, configs: Iterable[Configuration]) -> "ConfigSet":
        bits = np.zeros(universe.n_configs, dtype=bool)
        for c in configs:
            if c.universe != universe:
                raise UniverseMismatchError("configuration from a different universe")
            bits[c.mask] = True
        return cls(universe, bits)

    def _check(self, other: "ConfigSet") -> None:
        if not isinstance(other, ConfigSet):
            raise TypeError(f"expected ConfigSet, got {type(other).__name__}")
        if other.universe != self.universe:
            raise UniverseMismatchError("config sets over different universes")

    def __and__(self, other: "ConfigSet") -> "ConfigSet":
        self._check(other)
        return ConfigSet(self.universe, self.bits & other.bits)

    def __or__(self, other: "ConfigSet") -> "ConfigSet":
        self._check(other)
        return ConfigSet(self.universe, self.bits | other.bits)

    def __sub__(self, other: "ConfigSet") -> "ConfigSet":
        self._check(other)
        return ConfigSet(self.universe, self.bits & ~other.bits)

    def __invert__(self) -> "ConfigSet":
        return ConfigSet(self.universe, ~self.bits)

    def __le__(self, other: "ConfigSet") -> bool:
        self._check(other)
        return not bool(np.any(self.bits & ~other.bits))

    def __ge__(self, other: "ConfigSet") -> bool:
        return other <= self

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConfigSet):
            return NotImplemented
        return self.universe == other.universe and np.array_equal(self.bits, other.bits)

    def __hash__(self) -> int:
        return hash((self.universe, self.bits.tobytes()))

    def __contains__(self, c: Configuration) -> bool:
        if c.universe != self.universe:
            raise UniverseMismatchError("configuration from a different universe")
        return bool(self.bits[c.mask])

    def __len__(self) -> int:
        return int(np.count_nonzero(self.bits))

    def __bool__(self) -> bool:
        return bool(self.bits.any())

    def masks(self) -> list[int]:
        return [int(m) for m in np.flatnonzero(self.bits)]

    def __iter__(self) -> Iterator[Configuration]:
        for m in self.masks():
            yield Configuration(self.universe, m)

    def configs(self) -> list[Configuration]:
        return list(self)

    def __repr__(self) -> str:
        shown = ", ".join(repr(c) for c in list(self)[:8])
        more = ", ..." if len(self) > 8 else ""
        return f"ConfigSet([{shown}{more}])"


# --- expressions -----------------------------------------------------------


class FeatExpr:
    """Propositional expression over feature names."""

    __slots__ = ()

    def __and__(self, other: "FeatExpr") -> "FeatExpr":
        return And(self, other)

    def __or__(self, other: "FeatExpr") -> "FeatExpr":
        return Or(self, other)

    def __invert__(self) -> "FeatExpr":
        return Not(self)

    def atoms(self) -> frozenset[str]:
        raise NotImplementedError

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, eq=True, repr=False)
class All(FeatExpr):
    def atoms(self):
        return frozenset()

    def __repr__(self):
        return "All"


@dataclass(frozen=True, eq=True, repr=False)
class Nothing(FeatExpr):
    def atoms(self):
        return frozenset()

    def __repr__(self):
        return "Nothing"


@dataclass(frozen=True)
class Atom(FeatExpr):
    name: str

    def atoms(self):
        return frozenset([self.name])


@dataclass(frozen=True)
class Not(FeatExpr):
    arg: FeatExpr

    def atoms(self):
        return self.arg.atoms()


@dataclass(frozen=True)
class And(FeatExpr):
    left: FeatExpr
    right: FeatExpr

    def atoms(self):
        return self.left.atoms() | self.right.atoms()


@dataclass(frozen=True)
class Or(FeatExpr):
    left: FeatExpr
    right: FeatExpr

    def atoms(self):
        return self.left.atoms() | self.right.atoms()


TRUE = All()
FALSE = Nothing()

PresenceCondition = FeatExpr


def implies(a: FeatExpr, b: FeatExpr) -> FeatExpr:
    return Or(Not(a), b)


def xor(a: FeatExpr, b: FeatExpr) -> FeatExpr:
    return And(Or(a, b), Not(And(a, b)))


def conj(exprs: Iterable[FeatExpr]) -> FeatExpr:
    """Left-nested conjunction, dropping literal ``true`` operands."""
    result: Optional[FeatExpr] = None
    for e in exprs:
        if isinstance(e, All):
            continue
        result = e if result is None else And(result, e)
    return TRUE if result is None else result


_PREC = {Or: 1, And: 2}


def to_text(e: FeatExpr) -> str:
    """Render in the surface syntax; ``parse_featexpr(to_text(e))`` returns ``e``."""

    def go(e: FeatExpr, parent: int, right_child: bool) -> str:
        if isinstance(e, All):
            return "true"
        if isinstance(e, Nothing):
            return "false"
        if isinstance(e, Atom):
            return e.name
        if isinstance(e, Not):
            return "!" + go(e.arg, 3, False)
        prec = _PREC[type(e)]
        op = " & " if isinstance(e, And) else " | "
        text = go(e.left, prec, False) + op + go(e.right, prec, True)
        # binary operators are left-associative: a right child of equal rank needs parens
        if prec < parent or (prec == parent and right_child):
            return f"({text})"
        return text

    return go(e, 0, False)


def check_bound(e: FeatExpr, universe: FeatureUniverse) -> FeatExpr:
    for name in sorted(e.atoms()):
        if name not in universe:
            raise UnknownFeatureError(name)
    return e


# --- parser ----------------------------------------------------------------

_KEYWORDS = {"true", "false", "xor"}
_TOKEN = re.compile(
    r"\s*(?:(?P<arrow>->)|(?P<op>[!&|()~])|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<bad>\S))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while True:
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        pos = m.end()
        start = m.start(m.lastgroup)
        kind = m.lastgroup
        value = m.group(kind)
        if kind == "bad":
            raise FeatExprSyntaxError(f"unexpected character {value!r}", start)
        if kind == "op" and value == "~":
            value = "!"
        if kind == "arrow":
            kind = "op"
        if kind == "ident" and value == "xor":
            kind = "op"
        tokens.append((kind, value, start))
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    # precedence climbing: ->  <  xor  <  |  <  &  <  !
    LEVELS = ["->", "xor", "|", "&"]

    def __init__(self, text: str, universe: Optional[FeatureUniverse]):
        self.tokens = _tokenize(text)
        self.i = 0
        self.universe = universe

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, v, pos = self.take()
        if v != value or kind != "op":
            found = "end of input" if kind == "eof" else repr(v)
            raise FeatExprSyntaxError(f"expected {value!r}, found {found}", pos)

    def parse(self) -> FeatExpr:
        e = self.binary(0)
        kind, v, pos = self.peek()
        if kind != "eof":
            raise FeatExprSyntaxError(f"unexpected {v!r}", pos)
        return e

    def binary(self, level: int) -> FeatExpr:
        if level == len(self.LEVELS):
            return self.unary()
        op = self.LEVELS[level]
        left = self.binary(level + 1)
        while self.peek()[0] == "op" and self.peek()[1] == op:
            self.take()
            right = self.binary(level + 1)
            if op == "&":
                left = And(left, right)
            elif op == "|":
                left = Or(left, right)
            elif op == "xor":
                left = xor(left, right)
            else:
                left = implies(left, right)
        return left

    def unary(self) -> FeatExpr:
        kind, v, pos = self.take()
        if kind == "op" and v == "!":
            return Not(self.unary())
        if kind == "op" and v == "(":
            e = self.binary(0)
            self.expect(")")
            return e
        if kind == "ident":
            if v == "true":
                return TRUE
            if v == "false":
                return FALSE
            if self.universe is not None and v not in self.universe:
                raise UnknownFeatureError(v, pos)
            return Atom(v)
        found = "end of input" if kind == "eof" else repr(v)
        raise FeatExprSyntaxError(f"expected an expression, found {found}", pos)


def parse_featexpr(text: str, universe: Optional[FeatureUniverse] = None) -> FeatExpr:
    """Parse the surface syntax into core constructors.

    ``->`` becomes ``!a | b`` and ``xor`` becomes ``(a | b) & !(a & b)``.
    With ``universe=None`` any identifier is accepted as an atom; this is how
    state predicates over labels are parsed.
    """
    return _Parser(text, universe).parse()


# --- semantics -------------------------------------------------------------


def semantics(e: FeatExpr, universe: FeatureUniverse) -> ConfigSet:
    """Configurations satisfying ``e``, by structural recursion over ``e``."""
    return ConfigSet(universe, _sem(e, universe))


def _sem(e: FeatExpr, u: FeatureUniverse) -> np.ndarray:
    if isinstance(e, All):
        return np.ones(u.n_configs, dtype=bool)
    if isinstance(e, Nothing):
        return np.zeros(u.n_configs, dtype=bool)
    if isinstance(e, Atom):
        return (u._masks >> u.index(e.name) & 1).astype(bool)
    if isinstance(e, Not):
        return ~_sem(e.arg, u)
    if isinstance(e, And):
        return _sem(e.left, u) & _sem(e.right, u)
    if isinstance(e, Or):
        return _sem(e.left, u) | _sem(e.right, u)
    raise TypeError(f"not a feature expression: {e!r}")


def evaluate(e: FeatExpr, members: Union[frozenset, set]) -> bool:
    """Direct recursive evaluation against a set of selected names."""
    if isinstance(e, All):
        return True
    if isinstance(e, Nothing):
        return False
    if isinstance(e, Atom):
        return e.name in members
    if isinstance(e, Not):
        return not evaluate(e.arg, members)
    if isinstance(e, And):
        return evaluate(e.left, members) and evaluate(e.right, members)
    if isinstance(e, Or):
        return evaluate(e.left, members) or evaluate(e.right, members)
    raise TypeError(f"not a feature expression: {e!r}")


def sat(c: Configuration, e: FeatExpr) -> bool:
    for name in e.atoms():
        if name not in c.universe:
            raise UniverseMismatchError(f"feature {name!r} is not in the configuration's universe")
    return _eval_mask(e, c.mask, c.universe)


def _eval_mask(e: FeatExpr, mask: int, u: FeatureUniverse) -> bool:
    if isinstance(e, All):
        return True
    if isinstance(e, Nothing):
        return False
    if isinstance(e, Atom):
        return bool(mask >> u.index(e.name) & 1)
    if isinstance(e, Not):
        return not _eval_mask(e.arg, mask, u)
    if isinstance(e, And):
        return _eval_mask(e.left, mask, u) and _eval_mask(e.right, mask, u)
    if isinstance(e, Or):
        return _eval_mask(e.left, mask, u) or _eval_mask(e.right, mask, u)
    raise TypeError(f"not a feature expression: {e!r}")


def valid_configs(fm: FeatExpr, universe: FeatureUniverse) -> list[Configuration]:
    """All configurations satisfying ``fm``, in ascending mask order."""
    check_bound(fm, universe)
    return semantics(fm, universe).configs()


def equivalent(a: FeatExpr, b: FeatExpr, universe: FeatureUniverse) -> bool:
    return semantics(a, universe) == semantics(b, universe)


@dataclass(frozen=True)
class FeatureModel:
    """A universe together with the constraint selecting its valid configurations."""

    universe: FeatureUniverse
    expr: FeatExpr = TRUE

    def __post_init__(self):
        check_bound(self.expr, self.universe)

    @classmethod
    def parse(cls, features: Iterable[str], model: str = "true") -> "FeatureModel":
        universe = FeatureUniverse(tuple(features))
        return cls(universe, parse_featexpr(model, universe))

    @cached_property
    def conf(self) -> ConfigSet:
        return semantics(self.expr, self.universe)

    def configs(self) -> list[Configuration]:
        return self.conf.configs()

    def scope(self, pc: FeatExpr) -> ConfigSet:
        """Valid configurations that also satisfy ``pc``."""
        return self.conf & semantics(check_bound(pc, self.universe), self.universe)

    def restrict(self, pc: FeatExpr) -> "FeatureModel":
        return FeatureModel(self.universe, conj([self.expr, pc]))

    def is_valid(self, c: Configuration) -> bool:
        return c.universe == self.universe and c in self.conf

    def pc(self, text: str) -> FeatExpr:
        return parse_featexpr(text, self.universe)

    def to_json(self) -> dict:
        return {"features": list(self.universe.features), "model": to_text(self.expr)}

    @classmethod
    def from_json(cls, obj: dict) -> "FeatureModel":
        return cls.parse(obj["features"], obj.get("model", "true"))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "FeatureModel":
        return cls.from_json(json.loads(Path(path).read_text()))
