"""Set-function oracles and exhaustive checkers for submodularity.

All families are rational-valued; values are returned as ``Fraction`` so
that every inequality the checkers test is decided exactly.

Agents are indexed ``0 .. n-1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Iterator, Mapping, Optional, Sequence

MONOTONE = "monotone-submodular"
GENERAL = "general-submodular"
ADDITIVE = "additive"
KINDS = (MONOTONE, GENERAL, ADDITIVE)


class ValuationError(ValueError):
    pass


class EnumerationRefused(ValuationError):
    """Raised when an exhaustive check would be too expensive."""


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        # floats go through their shortest repr so 0.1 means 1/10
        return Fraction(repr(x))
    return Fraction(x)


def subsets(items: Sequence[int]) -> Iterator[frozenset]:
    """All subsets of ``items`` ordered by size, then lexicographically."""
    items = sorted(items)
    for r in range(len(items) + 1):
        for combo in combinations(items, r):
            yield frozenset(combo)


def set_key(s: Iterable[int]) -> tuple:
    return tuple(sorted(s))


@dataclass(frozen=True)
class ValuationOracle:
    """Base class: concrete families implement ``_value``."""

    ground_size: int
    kind: str
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    family = "abstract"

    def __post_init__(self):
        if self.ground_size < 0:
            raise ValuationError("ground_size must be non-negative")
        if self.kind not in KINDS:
            raise ValuationError(f"unknown valuation kind {self.kind!r}")

    @property
    def monotone(self) -> bool:
        return self.kind in (MONOTONE, ADDITIVE)

    def _check(self, s: frozenset) -> None:
        for i in s:
            if not 0 <= i < self.ground_size:
                raise ValuationError(f"agent {i} outside 0..{self.ground_size - 1}")

    def eval(self, s: Iterable[int]) -> Fraction:
        s = frozenset(s)
        hit = self._cache.get(s)
        if hit is not None:
            return hit
        self._check(s)
        val = self._value(s)
        self._cache[s] = val
        return val

    def marginal(self, i: int, s: Iterable[int]) -> Fraction:
        s = frozenset(s)
        if i in s:
            raise ValuationError(f"agent {i} already in the set")
        return self.eval(s | {i}) - self.eval(s)

    def _value(self, s: frozenset) -> Fraction:  # pragma: no cover - abstract
        raise NotImplementedError

    def payload(self) -> dict:  # pragma: no cover - abstract
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"family": self.family, "kind": self.kind, "payload": self.payload()}


@dataclass(frozen=True)
class Additive(ValuationOracle):
    weights: tuple = ()

    family = "additive"

    def __init__(self, weights: Sequence):
        w = tuple(_frac(x) for x in weights)
        if any(x < 0 for x in w):
            raise ValuationError("additive weights must be non-negative")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "ground_size", len(w))
        object.__setattr__(self, "kind", ADDITIVE)
        object.__setattr__(self, "_cache", {})
        self.__post_init__()

    def _value(self, s):
        return sum((self.weights[i] for i in s), Fraction(0))

    def payload(self):
        return {"weights": [str(w) for w in self.weights]}


@dataclass(frozen=True)
class Coverage(ValuationOracle):
    """Weighted coverage: v(S) is the weight of the union of the agents' sets."""

    sets: tuple = ()
    element_weights: tuple = ()

    family = "coverage"

    def __init__(self, sets: Sequence[Iterable[int]], element_weights: Sequence):
        ew = tuple(_frac(x) for x in element_weights)
        if any(x < 0 for x in ew):
            raise ValuationError("element weights must be non-negative")
        fs = tuple(frozenset(s) for s in sets)
        for s in fs:
            if any(not 0 <= e < len(ew) for e in s):
                raise ValuationError("coverage element outside the universe")
        object.__setattr__(self, "sets", fs)
        object.__setattr__(self, "element_weights", ew)
        object.__setattr__(self, "ground_size", len(fs))
        object.__setattr__(self, "kind", MONOTONE)
        object.__setattr__(self, "_cache", {})
        self.__post_init__()

    def _value(self, s):
        covered = set()
        for i in s:
            covered |= self.sets[i]
        return sum((self.element_weights[e] for e in covered), Fraction(0))

    def payload(self):
        return {
            "sets": [sorted(s) for s in self.sets],
            "element_weights": [str(w) for w in self.element_weights],
        }


@dataclass(frozen=True)
class GraphCut(ValuationOracle):
    """Undirected cut function; non-monotone in general."""

    weights: tuple = ()

    family = "cut"

    def __init__(self, weights: Sequence[Sequence]):
        n = len(weights)
        w = tuple(tuple(_frac(x) for x in row) for row in weights)
        for i in range(n):
            if len(w[i]) != n:
                raise ValuationError("cut weight matrix must be square")
            if w[i][i] != 0:
                raise ValuationError("cut weight matrix must have a zero diagonal")
            for j in range(n):
                if w[i][j] < 0 or w[i][j] != w[j][i]:
                    raise ValuationError("cut weights must be symmetric and non-negative")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "ground_size", n)
        object.__setattr__(self, "kind", GENERAL)
        object.__setattr__(self, "_cache", {})
        self.__post_init__()

    def _value(self, s):
        total = Fraction(0)
        for i in s:
            row = self.weights[i]
            for j in range(self.ground_size):
                if j not in s:
                    total += row[j]
        return total

    def payload(self):
        return {"weights": [[str(x) for x in row] for row in self.weights]}


@dataclass(frozen=True)
class LookupTable(ValuationOracle):
    """Explicit subset -> value map; used to plant violations and in tests."""

    table: Mapping = field(default_factory=dict)

    family = "table"

    def __init__(self, n: int, table: Mapping, kind: str = GENERAL):
        t = {frozenset(k): _frac(v) for k, v in table.items()}
        for s in subsets(range(n)):
            if s not in t:
                raise ValuationError(f"lookup table misses subset {set_key(s)}")
            if t[s] < 0:
                raise ValuationError("lookup table values must be non-negative")
        if t[frozenset()] != 0:
            raise ValuationError("lookup table must satisfy v(empty) = 0")
        object.__setattr__(self, "table", t)
        object.__setattr__(self, "ground_size", n)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "_cache", {})
        self.__post_init__()

    @classmethod
    def from_function(cls, n: int, fn, kind: str = GENERAL) -> "LookupTable":
        return cls(n, {s: fn(s) for s in subsets(range(n))}, kind=kind)

    def _value(self, s):
        return self.table[s]

    def payload(self):
        return {
            "n": self.ground_size,
            "entries": [[list(set_key(s)), str(v)] for s, v in sorted(
                self.table.items(), key=lambda kv: (len(kv[0]), set_key(kv[0])))],
        }

    def __hash__(self):
        return hash((self.ground_size, self.kind, frozenset(self.table.items())))


def oracle_from_dict(d: Mapping) -> ValuationOracle:
    family = d.get("family")
    p = d.get("payload", {})
    try:
        if family == "additive":
            return Additive(p["weights"])
        if family == "coverage":
            return Coverage(p["sets"], p["element_weights"])
        if family == "cut":
            return GraphCut(p["weights"])
        if family == "table":
            entries = {frozenset(s): v for s, v in p["entries"]}
            return LookupTable(p["n"], entries, kind=d.get("kind", GENERAL))
    except (KeyError, TypeError) as exc:
        raise ValuationError(f"malformed {family} payload: {exc}") from exc
    raise ValuationError(f"unknown valuation family {family!r}")


# -- property checkers -------------------------------------------------------

@dataclass
class PropertyReport:
    passed: bool
    counterexample: Optional[dict] = None

    def __post_init__(self):
        if self.passed != (self.counterexample is None):
            raise ValueError("counterexample must be present exactly when the check fails")


def _guard(oracle: ValuationOracle, max_n: int) -> None:
    if oracle.ground_size > max_n:
        raise EnumerationRefused(
            f"ground set of size {oracle.ground_size} exceeds max_n={max_n}")


def check_submodular(oracle: ValuationOracle, max_n: int = 12) -> PropertyReport:
    """Exhaustively test v(i|S) >= v(i|T) for S ⊆ T, i ∉ T.

    Enumeration is by (|S|, S), then T ⊇ S by (|T|, T), then i; the first
    violation in that order is reported.
    """
    _guard(oracle, max_n)
    ground = range(oracle.ground_size)
    for s in subsets(ground):
        rest = [j for j in ground if j not in s]
        for extra in subsets(rest):
            t = s | extra
            for i in ground:
                if i in t:
                    continue
                ms, mt = oracle.marginal(i, s), oracle.marginal(i, t)
                if ms < mt:
                    return PropertyReport(False, {
                        "S": set_key(s), "T": set_key(t), "i": i,
                        "lhs": ms, "rhs": mt,
                    })
    return PropertyReport(True)


def nemhauser_rhs(oracle: ValuationOracle, s: frozenset, t: frozenset) -> Fraction:
    """v(S) + sum_{i in T\\S} v(i|S) - sum_{i in S\\T} v(i|(S∪T)-i).

    The last sum is subtracted.  Adding it instead breaks the equivalence
    for non-monotone functions: a single-edge cut with S = {0, 1}, T = ∅
    would give 0 <= -2.
    """
    union = s | t
    rhs = oracle.eval(s)
    for i in t - s:
        rhs += oracle.marginal(i, s)
    for i in s - t:
        rhs -= oracle.marginal(i, union - {i})
    return rhs


def check_nemhauser(oracle: ValuationOracle, max_n: int = 12) -> PropertyReport:
    """Test v(T) <= nemhauser_rhs(S, T) for every pair of subsets."""
    _guard(oracle, max_n)
    all_sets = list(subsets(range(oracle.ground_size)))
    for s in all_sets:
        for t in all_sets:
            lhs = oracle.eval(t)
            rhs = nemhauser_rhs(oracle, s, t)
            if lhs > rhs:
                return PropertyReport(False, {
                    "S": set_key(s), "T": set_key(t), "lhs": lhs, "rhs": rhs,
                })
    return PropertyReport(True)


def check_monotone(oracle: ValuationOracle, max_n: int = 12) -> PropertyReport:
    _guard(oracle, max_n)
    ground = range(oracle.ground_size)
    for s in subsets(ground):
        for i in ground:
            if i not in s and oracle.marginal(i, s) < 0:
                return PropertyReport(False, {
                    "S": set_key(s), "T": set_key(s | {i}),
                    "lhs": oracle.eval(s), "rhs": oracle.eval(s | {i}),
                })
    return PropertyReport(True)
