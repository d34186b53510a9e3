"""Two-agent canonical instances and the exhaustive lower-bound search.

Agents are labelled 1 and 2 here, matching the two-agent construction.
Profiles are addressed by grid indices (a, b), meaning costs (aB/k, bB/k).
A monotone deterministic table is a pair of threshold curves: agent 1 wins
at (a, b) iff a <= th1[b], agent 2 iff b <= th2[a]; a threshold of -1 means
the agent never wins against that opponent cost.  The winner's payment is
the largest grid cost at which she still wins, threshold * B / k.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .valuations import _frac

MAX_SEARCH_K = 6
_CHUNK = 1 << 16


class LowerBoundError(ValueError):
    pass


class CharacterizationError(LowerBoundError):
    """Allocation violates the monotonicity condition of the payment identity."""


@dataclass(frozen=True)
class CanonicalGrid:
    k: int
    budget: Fraction = Fraction(1)

    def __post_init__(self):
        if not isinstance(self.k, int) or self.k < 2:
            raise LowerBoundError("k must be an integer >= 2")
        object.__setattr__(self, "budget", _frac(self.budget))
        if self.budget <= 0:
            raise LowerBoundError("budget must be positive")

    def cost(self, index: int) -> Fraction:
        return self.budget * index / self.k

    def profiles(self):
        r = range(self.k + 1)
        return [(a, b) for a in r for b in r]

    def budget_line(self):
        return [(a, self.k - a) for a in range(self.k + 1)]

    def optimum(self, profile) -> int:
        """v(S*(c)) for unit values: both agents fit iff c1 + c2 <= B."""
        a, b = profile
        return 2 if a + b <= self.k else 1


@dataclass
class CanonicalMechTable:
    grid: CanonicalGrid
    allocation: dict                  # (a, b) -> frozenset of {1, 2}
    payments: dict                    # (a, b) -> (p1, p2)
    thresholds: tuple = ()            # (th1, th2) when known

    def value(self, profile) -> int:
        return len(self.allocation[profile])

    def budget_violations(self) -> list:
        b = self.grid.budget
        return [(prof, p) for prof, p in sorted(self.payments.items()) if p[0] + p[1] > b]

    @property
    def budget_feasible(self) -> bool:
        return not self.budget_violations()

    def ir_violations(self) -> list:
        out = []
        for prof, (p1, p2) in sorted(self.payments.items()):
            alloc = self.allocation[prof]
            for agent, pay in ((1, p1), (2, p2)):
                if agent in alloc and pay < self.grid.cost(prof[agent - 1]):
                    out.append((prof, agent, pay))
        return out

    def expected_ratio(self, dist: "ProfileDistribution") -> Fraction:
        return sum((p * Fraction(self.value(c), self.grid.optimum(c))
                    for c, p in zip(dist.support, dist.probs)), Fraction(0))

    def to_dict(self) -> dict:
        g = self.grid
        rows = []
        for prof in g.profiles():
            rows.append({"c1": str(g.cost(prof[0])), "c2": str(g.cost(prof[1])),
                         "winners": sorted(self.allocation[prof]),
                         "payments": [str(x) for x in self.payments[prof]]})
        d = {"k": g.k, "budget": str(g.budget), "profiles": rows}
        if self.thresholds:
            d["thresholds"] = {"agent1": list(self.thresholds[0]),
                               "agent2": list(self.thresholds[1])}
        return d

    def matrix(self) -> np.ndarray:
        """Number of winners at (a, b) as a (k+1)x(k+1) array, row = a."""
        k = self.grid.k
        m = np.zeros((k + 1, k + 1), dtype=int)
        for (a, b), alloc in self.allocation.items():
            m[a, b] = len(alloc)
        return m


@dataclass(frozen=True)
class ProfileDistribution:
    support: tuple                    # grid-index profiles
    probs: tuple
    grid: CanonicalGrid

    def __post_init__(self):
        if len(self.support) != len(self.probs) or not self.support:
            raise LowerBoundError("support and probabilities must be non-empty and aligned")
        if any(p < 0 for p in self.probs) or sum(self.probs) != 1:
            raise LowerBoundError("probabilities must be non-negative and sum to 1")

    def costs(self) -> list:
        g = self.grid
        return [(g.cost(a), g.cost(b)) for a, b in self.support]


def build_pk(k: int, budget=1, figure_variant: bool = False) -> ProfileDistribution:
    """Uniform distribution on the budget-line profiles (iB/k, (k-i)B/k).

    i runs over 1..k; ``figure_variant`` uses 0..k-1 instead (the endpoint
    convention of the illustration).
    """
    grid = CanonicalGrid(k, budget)
    idx = range(0, k) if figure_variant else range(1, k + 1)
    support = tuple((i, k - i) for i in idx)
    return ProfileDistribution(support, (Fraction(1, k),) * k, grid)


def _as_index(grid: CanonicalGrid, profile) -> tuple:
    out = []
    for c in profile:
        if isinstance(c, int):
            idx = c
        else:
            x = _frac(c) * grid.k / grid.budget
            if x.denominator != 1:
                raise LowerBoundError(f"cost {c} is not on the grid")
            idx = int(x)
        if not 0 <= idx <= grid.k:
            raise LowerBoundError(f"profile {profile} outside the grid")
        out.append(idx)
    return tuple(out)


def payments_from_identity(allocation: dict, grid: CanonicalGrid) -> CanonicalMechTable:
    """Threshold payments for a monotone allocation on the grid.

    ``allocation`` maps grid-index profiles (a, b) to subsets of {1, 2};
    missing profiles allocate nothing.  Monotonicity is verified first: if
    an agent wins at some cost she must also win at every lower grid cost.
    """
    k = grid.k
    alloc = {p: frozenset(allocation.get(p, ())) for p in grid.profiles()}
    for p, s in alloc.items():
        if not s <= {1, 2}:
            raise LowerBoundError(f"allocation at {p} names agents outside {{1, 2}}")
    th = ([-1] * (k + 1), [-1] * (k + 1))
    for agent in (1, 2):
        for other in range(k + 1):
            last = -1
            for own in range(k + 1):
                prof = (own, other) if agent == 1 else (other, own)
                if agent in alloc[prof]:
                    if own != last + 1:
                        lower = (own - 1, other) if agent == 1 else (other, own - 1)
                        raise CharacterizationError(
                            f"agent {agent} wins at {prof} but not at lower cost {lower}")
                    last = own
            th[agent - 1][other] = last
    payments = {}
    for (a, b), s in alloc.items():
        p1 = grid.cost(th[0][b]) if 1 in s else Fraction(0)
        p2 = grid.cost(th[1][a]) if 2 in s else Fraction(0)
        payments[(a, b)] = (p1, p2)
    return CanonicalMechTable(grid, alloc, payments, (tuple(th[0]), tuple(th[1])))


def table_from_thresholds(th1: Sequence[int], th2: Sequence[int],
                          grid: CanonicalGrid) -> CanonicalMechTable:
    k = grid.k
    if len(th1) != k + 1 or len(th2) != k + 1:
        raise LowerBoundError("threshold curves need k+1 entries")
    alloc = {}
    for a, b in grid.profiles():
        s = set()
        if a <= th1[b]:
            s.add(1)
        if b <= th2[a]:
            s.add(2)
        alloc[(a, b)] = s
    return payments_from_identity(alloc, grid)


@dataclass
class BlockingResult:
    profiles: tuple
    value_sum: int
    budget_feasible: bool

    @property
    def passed(self) -> bool:
        return self.value_sum <= 3


def check_profile_blocking(table: CanonicalMechTable, profiles: Optional[Sequence] = None):
    """Sum of winners' values at two budget-line profiles (at most 3 for a feasible table).

    With ``profiles=None`` every pair of distinct budget-line profiles is
    checked and the list of results is returned.
    """
    g = table.grid
    feasible = table.budget_feasible
    if profiles is None:
        return [BlockingResult((p, q), table.value(p) + table.value(q), feasible)
                for p, q in itertools.combinations(g.budget_line(), 2)]
    p, q = (_as_index(g, x) for x in profiles)
    for x in (p, q):
        if x[0] + x[1] != g.k:
            raise LowerBoundError(f"profile {x} is not on the budget line")
    return BlockingResult((p, q), table.value(p) + table.value(q), feasible)


# -- exhaustive search ------------------------------------------------------

@dataclass
class SearchResult:
    k: int
    max_ratio: Fraction
    witness: CanonicalMechTable
    curves_searched: int
    tables_checked: int
    blocking_failures: int
    figure_variant: bool = False

    @property
    def ceiling(self) -> Fraction:
        return (1 + Fraction(1, self.k)) / 2

    def to_dict(self) -> dict:
        return {"k": self.k, "max_expected_ratio": str(self.max_ratio),
                "ceiling": str(self.ceiling), "matches_ceiling": self.max_ratio == self.ceiling,
                "curves_searched": self.curves_searched,
                "tables_checked": self.tables_checked,
                "blocking_failures": self.blocking_failures,
                "figure_variant": self.figure_variant,
                "witness": self.witness.to_dict()}


def _best_response(th1: np.ndarray, k: int) -> np.ndarray:
    """Largest budget-feasible th2[a] for every a, given agent 1's curves.

    Where both win at (a, b) the payments are th1[b] and th2[a] grid steps,
    so th2[a] = t is feasible iff th1[b] + t <= k for all b <= t with a <= th1[b].
    Feasibility is downward closed in t, so the largest feasible t is optimal.
    """
    m = th1.shape[0]
    out = np.full((m, k + 1), -1, dtype=np.int8)
    for a in range(k + 1):
        a_wins = th1 >= a                                     # (m, b)
        ok = np.ones(m, dtype=bool)
        for t in range(k + 1):
            ok &= (~a_wins[:, :t + 1] | (th1[:, :t + 1] + t <= k)).all(axis=1)
            out[ok, a] = t
    return out


def max_expected_ratio(k: int, budget=1, figure_variant: bool = False) -> SearchResult:
    """Best E_{c~P(k)}[v(A(c))/v(S*(c))] over monotone, budget-feasible grid tables.

    All (k+2)^(k+1) curves of agent 1 are enumerated; for each, agent 2's
    curve is optimised coordinate-wise (exact, see ``_best_response``).
    Ties keep the first maximiser in lexicographic order of agent 1's curve.
    """
    if not isinstance(k, int) or k < 2:
        raise LowerBoundError("k must be an integer >= 2")
    if k > MAX_SEARCH_K:
        raise LowerBoundError(f"k = {k} exceeds the tractable search limit {MAX_SEARCH_K}")
    dist = build_pk(k, budget, figure_variant)
    grid = dist.grid
    sup_a = np.array([a for a, _ in dist.support])
    sup_b = np.array([b for _, b in dist.support])
    line_a = np.arange(k + 1)
    line_b = k - line_a
    values = np.arange(-1, k + 1, dtype=np.int8)
    total = (k + 2) ** (k + 1)
    best_score, best_th1, best_th2 = -1, None, None
    blocking_failures = 0
    curves = itertools.product(values, repeat=k + 1)
    done = 0
    while done < total:
        chunk = np.array(list(itertools.islice(curves, _CHUNK)), dtype=np.int8)
        done += len(chunk)
        th2 = _best_response(chunk, k)
        wins1 = chunk[:, sup_b] >= sup_a
        wins2 = th2[:, sup_a] >= sup_b
        score = wins1.sum(axis=1) + wins2.sum(axis=1)
        both_line = (chunk[:, line_b] >= line_a) & (th2[:, line_a] >= line_b)
        blocking_failures += int((both_line.sum(axis=1) > 1).sum())
        j = int(np.argmax(score))
        if score[j] > best_score:
            best_score, best_th1, best_th2 = int(score[j]), chunk[j].tolist(), th2[j].tolist()
    witness = table_from_thresholds(best_th1, best_th2, grid)
    if not witness.budget_feasible:
        raise LowerBoundError("internal error: witness table is not budget feasible")
    # each support profile has optimum 2 and probability 1/k
    ratio = Fraction(best_score, 2 * k)
    if witness.expected_ratio(dist) != ratio:
        raise LowerBoundError("internal error: witness ratio mismatch")
    return SearchResult(k, ratio, witness, total, total, blocking_failures, figure_variant)


# -- Yao's principle -----------------------------------------------------------

@dataclass
class YaoReport:
    lhs: Fraction
    rhs: Fraction
    per_profile: list = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


def yao_check(mixture: Sequence, dist: ProfileDistribution) -> YaoReport:
    """min over support of the mixture's expected ratio vs max over its tables.

    ``mixture`` is a sequence of (probability, CanonicalMechTable) pairs.
    """
    probs = [_frac(p) for p, _ in mixture]
    if not mixture or any(p < 0 for p in probs) or sum(probs) != 1:
        raise LowerBoundError("mixture probabilities must be non-negative and sum to 1")
    g = dist.grid
    per_profile = []
    for c in dist.support:
        opt = g.optimum(c)
        per_profile.append(sum((p * Fraction(t.value(c), opt)
                                for p, (_, t) in zip(probs, mixture)), Fraction(0)))
    rhs = max(t.expected_ratio(dist) for _, t in mixture)
    return YaoReport(min(per_profile), rhs, per_profile)


def random_table(grid: CanonicalGrid, rng: np.random.Generator) -> CanonicalMechTable:
    """A random monotone, budget-feasible table: random agent-1 curve, best response for agent 2."""
    k = grid.k
    th1 = rng.integers(-1, k + 1, size=(1, k + 1)).astype(np.int8)
    th2 = _best_response(th1, k)
    return table_from_thresholds(th1[0].tolist(), th2[0].tolist(), grid)


def constant_table(grid: CanonicalGrid, winners) -> CanonicalMechTable:
    return payments_from_identity({p: set(winners) for p in grid.profiles()}, grid)


def theorem_chain(k: int) -> dict:
    """Required ratio 1/(2 - 2/k) against the search ceiling (1 + 1/k)/2.

    The consistency assumption needs the first to be at most the second;
    it never is, which is the contradiction.
    """
    if k < 2:
        raise LowerBoundError("k must be >= 2")
    required = 1 / (2 - Fraction(2, k))
    ceiling = (1 + Fraction(1, k)) / 2
    return {"k": k, "required": required, "ceiling": ceiling,
            "contradiction": required > ceiling}
