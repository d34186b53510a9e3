"""Offline solvers for max v(S) s.t. sum of costs <= B.

Every solver accepts an optional ``costs`` vector overriding the instance's
true costs; mechanisms pass declared bids here.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Optional, Sequence

from .valuations import ValuationError, set_key

MAX_BRUTE_FORCE = 24
EXACT_SAMPLE_LIMIT = 20


class SolverRefused(ValueError):
    pass


class ContractError(ValueError):
    pass


@dataclass(frozen=True)
class Solution:
    set: frozenset
    value: Fraction
    total_cost: Fraction

    @property
    def agents(self) -> tuple:
        return set_key(self.set)


def _ground(inst, restrict) -> list:
    if restrict is None:
        return list(range(inst.n))
    ground = sorted(set(restrict))
    for i in ground:
        if not 0 <= i < inst.n:
            raise ValuationError(f"agent {i} outside the instance")
    return ground


def _better(value, key, best_value, best_key) -> bool:
    if best_value is None or value > best_value:
        return True
    return value == best_value and key < best_key


def brute_force_opt(inst, restrict: Optional[Iterable[int]] = None,
                    costs: Optional[Sequence[Fraction]] = None) -> Solution:
    """Exact optimum by enumerating every subset of the restricted ground set.

    Ties go to the lexicographically smallest sorted tuple of agents.
    """
    ground = _ground(inst, restrict)
    if len(ground) > MAX_BRUTE_FORCE:
        raise SolverRefused(f"{len(ground)} agents exceed the brute-force limit of {MAX_BRUTE_FORCE}")
    costs = inst.costs if costs is None else costs
    budget, v = inst.budget, inst.oracle.eval
    best_value, best_key, best_cost = None, None, None
    m = len(ground)
    # enumerate by bitmask; keeps memory flat
    for mask in range(1 << m):
        members = [ground[b] for b in range(m) if mask >> b & 1]
        total = sum((costs[i] for i in members), Fraction(0))
        if total > budget:
            continue
        value = v(members)
        key = tuple(members)
        if _better(value, key, best_value, best_key):
            best_value, best_key, best_cost = value, key, total
    return Solution(frozenset(best_key), best_value, best_cost)


def _ratio_key(gain: Fraction, cost: Fraction):
    # zero-cost agents with positive gain rank above every finite ratio
    if cost == 0:
        return (1, gain)
    return (0, gain / cost)


def _greedy_complete(v, costs, budget, start: tuple, candidates: list):
    chosen = list(start)
    spent = sum((costs[i] for i in chosen), Fraction(0))
    value = v(chosen)
    remaining = [i for i in candidates if i not in start]
    while remaining:
        best = None
        for i in remaining:
            if spent + costs[i] > budget:
                continue
            gain = v(chosen + [i]) - value
            if gain <= 0:
                continue
            key = _ratio_key(gain, costs[i])
            # strict > keeps the lowest index on ties (remaining is sorted)
            if best is None or key > best[0]:
                best = (key, i, gain)
        if best is None:
            break
        _, i, gain = best
        chosen.append(i)
        spent += costs[i]
        value += gain
        remaining.remove(i)
    return chosen, value, spent


def greedy_knapsack_monotone(inst, restrict: Optional[Iterable[int]] = None,
                             costs: Optional[Sequence[Fraction]] = None,
                             seed_size: int = 3) -> Solution:
    """Partial-enumeration greedy with a (1 - 1/e) guarantee for monotone v.

    Every feasible seed set of at most ``seed_size`` agents is completed by
    cost-benefit greedy; the best completed set wins (ties: lexicographic).
    """
    if not inst.oracle.monotone:
        raise ContractError("greedy_knapsack_monotone needs a monotone oracle")
    ground = _ground(inst, restrict)
    costs = inst.costs if costs is None else costs
    budget, v = inst.budget, inst.oracle.eval
    best_value, best_key, best_cost = Fraction(0), (), Fraction(0)
    for r in range(min(seed_size, len(ground)) + 1):
        for seed in combinations(ground, r):
            if sum((costs[i] for i in seed), Fraction(0)) > budget:
                continue
            value = v(seed)
            if _better(value, seed, best_value, best_key):
                best_value, best_key = value, seed
                best_cost = sum((costs[i] for i in seed), Fraction(0))
            chosen, value, spent = _greedy_complete(v, costs, budget, seed, ground)
            key = tuple(sorted(chosen))
            if _better(value, key, best_value, best_key):
                best_value, best_key, best_cost = value, key, spent
    return Solution(frozenset(best_key), best_value, best_cost)


def _random_greedy(inst, ground, costs, rng: random.Random) -> Solution:
    # Buchbinder-style random greedy adapted to a knapsack: at each step pick
    # uniformly among the best-ratio feasible candidates with positive gain.
    v, budget = inst.oracle.eval, inst.budget
    chosen, spent, value = [], Fraction(0), Fraction(0)
    remaining = list(ground)
    while True:
        scored = []
        for i in remaining:
            if spent + costs[i] > budget:
                continue
            gain = v(chosen + [i]) - value
            if gain > 0:
                scored.append((_ratio_key(gain, costs[i]), i, gain))
        if not scored:
            break
        scored.sort(reverse=True)
        top = scored[: max(1, min(len(scored), 3))]
        _, i, gain = top[rng.randrange(len(top))]
        chosen.append(i)
        remaining.remove(i)
        spent += costs[i]
        value += gain
    return Solution(frozenset(chosen), value, spent)


def solve_sample_nonmonotone(inst, restrict: Optional[Iterable[int]] = None,
                             costs: Optional[Sequence[Fraction]] = None) -> Solution:
    """Solver used on the sample set for general submodular v.

    Up to ``EXACT_SAMPLE_LIMIT`` agents the exact optimum is returned.  Above
    that a seeded random-greedy heuristic is used; it carries no certified
    approximation factor.
    """
    ground = _ground(inst, restrict)
    if len(ground) <= EXACT_SAMPLE_LIMIT:
        return brute_force_opt(inst, ground, costs=costs)
    costs = inst.costs if costs is None else costs
    rng = random.Random(hash(tuple(ground)) & 0xFFFFFFFF)
    best = None
    for _ in range(8):
        sol = _random_greedy(inst, ground, costs, rng)
        if best is None or _better(sol.value, sol.agents, best.value, best.agents):
            best = sol
    return best
