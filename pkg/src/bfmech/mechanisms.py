"""Online posted-price mechanisms for monotone submodular valuations.

Each run is a pure function of (instance, arrival order, coin transcript,
parameters).  Declared costs default to the true costs; audits pass a
``bids`` vector to replay a deviation.  All prices and budgets are exact
rationals, so budget feasibility and IR hold without tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Optional, Sequence

import numpy as np

from .instances import AugmentedInstance, ArrivalOrder, Instance, sample_arrival
from .offline import greedy_knapsack_monotone
from .valuations import _frac

# Seeded faults used to test that the audits have teeth.
FIRST_PRICE = "first-price"
NO_BUDGET_CHECK = "no-budget-check"
PRICE_SAMPLE = "price-sample"
MUTATIONS = (FIRST_PRICE, NO_BUDGET_CHECK, PRICE_SAMPLE)


class MechanismError(ValueError):
    pass


@dataclass(frozen=True)
class MechParams:
    """Knobs of every mechanism; each run reads only the fields it needs.

    ``z`` is the single-agent divisor of the prediction branch.  The
    sampling mechanisms never read it (their ``z`` only enters the bounds).
    """

    tau: Fraction = Fraction(1, 2)
    p_pred: Fraction = Fraction("0.46")
    a: Fraction = Fraction("0.685")
    z: Fraction = Fraction("1.85")
    q_dynkin: Fraction = Fraction("0.66")
    beta: Fraction = Fraction("0.29")
    delta: Fraction = Fraction("0.174")
    k: Fraction = Fraction(5, 2)

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            object.__setattr__(self, name, _frac(getattr(self, name)))
        for name in ("tau", "p_pred", "q_dynkin"):
            if not 0 <= getattr(self, name) <= 1:
                raise MechanismError(f"{name} must be a probability")
        if self.a < 0 or self.beta < 0:
            raise MechanismError("a and beta must be non-negative")
        if self.z <= 1:
            raise MechanismError("z must exceed 1")
        if self.k <= 1:
            raise MechanismError("k must exceed 1")
        if not 0 < self.delta < Fraction(1, 2):
            raise MechanismError("delta must lie in (0, 1/2)")

    def with_(self, **kw) -> "MechParams":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return {name: str(getattr(self, name)) for name in self.__dataclass_fields__}


@dataclass(frozen=True)
class CoinTranscript:
    """Uniform draws in [0, 1) that fix every random choice of a run.

    ``mix`` picks the tau branch, ``branch`` the p/q branch, ``split`` the
    binomial sample size (inverse CDF) and ``pick`` the returned set of the
    two-solution mechanisms.
    """

    mix: float
    branch: float
    split: float
    pick: float
    seed: Optional[object] = None

    @classmethod
    def from_seed(cls, seed) -> "CoinTranscript":
        u = np.random.default_rng(seed).random(4)
        s = list(seed) if isinstance(seed, (list, tuple)) else seed
        return cls(float(u[0]), float(u[1]), float(u[2]), float(u[3]), s)

    def to_dict(self) -> dict:
        return {"mix": self.mix, "branch": self.branch, "split": self.split,
                "pick": self.pick, "seed": self.seed}


def trial_seed(root: int, index: int) -> list:
    """Independent per-trial seed derived from a root seed."""
    return [int(root), int(index)]


def trial_draws(root: int, index: int, n: int):
    """Arrival order and transcript for one Monte Carlo trial."""
    seed = trial_seed(root, index)
    return sample_arrival(n, seed + [0]), CoinTranscript.from_seed(seed + [1])


@dataclass
class MechanismOutcome:
    winners: frozenset
    payments: dict
    value: Fraction
    transcript: CoinTranscript
    branch_label: str
    residual_budget: Fraction
    offers: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def total_payment(self) -> Fraction:
        return sum(self.payments.values(), Fraction(0))

    def utility(self, agent: int, true_cost: Fraction) -> Fraction:
        if agent in self.winners:
            return self.payments[agent] - true_cost
        return Fraction(0)

    def summary(self) -> dict:
        return {
            "winners": sorted(self.winners),
            "payments": {str(i): str(p) for i, p in sorted(self.payments.items())},
            "value": str(self.value),
            "branch": self.branch_label,
            "residual_budget": str(self.residual_budget),
        }


# -- shared pieces ----------------------------------------------------------

@lru_cache(maxsize=None)
def _binomial_cdf(n: int, p: Fraction) -> tuple:
    acc, out = Fraction(0), []
    for j in range(n + 1):
        acc += comb(n, j) * p ** j * (1 - p) ** (n - j)
        out.append(acc)
    return tuple(out)


def binomial_inverse(u: float, n: int, p: Fraction) -> int:
    """Smallest j with P[X <= j] > u for X ~ Binomial(n, p); exact in u."""
    cdf = _binomial_cdf(n, _frac(p))
    target = Fraction(u)
    for j, c in enumerate(cdf):
        if c > target:
            return j
    return n


def dynkin_sample_size(n: int) -> int:
    return math.floor(n / math.e)


def _bids(inst, bids: Optional[Sequence]) -> tuple:
    if bids is None:
        return inst.costs
    b = tuple(_frac(x) for x in bids)
    if len(b) != inst.n:
        raise MechanismError("one bid per agent required")
    for x in b:
        if not 0 <= x <= inst.budget:
            raise MechanismError(f"declared cost {x} outside [0, B]")
    return b


def _base(inst) -> Instance:
    return inst.base if isinstance(inst, AugmentedInstance) else inst


def _omega(inst) -> Fraction:
    if not isinstance(inst, AugmentedInstance):
        raise MechanismError("this mechanism needs an augmented instance with a prediction")
    return inst.omega


def _outcome(inst, winners, payments, transcript, label, residual, offers=None, **details):
    winners = frozenset(winners)
    return MechanismOutcome(
        winners=winners,
        payments={i: payments[i] for i in sorted(winners)},
        value=inst.oracle.eval(winners),
        transcript=transcript,
        branch_label=label,
        residual_budget=residual,
        offers=dict(offers or {}),
        details=details,
    )


def _empty(inst, transcript, label, **details):
    return _outcome(inst, (), {}, transcript, label, inst.budget, **details)


def hire_first_above(inst, arrivals, threshold, transcript, label, **details):
    """Hire the first arriving agent with v(j) >= threshold and pay B."""
    v = inst.oracle.eval
    b = inst.budget
    for j in arrivals:
        if v({j}) >= threshold:
            return _outcome(inst, (j,), {j: b}, transcript, label, Fraction(0), {j: b}, **details)
    return _empty(inst, transcript, label, **details)


def posted_price(inst, bids, arrivals, threshold: Fraction, mutation=None):
    """Single-solution posted-price loop with prices (B/t)·v(i|S).

    Returns (winners in acceptance order, payments, residual budget, offers).
    """
    budget = inst.budget
    scale = budget / threshold
    v = inst.oracle.eval
    chosen, payments, offers = [], {}, {}
    current = Fraction(0)
    residual = budget
    for i in arrivals:
        gain = v(chosen + [i]) - current
        price = scale * gain
        offers[i] = price
        fits = residual - price >= 0 or mutation == NO_BUDGET_CHECK
        if bids[i] <= price and fits:
            paid = bids[i] if mutation == FIRST_PRICE else price
            chosen.append(i)
            payments[i] = paid
            residual -= paid
            current += gain
    return chosen, payments, residual, offers


# -- mechanisms --------------------------------------------------------------

def run_dynkin(inst, order: ArrivalOrder, transcript: CoinTranscript,
               label: str = "dynkin") -> MechanismOutcome:
    """Secretary rule on singleton values: observe floor(n/e), pay B to the first at least as good."""
    inst = _base(inst)
    perm = list(order)
    r = dynkin_sample_size(len(perm))
    v = inst.oracle.eval
    threshold = Fraction(0)
    best = None
    for j in perm[:r]:
        if best is None or v({j}) > v({best}):
            best = j
    if best is not None:
        threshold = v({best})
    return hire_first_above(inst, perm[r:], threshold, transcript, label,
                            sample_size=r, sample_best=best)


def run_mech_pred(aug: AugmentedInstance, order, transcript, params: MechParams,
                  bids=None, mutation=None) -> MechanismOutcome:
    """Prediction-only mechanism: single-agent hire w.p. p, else posted prices at t = a·ω."""
    omega = _omega(aug)
    inst = aug.base
    b = _bids(inst, bids)
    perm = list(order)
    if transcript.branch < params.p_pred:
        return hire_first_above(inst, perm, params.a * omega / params.z, transcript, "pred.single")
    t = params.a * omega
    if t <= 0:
        raise MechanismError("posted-price threshold a·ω must be positive")
    chosen, pay, residual, offers = posted_price(inst, b, perm, t, mutation)
    return _outcome(inst, chosen, pay, transcript, "pred.posted", residual, offers, threshold=t)


def _sample_phase(inst, bids, perm, transcript, rate: Fraction, solver):
    xi = binomial_inverse(transcript.split, len(perm), rate)
    sample = perm[:xi]
    t1 = solver(inst, sample, costs=bids)
    return xi, sample, t1


def _run_sampling(inst, order, transcript, params, bids, mutation, *, rate, omega_term,
                  solver, label):
    inst_b = _base(inst)
    b = _bids(inst_b, bids)
    perm = list(order)
    if transcript.branch < params.q_dynkin:
        return run_dynkin(inst_b, order, transcript)
    xi, sample, t1 = _sample_phase(inst_b, b, perm, transcript, rate, solver)
    t = omega_term + params.beta * t1.value
    details = dict(xi1=xi, sample=tuple(sample), sample_solution=t1.agents,
                   sample_value=t1.value, threshold=t)
    if t <= 0:
        return _empty(inst_b, transcript, f"{label}.degenerate", **details)
    priced = perm if mutation == PRICE_SAMPLE else perm[xi:]
    chosen, pay, residual, offers = posted_price(inst_b, b, priced, t, mutation)
    return _outcome(inst_b, chosen, pay, transcript, f"{label}.posted", residual, offers, **details)


def run_mech_sample(inst, order, transcript, params: MechParams,
                    bids=None, mutation=None) -> MechanismOutcome:
    """Prediction-free mechanism: Dynkin w.p. q, else sample half and price the rest at t = β·v(T1)."""
    if not _base(inst).oracle.monotone:
        raise MechanismError("run_mech_sample needs a monotone oracle")
    return _run_sampling(inst, order, transcript, params, bids, mutation,
                         rate=Fraction(1, 2), omega_term=Fraction(0),
                         solver=greedy_knapsack_monotone, label="sample")


def run_mech_calibrated(aug: AugmentedInstance, order, transcript, params: MechParams,
                        bids=None, mutation=None) -> MechanismOutcome:
    """Sampling-calibrated mechanism: sample rate 1/k, threshold a·ω + β·v(T1)."""
    omega = _omega(aug)
    if not aug.oracle.monotone:
        raise MechanismError("run_mech_calibrated needs a monotone oracle")
    return _run_sampling(aug, order, transcript, params, bids, mutation,
                         rate=1 / params.k, omega_term=params.a * omega,
                         solver=greedy_knapsack_monotone, label="calibrated")


def run_mech_convex(aug: AugmentedInstance, order, transcript, params: MechParams,
                    bids=None, mutation=None) -> MechanismOutcome:
    """Run the prediction mechanism w.p. tau, else the prediction-free one."""
    if transcript.mix < params.tau:
        return run_mech_pred(aug, order, transcript, params, bids, mutation)
    return run_mech_sample(aug, order, transcript, params, bids, mutation)
