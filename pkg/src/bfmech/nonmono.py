"""Two-disjoint-solution mechanisms for general (non-monotone) submodular v.

Each accepted agent joins the candidate set where her marginal is larger;
which of the two sets is returned is drawn before any agent is priced.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .instances import AugmentedInstance
from .mechanisms import (
    FIRST_PRICE,
    NO_BUDGET_CHECK,
    PRICE_SAMPLE,
    MechanismError,
    MechanismOutcome,
    MechParams,
    _base,
    _bids,
    _empty,
    _omega,
    _outcome,
    _sample_phase,
    hire_first_above,
    run_dynkin,
)
from .offline import solve_sample_nonmonotone


@dataclass
class TwoSolutionState:
    chosen_j: int
    budget: Fraction
    sets: tuple = field(default_factory=lambda: ([], []))
    residual: list = field(default_factory=list)
    log: list = field(default_factory=list)   # (agent, set index, price)

    def __post_init__(self):
        if not self.residual:
            self.residual = [self.budget, self.budget]

    def charged(self, j: int) -> Fraction:
        return sum((price for _, jj, price in self.log if jj == j), Fraction(0))


def pick_set(transcript) -> int:
    return 1 if transcript.pick < 0.5 else 2


def two_solution_pricing(inst, bids, arrivals, threshold: Fraction, chosen_j: int,
                         mutation=None):
    """Price arrivals against two disjoint sets; ties in the argmax go to set 1."""
    v = inst.oracle.eval
    scale = inst.budget / threshold
    state = TwoSolutionState(chosen_j, inst.budget)
    values = [Fraction(0), Fraction(0)]
    offers = {}
    for i in arrivals:
        gains = [v(state.sets[j] + [i]) - values[j] for j in (0, 1)]
        j = 0 if gains[0] >= gains[1] else 1
        # negative gains give negative prices; never clamp, they must fail the test
        price = scale * gains[j]
        offers[i] = price
        fits = state.residual[j] - price >= 0 or mutation == NO_BUDGET_CHECK
        if bids[i] <= price and fits:
            paid = bids[i] if mutation == FIRST_PRICE else price
            state.sets[j].append(i)
            values[j] += gains[j]
            state.residual[j] -= paid
            state.log.append((i, j + 1, paid))
    return state, offers


def _finish(inst, state: TwoSolutionState, offers, transcript, label, **details):
    idx = state.chosen_j - 1
    winners = state.sets[idx]
    payments = {i: price for i, jj, price in state.log if jj == state.chosen_j}
    return _outcome(inst, winners, payments, transcript, label, state.residual[idx],
                    offers, state=state, **details)


def run_twosol_pred(aug: AugmentedInstance, order, transcript, params: MechParams,
                    bids=None, mutation=None) -> MechanismOutcome:
    omega = _omega(aug)
    inst = aug.base
    b = _bids(inst, bids)
    perm = list(order)
    if transcript.branch < params.p_pred:
        return hire_first_above(inst, perm, params.a * omega / params.z, transcript, "pred.single")
    t = params.a * omega
    if t <= 0:
        raise MechanismError("posted-price threshold a·ω must be positive")
    state, offers = two_solution_pricing(inst, b, perm, t, pick_set(transcript), mutation)
    return _finish(inst, state, offers, transcript, "pred.twosol", threshold=t)


def _run_twosol_sampling(inst, order, transcript, params, bids, mutation, *, rate,
                         omega_term, label):
    inst_b = _base(inst)
    b = _bids(inst_b, bids)
    perm = list(order)
    if transcript.branch < params.q_dynkin:
        return run_dynkin(inst_b, order, transcript)
    xi, sample, t1 = _sample_phase(inst_b, b, perm, transcript, rate, solve_sample_nonmonotone)
    t = omega_term + params.beta * t1.value
    details = dict(xi1=xi, sample=tuple(sample), sample_solution=t1.agents,
                   sample_value=t1.value, threshold=t)
    if t <= 0:
        return _empty(inst_b, transcript, f"{label}.degenerate", **details)
    priced = perm if mutation == PRICE_SAMPLE else perm[xi:]
    state, offers = two_solution_pricing(inst_b, b, priced, t, pick_set(transcript), mutation)
    return _finish(inst_b, state, offers, transcript, f"{label}.twosol", **details)


def run_twosol_sample(inst, order, transcript, params: MechParams,
                      bids=None, mutation=None) -> MechanismOutcome:
    return _run_twosol_sampling(inst, order, transcript, params, bids, mutation,
                                rate=Fraction(1, 2), omega_term=Fraction(0), label="sample")


def run_twosol_calibrated(aug: AugmentedInstance, order, transcript, params: MechParams,
                          bids=None, mutation=None) -> MechanismOutcome:
    omega = _omega(aug)
    return _run_twosol_sampling(aug, order, transcript, params, bids, mutation,
                                rate=1 / params.k, omega_term=params.a * omega,
                                label="calibrated")


def run_nonmono_convex(aug: AugmentedInstance, order, transcript, params: MechParams,
                       bids=None, mutation=None) -> MechanismOutcome:
    if transcript.mix < params.tau:
        return run_twosol_pred(aug, order, transcript, params, bids, mutation)
    return run_twosol_sample(aug, order, transcript, params, bids, mutation)
