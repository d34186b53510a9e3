"""Per-realization audits, Monte Carlo ratio estimates and the adversarial-order demo."""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

from . import registry
from .instances import (
    ArrivalOrder,
    AugmentedInstance,
    Instance,
    attach_prediction,
    render,
    sample_arrival,
)
from .mechanisms import CoinTranscript, MechParams, binomial_inverse, trial_draws
from .offline import brute_force_opt
from .valuations import Additive, _frac

MAX_EXHAUSTIVE_N = 8


class AuditError(ValueError):
    pass


def instance_digest(inst) -> str:
    return hashlib.sha256(render(inst).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Violation:
    agent: int
    order: tuple
    transcript: dict
    deviation: Fraction
    truthful_utility: Fraction
    deviant_utility: Fraction

    def to_dict(self) -> dict:
        return {"agent": self.agent, "order": list(self.order), "transcript": self.transcript,
                "deviation": str(self.deviation),
                "truthful_utility": str(self.truthful_utility),
                "deviant_utility": str(self.deviant_utility)}


@dataclass(frozen=True)
class BudgetIRWitness:
    kind: str          # "budget" or "ir"
    order: tuple
    transcript: dict
    bids: tuple
    detail: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "order": list(self.order), "transcript": self.transcript,
                "bids": [str(b) for b in self.bids], "detail": self.detail}


@dataclass
class AuditReport:
    mechanism: str
    instance_digest: str
    trials: int                      # mechanism executions performed
    grid: dict
    violations: list = field(default_factory=list)
    budget_violations: list = field(default_factory=list)
    ir_violations: list = field(default_factory=list)
    orders_checked: int = 0
    transcripts_checked: int = 0

    @property
    def passed(self) -> bool:
        return not (self.violations or self.budget_violations or self.ir_violations)

    def to_dict(self) -> dict:
        return {"mechanism": self.mechanism, "instance_digest": self.instance_digest,
                "trials": self.trials, "grid": self.grid, "passed": self.passed,
                "orders_checked": self.orders_checked,
                "transcripts_checked": self.transcripts_checked,
                "violations": [v.to_dict() for v in self.violations],
                "budget_violations": [w.to_dict() for w in self.budget_violations],
                "ir_violations": [w.to_dict() for w in self.ir_violations]}


@dataclass
class BudgetIRCheck:
    passed: bool
    total_payment: Fraction
    witnesses: list

    def __bool__(self):
        return self.passed


def audit_budget_ir(outcome, inst, bids: Optional[Sequence] = None) -> BudgetIRCheck:
    """Exact check of sum(payments) <= B and payment >= declared cost for winners.

    Also flags payments to non-winners and negative payments, which the
    outcome type forbids.
    """
    base = inst.base if isinstance(inst, AugmentedInstance) else inst
    declared = base.costs if bids is None else tuple(_frac(b) for b in bids)
    total = sum(outcome.payments.values(), Fraction(0))
    witnesses = []
    if total > base.budget:
        witnesses.append(("budget", f"total payment {total} exceeds budget {base.budget}"))
    for i, pay in sorted(outcome.payments.items()):
        if i not in outcome.winners:
            witnesses.append(("budget", f"agent {i} paid {pay} without winning"))
        elif pay < 0:
            witnesses.append(("budget", f"agent {i} has negative payment {pay}"))
    for i in sorted(outcome.winners):
        pay = outcome.payments.get(i, Fraction(0))
        if pay < declared[i]:
            witnesses.append(("ir", f"agent {i} paid {pay} below declared cost {declared[i]}"))
    return BudgetIRCheck(not witnesses, total, witnesses)


# -- truthfulness ---------------------------------------------------------------

COIN_TESTS = {
    "mix": lambda t, p, n: t.mix < p.tau,
    "pred": lambda t, p, n: t.branch < p.p_pred,
    "dynkin": lambda t, p, n: t.branch < p.q_dynkin,
    "half": lambda t, p, n: binomial_inverse(t.split, n, Fraction(1, 2)),
    "rate": lambda t, p, n: binomial_inverse(t.split, n, 1 / p.k),
    "pick": lambda t, p, n: t.pick < 0.5,
}


def transcript_class(t: CoinTranscript, params: MechParams, n: int,
                     coins: Sequence[str] = tuple(COIN_TESTS)) -> tuple:
    """The outcomes of the coin comparisons a mechanism performs.

    Two transcripts in the same class drive the mechanism identically, so
    the audit executes one representative per class.
    """
    return tuple(COIN_TESTS[c](t, params, n) for c in coins)


def audit_transcripts(count: int, seed: int = 0) -> list:
    return [CoinTranscript.from_seed([int(seed), 1, j]) for j in range(count)]


def audit_orders(n: int, orders: Union[str, int, Sequence], seed: int = 0) -> list:
    if orders == "exhaustive":
        if n > MAX_EXHAUSTIVE_N:
            raise AuditError(f"exhaustive orders need n <= {MAX_EXHAUSTIVE_N}")
        return [ArrivalOrder(p) for p in itertools.permutations(range(n))]
    if isinstance(orders, int):
        return [sample_arrival(n, [int(seed), 0, j]) for j in range(orders)]
    return [o if isinstance(o, ArrivalOrder) else ArrivalOrder(tuple(o)) for o in orders]


def deviation_grid(budget: Fraction, points: int) -> list:
    if points < 2:
        raise AuditError("deviation grid needs at least two points")
    return [budget * j / (points - 1) for j in range(points)]


def _deviations(base_grid, budget, step, offer) -> list:
    values = set(base_grid) | {Fraction(0), budget}
    if offer is not None:
        for x in (offer - step, offer, offer + step):
            if 0 <= x <= budget:
                values.add(x)
    return sorted(values)


def audit_truthfulness(mech_id: str, inst, orders="exhaustive", transcripts=64,
                       grid: Union[int, Sequence] = 21, params: Optional[MechParams] = None,
                       seed: int = 0, mutation: Optional[str] = None,
                       max_violations: Optional[int] = None) -> AuditReport:
    """Rerun the mechanism with every unilateral deviation on the grid.

    For each (order, transcript) the truthful run is audited for budget and
    IR, its offered prices extend the grid (offer and offer ± one step), and
    each deviation run is compared against the truthful utility exactly.
    Deviation runs are themselves budget-audited against declared bids.
    """
    params = params or MechParams()
    spec = registry.get(mech_id)
    base = inst.base if isinstance(inst, AugmentedInstance) else inst
    if spec.needs_prediction and not isinstance(inst, AugmentedInstance):
        raise AuditError(f"{mech_id} needs an augmented instance")
    n, budget, costs = base.n, base.budget, base.costs
    if isinstance(grid, int):
        base_grid, grid_spec = deviation_grid(budget, grid), {"points": grid}
    else:
        base_grid = sorted({_frac(x) for x in grid})
        grid_spec = {"values": [str(x) for x in base_grid]}
    grid_spec["augmented"] = "offer and offer +/- one step, plus {0, B}"
    step = budget / (len(base_grid) - 1) if len(base_grid) > 1 else budget
    order_list = audit_orders(n, orders, seed)
    if isinstance(transcripts, int):
        transcript_list = audit_transcripts(transcripts, seed)
    else:
        transcript_list = list(transcripts)
    reps = {}
    for t in transcript_list:
        reps.setdefault(transcript_class(t, params, n, spec.coins), t)
    report = AuditReport(mech_id, instance_digest(inst), 0, grid_spec,
                         orders_checked=len(order_list),
                         transcripts_checked=len(transcript_list))

    def record(kind, order, t, bids, detail):
        w = BudgetIRWitness(kind, tuple(order), t.to_dict(), tuple(bids), detail)
        (report.budget_violations if kind == "budget" else report.ir_violations).append(w)

    def run(order, t, bids=None):
        report.trials += 1
        return spec.runner(inst, order, t, params, bids=bids, mutation=mutation)

    for order in order_list:
        for t in reps.values():
            truthful = run(order, t)
            for kind, detail in audit_budget_ir(truthful, base).witnesses:
                record(kind, order, t, costs, detail)
            for i in range(n):
                u_true = truthful.utility(i, costs[i])
                for b in _deviations(base_grid, budget, step, truthful.offers.get(i)):
                    if b == costs[i]:
                        continue
                    bids = costs[:i] + (b,) + costs[i + 1:]
                    dev = run(order, t, bids)
                    for kind, detail in audit_budget_ir(dev, base, bids).witnesses:
                        record(kind, order, t, bids, detail)
                    u_dev = dev.utility(i, costs[i])
                    if u_dev > u_true:
                        report.violations.append(Violation(
                            i, tuple(order), t.to_dict(), b, u_true, u_dev))
                        if max_violations and len(report.violations) >= max_violations:
                            return report
    return report


def replay_violation(mech_id: str, inst, v: Violation, params: Optional[MechParams] = None,
                     mutation: Optional[str] = None) -> tuple:
    """Recompute (truthful, deviant) utilities of a recorded violation."""
    params = params or MechParams()
    base = inst.base if isinstance(inst, AugmentedInstance) else inst
    d = v.transcript
    t = CoinTranscript(d["mix"], d["branch"], d["split"], d["pick"], d["seed"])
    order = ArrivalOrder(v.order)
    truthful = registry.run(mech_id, inst, order, t, params, mutation=mutation)
    bids = list(base.costs)
    bids[v.agent] = v.deviation
    dev = registry.run(mech_id, inst, order, t, params, bids=bids, mutation=mutation)
    c = base.costs[v.agent]
    return truthful.utility(v.agent, c), dev.utility(v.agent, c)


# -- Monte Carlo ratio ----------------------------------------------------------

@dataclass
class RatioEstimate:
    mechanism: str
    mean_ratio: float
    standard_error: float
    trials: int
    optimum: Fraction
    per_branch: dict                 # label -> {"trials", "mean_ratio"}
    seed: int
    rows: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {"mechanism": self.mechanism, "mean_ratio": self.mean_ratio,
                "standard_error": self.standard_error, "trials": self.trials,
                "optimum": str(self.optimum), "per_branch": self.per_branch, "seed": self.seed}


def _trial(args):
    mech_id, inst, params, seed, index, optimum = args
    order, t = trial_draws(seed, index, inst.n)
    out = registry.run(mech_id, inst, order, t, params)
    ok = audit_budget_ir(out, inst).passed
    return {"trial": index, "seed": [seed, index], "order": list(order.perm),
            "branch": out.branch_label, "winners": sorted(out.winners),
            "value": out.value, "ratio": out.value / optimum,
            "total_payment": out.total_payment, "budget_ir_ok": ok}


def run_trials(mech_id: str, inst, trials: int, seed: int, params: Optional[MechParams] = None,
               optimum: Optional[Fraction] = None, workers: int = 1) -> list:
    """Per-trial rows ordered by trial index regardless of worker scheduling."""
    params = params or MechParams()
    base = inst.base if isinstance(inst, AugmentedInstance) else inst
    if optimum is None:
        optimum = brute_force_opt(base).value
    if optimum <= 0:
        raise AuditError("optimum value is zero; the ratio is undefined")
    jobs = [(mech_id, inst, params, int(seed), j, optimum) for j in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_trial, jobs, chunksize=max(1, trials // (8 * workers))))
    return [_trial(j) for j in jobs]


def estimate_ratio(mech_id: str, aug, trials: int, seed: int,
                   params: Optional[MechParams] = None, workers: int = 1) -> RatioEstimate:
    """Mean of v(S)/v(S*) over independent (order, transcript) draws."""
    if trials < 1:
        raise AuditError("need at least one trial")
    base = aug.base if isinstance(aug, AugmentedInstance) else aug
    optimum = brute_force_opt(base).value
    rows = run_trials(mech_id, aug, trials, seed, params, optimum, workers)
    ratios = [float(r["ratio"]) for r in rows]
    mean = math.fsum(ratios) / trials
    if trials > 1:
        var = math.fsum((x - mean) ** 2 for x in ratios) / (trials - 1)
        se = math.sqrt(var / trials)
    else:
        se = 0.0
    branches = {}
    for r in rows:
        branches.setdefault(r["branch"], []).append(float(r["ratio"]))
    per_branch = {k: {"trials": len(v), "mean_ratio": math.fsum(v) / len(v)}
                  for k, v in sorted(branches.items())}
    return RatioEstimate(mech_id, mean, se, trials, optimum, per_branch, int(seed), rows)


# -- adversarial arrival ----------------------------------------------------------

@dataclass
class DemoReport:
    epsilon_small: Fraction
    n: int
    optimum: Fraction
    adversarial_order: tuple
    adversarial_max_ratio: Fraction
    adversarial_mean_ratio: float
    random_mean_ratio: float
    random_standard_error: float
    transcripts: int

    @property
    def separated(self) -> bool:
        return self.adversarial_max_ratio <= self.epsilon_small

    def to_dict(self) -> dict:
        return {"epsilon_small": str(self.epsilon_small), "n": self.n,
                "optimum": str(self.optimum),
                "adversarial_order": list(self.adversarial_order),
                "adversarial_max_ratio": str(self.adversarial_max_ratio),
                "adversarial_mean_ratio": self.adversarial_mean_ratio,
                "random_mean_ratio": self.random_mean_ratio,
                "random_standard_error": self.random_standard_error,
                "transcripts": self.transcripts, "separated": self.separated}


def adversarial_instance(n: int, epsilon_small, budget=1) -> Instance:
    """All costs B, agent 0 worth 1 and every other agent worth epsilon_small."""
    eps = _frac(epsilon_small)
    if not 0 < eps < 1:
        raise AuditError("epsilon_small must lie in (0, 1)")
    b = _frac(budget)
    return Instance((b,) * n, b, Additive([1] + [eps] * (n - 1)))


def adversarial_demo(epsilon_small="0.01", n: int = 10, transcripts: int = 2000,
                     seed: int = 0, params: Optional[MechParams] = None) -> DemoReport:
    """Sampling mechanism with the valuable agent placed first, so she is always observed.

    Under the adversarial order every transcript is replayed; under uniform
    random arrival the same number of independent trials is drawn.
    """
    params = params or MechParams(q_dynkin=Fraction("0.66"), beta=Fraction("0.29"),
                                  delta=Fraction("0.174"), z=Fraction("2.1"))
    inst = adversarial_instance(n, epsilon_small)
    optimum = brute_force_opt(inst).value
    order = ArrivalOrder(tuple(range(n)))
    ratios = []
    for t in audit_transcripts(transcripts, seed):
        out = registry.run("mech3", inst, order, t, params)
        ratios.append(out.value / optimum)
    rnd = estimate_ratio("mech3", inst, transcripts, seed, params)
    return DemoReport(_frac(epsilon_small), n, optimum, order.perm, max(ratios),
                      float(sum(ratios, Fraction(0)) / len(ratios)),
                      rnd.mean_ratio, rnd.standard_error, transcripts)


def perfect_prediction(inst: Instance, epsilon=0) -> AugmentedInstance:
    return attach_prediction(inst, epsilon, brute_force_opt(inst).value)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=str)
