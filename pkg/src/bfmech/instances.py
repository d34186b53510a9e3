"""Procurement instances, predictions, arrival orders and generators.

Instance files are JSON documents::

    {"n": 3, "budget": "1", "costs": ["1/4", "1/2", "1"],
     "valuation": {"family": "additive", "kind": "additive",
                   "payload": {"weights": ["1", "2", "3"]}},
     "prediction": {"omega": "5/2", "epsilon": "1/6"}}

``prediction`` is optional.  All numbers are written as ``"p/q"`` strings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .valuations import (
    Additive,
    Coverage,
    GraphCut,
    ValuationOracle,
    _frac,
    oracle_from_dict,
)


class InstanceError(ValueError):
    pass


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Instance:
    costs: tuple
    budget: Fraction
    oracle: ValuationOracle

    def __init__(self, costs: Sequence, budget, oracle: ValuationOracle):
        c = tuple(_frac(x) for x in costs)
        b = _frac(budget)
        if b <= 0:
            raise InstanceError("budget must be positive")
        if oracle.ground_size != len(c):
            raise InstanceError(
                f"oracle has {oracle.ground_size} agents but {len(c)} costs were given")
        for i, ci in enumerate(c):
            if not 0 < ci <= b:
                raise InstanceError(f"cost of agent {i} must lie in (0, B], got {ci}")
        object.__setattr__(self, "costs", c)
        object.__setattr__(self, "budget", b)
        object.__setattr__(self, "oracle", oracle)

    @property
    def n(self) -> int:
        return len(self.costs)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "budget": str(self.budget),
            "costs": [str(c) for c in self.costs],
            "valuation": self.oracle.to_dict(),
        }


@dataclass(frozen=True)
class AugmentedInstance:
    """An instance plus a prediction ``omega`` of the optimal value.

    ``epsilon`` is only known when the prediction was derived from the true
    optimum via :func:`attach_prediction`.
    """

    base: Instance
    omega: Fraction
    epsilon: Optional[Fraction] = None

    def __post_init__(self):
        object.__setattr__(self, "omega", _frac(self.omega))
        if self.omega <= 0:
            raise InstanceError("prediction omega must be positive")
        if self.epsilon is not None:
            object.__setattr__(self, "epsilon", _frac(self.epsilon))

    # convenience pass-throughs
    @property
    def n(self):
        return self.base.n

    @property
    def costs(self):
        return self.base.costs

    @property
    def budget(self):
        return self.base.budget

    @property
    def oracle(self):
        return self.base.oracle

    def to_dict(self) -> dict:
        d = self.base.to_dict()
        d["prediction"] = {"omega": str(self.omega)}
        if self.epsilon is not None:
            d["prediction"]["epsilon"] = str(self.epsilon)
        return d


@dataclass(frozen=True)
class ArrivalOrder:
    perm: tuple
    seed: Optional[int] = None

    def __post_init__(self):
        perm = tuple(int(x) for x in self.perm)
        if sorted(perm) != list(range(len(perm))):
            raise InstanceError(f"{perm} is not a permutation of 0..{len(perm) - 1}")
        object.__setattr__(self, "perm", perm)

    def __iter__(self):
        return iter(self.perm)

    def __len__(self):
        return len(self.perm)

    def position(self) -> dict:
        return {agent: slot for slot, agent in enumerate(self.perm)}


def sample_arrival(n: int, seed) -> ArrivalOrder:
    """Uniform random permutation of ``0..n-1``, reproducible from ``seed``."""
    if n < 1:
        raise InstanceError("need at least one agent")
    rng = np.random.default_rng(seed)
    return ArrivalOrder(tuple(int(x) for x in rng.permutation(n)), seed=_seed_repr(seed))


def _seed_repr(seed):
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    if isinstance(seed, (list, tuple)):
        return list(seed)
    return None


def attach_prediction(inst: Instance, epsilon, optimum) -> AugmentedInstance:
    eps = _frac(epsilon)
    opt = _frac(optimum)
    if not 0 <= eps < 1:
        raise InstanceError(f"epsilon must lie in [0, 1), got {eps}")
    if opt <= 0:
        raise InstanceError("optimum must be positive for a positive prediction")
    return AugmentedInstance(inst, (1 - eps) * opt, eps)


# -- serialization -----------------------------------------------------------

def instance_from_dict(d: dict):
    try:
        oracle = oracle_from_dict(d["valuation"])
        inst = Instance(d["costs"], d["budget"], oracle)
        if "n" in d and int(d["n"]) != inst.n:
            raise InstanceError(f"declared n={d['n']} but {inst.n} costs present")
    except KeyError as exc:
        raise InstanceError(f"instance document missing field {exc}") from exc
    pred = d.get("prediction")
    if pred:
        return AugmentedInstance(inst, pred["omega"], pred.get("epsilon"))
    return inst


def render(inst) -> str:
    return json.dumps(inst.to_dict(), indent=2)


def parse(text: str):
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"instance file is not valid JSON: {exc}") from exc
    return instance_from_dict(d)


def load_instance(path) -> Instance | AugmentedInstance:
    return parse(Path(path).read_text())


def save_instance(inst, path) -> None:
    Path(path).write_text(render(inst) + "\n")


# -- generators --------------------------------------------------------------

FAMILIES = ("additive", "coverage", "cut")


@dataclass
class GeneratorConfig:
    family: str = "additive"
    n: int = 6
    budget: Fraction = Fraction(1)
    cost_dist: str = "uniform"          # or "correlated"
    cost_low: Fraction = Fraction(1, 10)
    cost_high: Fraction = Fraction(1)
    universe: int = 12                   # coverage only
    density: float = 0.5                 # coverage membership / cut edge probability
    max_weight: int = 5
    resolution: int = 1000               # uniform costs are multiples of 1/resolution

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown generator fields: {sorted(unknown)}")
        cfg = cls(**d)
        for name in ("budget", "cost_low", "cost_high"):
            setattr(cfg, name, _frac(getattr(cfg, name)))
        return cfg

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise ConfigError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.n < 1:
            raise ConfigError("n must be at least 1")
        if self.budget <= 0:
            raise ConfigError("budget must be positive")
        if self.cost_dist not in ("uniform", "correlated"):
            raise ConfigError(f"unknown cost distribution {self.cost_dist!r}")
        if not 0 <= self.cost_low < self.cost_high:
            raise ConfigError("need 0 <= cost_low < cost_high")
        if self.family == "coverage" and self.universe < 1:
            raise ConfigError("coverage needs a non-empty universe")
        if not 0 < self.density <= 1:
            raise ConfigError("density must lie in (0, 1]")


def _clamp(c: Fraction, budget: Fraction, res: int) -> Fraction:
    floor = budget / res
    return min(max(c, floor), budget)


def generate_instance(cfg: GeneratorConfig | dict, seed) -> Instance:
    """Random instance, a pure function of ``(cfg, seed)``."""
    if isinstance(cfg, dict):
        cfg = GeneratorConfig.from_dict(cfg)
    cfg.validate()
    rng = np.random.default_rng(seed)
    n = cfg.n

    if cfg.family == "additive":
        oracle = Additive([int(w) for w in rng.integers(1, cfg.max_weight + 1, size=n)])
    elif cfg.family == "coverage":
        sets = []
        for _ in range(n):
            member = rng.random(cfg.universe) < cfg.density
            if not member.any():
                member[rng.integers(cfg.universe)] = True
            sets.append([int(e) for e in np.flatnonzero(member)])
        weights = [int(w) for w in rng.integers(1, cfg.max_weight + 1, size=cfg.universe)]
        oracle = Coverage(sets, weights)
    else:
        w = [[0] * n for _ in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < cfg.density:
                    w[i][j] = w[j][i] = int(rng.integers(1, cfg.max_weight + 1))
        oracle = GraphCut(w)

    res = cfg.resolution
    b = cfg.budget
    if cfg.cost_dist == "uniform":
        lo = int(cfg.cost_low * res)
        hi = int(cfg.cost_high * res)
        ticks = rng.integers(lo + 1, hi + 1, size=n)
        costs = [_clamp(Fraction(int(t), res), b, res) for t in ticks]
    else:
        singles = [oracle.eval({i}) for i in range(n)]
        top = max(singles) or Fraction(1)
        costs = []
        for s in singles:
            noise = Fraction(int(rng.integers(res // 2, res + 1)), res)
            costs.append(_clamp(b * s / top * noise, b, res))
    return Instance(costs, b, oracle)
