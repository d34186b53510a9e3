"""Closed-form approximation guarantees and a grid tuner for their parameters.

Every evaluation runs at 50 significant digits.  A report keeps the named
terms; ``bound`` is their minimum (or the tau-mixture of two minima), and a
term whose raw value is negative is clamped to zero and flagged, since a
negative guarantee carries no information.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import mpmath

DPS = 50
ROBUST_EPSILON = "0.999999999"  # stand-in for an arbitrarily bad prediction

mpmath.mp.dps = DPS


class BoundError(ValueError):
    pass


def mpf(x) -> mpmath.mpf:
    if isinstance(x, mpmath.mpf):
        return x
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    # strings keep decimal constants exact at working precision
    return mpmath.mpf(str(x)) if isinstance(x, float) else mpmath.mpf(x)


def _e():
    return mpmath.e


@dataclass
class BoundReport:
    mechanism: str
    params: dict
    epsilon: Optional[mpmath.mpf]
    terms: dict
    bound: mpmath.mpf
    binding_term: str
    tilde_p: Optional[mpmath.mpf] = None
    degenerate: bool = False              # raw Bernstein expression was negative
    clamped: tuple = ()                   # terms raised from a negative raw value
    components: dict = field(default_factory=dict)

    @property
    def reciprocal(self):
        return mpmath.inf if self.bound == 0 else 1 / self.bound

    def row(self) -> dict:
        out = {"mechanism": self.mechanism,
               "epsilon": "" if self.epsilon is None else mpmath.nstr(self.epsilon, 12)}
        for k, v in self.params.items():
            out[f"param_{k}"] = str(v)
        for k, v in self.terms.items():
            out[f"term_{k}"] = mpmath.nstr(v, 15)
        out["tilde_p"] = "" if self.tilde_p is None else mpmath.nstr(self.tilde_p, 15)
        out["bound"] = mpmath.nstr(self.bound, 15)
        out["reciprocal"] = mpmath.nstr(self.reciprocal, 15)
        out["binding_term"] = self.binding_term
        out["degenerate"] = self.degenerate
        return out

    def to_dict(self) -> dict:
        d = self.row()
        d["terms"] = {k: mpmath.nstr(v, 20) for k, v in self.terms.items()}
        d["clamped"] = list(self.clamped)
        if self.components:
            d["components"] = {k: c.to_dict() for k, c in self.components.items()}
        return d


def _report(mechanism, params, epsilon, raw_terms: Mapping, tilde_p=None, degenerate=False):
    terms, clamped = {}, []
    for name, val in raw_terms.items():
        if val < 0:
            clamped.append(name)
            val = mpf(0)
        terms[name] = val
    binding = min(terms, key=lambda k: terms[k])
    return BoundReport(mechanism, dict(params), epsilon, terms, terms[binding], binding,
                       tilde_p, degenerate, tuple(clamped))


def _check_prob(name, x):
    if not 0 <= x <= 1:
        raise BoundError(f"{name} must lie in [0, 1], got {x}")


def _check_eps(eps):
    if not 0 <= eps < 1:
        raise BoundError(f"epsilon must lie in [0, 1), got {eps}")


def _check_common(z=None, delta=None, beta=None, a=None):
    if z is not None and z <= 1:
        raise BoundError("z must exceed 1")
    if delta is not None and not 0 < delta < mpf("0.5"):
        raise BoundError("delta must lie in (0, 1/2)")
    if beta is not None and beta < 0:
        raise BoundError("beta must be non-negative")
    if a is not None and a < 0:
        raise BoundError("a must be non-negative")


def bernstein_tail(delta, variance, range_bound):
    """Two-sided Bernstein bound 2·exp(-(δ²/2)/(V + C·δ/3))."""
    delta, variance, range_bound = mpf(delta), mpf(variance), mpf(range_bound)
    if delta <= 0 or variance < 0 or range_bound <= 0:
        raise BoundError("need delta > 0, variance >= 0, range_bound > 0")
    denom = variance + range_bound * delta / 3
    if denom == 0:
        raise BoundError("Bernstein denominator vanishes")
    return 2 * mpmath.exp(-(delta ** 2 / 2) / denom)


def success_probability(delta, scale, spread):
    """1 - 2·exp(-(δ²/2)/(scale·spread)), returned raw together with a clamped copy.

    ``scale`` is the bound on the largest single contribution relative to
    the optimum and ``spread`` collects the variance and range factors.
    """
    denom = scale * spread
    if denom <= 0:
        raise BoundError("degenerate concentration expression (non-positive denominator)")
    raw = 1 - 2 * mpmath.exp(-(delta ** 2 / 2) / denom)
    return raw, max(raw, mpf(0))


# -- monotone ----------------------------------------------------------------

def eval_bound_mono_pred(p, a, z, epsilon=0) -> BoundReport:
    p, a, z, eps = mpf(p), mpf(a), mpf(z), mpf(epsilon)
    _check_prob("p", p)
    _check_common(z=z, a=a)
    _check_eps(eps)
    ae = a * (1 - eps)
    return _report("mono_pred", {"p": p, "a": a, "z": z}, eps, {
        "single": ae * p / z,
        "exhaustion": (1 - p) * ae * (z - 1) / z,
        "rejection": (1 - p) * (1 - ae),
    })


def eval_bound_mono_sample(q, z, beta, delta) -> BoundReport:
    q, z, beta, delta = mpf(q), mpf(z), mpf(beta), mpf(delta)
    _check_prob("q", q)
    _check_common(z=z, delta=delta, beta=beta)
    if beta == 0:
        raise BoundError("beta = 0 makes the concentration expression degenerate")
    e = _e()
    heavy = beta / z * (e - 1) / e * (mpf("0.5") - delta)
    raw, pt = success_probability(delta, heavy, mpf("0.25") + delta / 3)
    return _report("mono_sample", {"q": q, "z": z, "beta": beta, "delta": delta}, None, {
        "single": q / e * heavy,
        "rejection": (1 - q) * pt * ((mpf("0.5") - delta) - beta),
        "exhaustion": (1 - q) * pt * ((z - 1) / z * beta * (e - 1) / e * (mpf("0.5") - delta)),
    }, tilde_p=pt, degenerate=raw < 0)


def _mixture(name, tau, f1: BoundReport, f2: BoundReport) -> BoundReport:
    tau = mpf(tau)
    _check_prob("tau", tau)
    terms = {"f1": f1.bound, "f2": f2.bound}
    bound = tau * f1.bound + (1 - tau) * f2.bound
    params = {"tau": tau}
    params.update({f"pred_{k}": v for k, v in f1.params.items()})
    params.update({f"sample_{k}": v for k, v in f2.params.items()})
    if tau == 1:
        binding = "f1"
    elif tau == 0:
        binding = "f2"
    else:
        binding = "f1" if f1.bound <= f2.bound else "f2"
    return BoundReport(name, params, f1.epsilon, terms, bound, binding, f2.tilde_p,
                       f2.degenerate, (), {"f1": f1, "f2": f2})


def eval_bound_mech1(tau, pred: Mapping, sample: Mapping, epsilon=0) -> BoundReport:
    """tau·f1 + (1 - tau)·f2 for the monotone mixture."""
    f1 = eval_bound_mono_pred(pred["p"], pred["a"], pred["z"], epsilon)
    f2 = eval_bound_mono_sample(sample["q"], sample["z"], sample["beta"], sample["delta"])
    return _mixture("mech1", tau, f1, f2)


def eval_bound_mech4(q, a, z, beta, delta, k, epsilon=0) -> BoundReport:
    q, a, z, beta, delta, k, eps = map(mpf, (q, a, z, beta, delta, k, epsilon))
    _check_prob("q", q)
    _check_common(z=z, delta=delta, beta=beta, a=a)
    _check_eps(eps)
    if k <= 1:
        raise BoundError("k must exceed 1")
    if 1 / k - delta <= 0:
        raise BoundError("1/k - delta must be positive for a non-vacuous bound")
    e = _e()
    level = a * (1 - eps) + beta * (e - 1) / e * (1 / k - delta)
    raw, pt = success_probability(delta, level / z, (k - 1) / k ** 2 + delta / 3)
    return _report("mech4", {"q": q, "a": a, "z": z, "beta": beta, "delta": delta, "k": k},
                   eps, {
                       "single": q / (e * z) * level,
                       "rejection": (1 - q) * pt * ((k - 1) / k - delta - (a * (1 - eps) + beta)),
                       "exhaustion": (1 - q) * pt * ((z - 1) / z * level),
                   }, tilde_p=pt, degenerate=raw < 0)


# -- non-monotone ------------------------------------------------------------

def eval_bound_nonmono_pred(p, a, z, epsilon=0) -> BoundReport:
    p, a, z, eps = mpf(p), mpf(a), mpf(z), mpf(epsilon)
    _check_prob("p", p)
    _check_common(z=z, a=a)
    _check_eps(eps)
    ae = a * (1 - eps)
    return _report("nonmono_pred", {"p": p, "a": a, "z": z}, eps, {
        "single": ae * p / z,
        "rejection": (1 - p) * (mpf("0.25") - ae / 2),
        "exhaustion": (1 - p) * ae * (z - 1) / (2 * z),
    })


def eval_bound_nonmono_sample(q, z, beta, delta) -> BoundReport:
    q, z, beta, delta = mpf(q), mpf(z), mpf(beta), mpf(delta)
    _check_prob("q", q)
    _check_common(z=z, delta=delta, beta=beta)
    if beta == 0:
        raise BoundError("beta = 0 makes the concentration expression degenerate")
    e = _e()
    heavy = beta / (z * e) * (mpf("0.5") - delta)
    raw, pt = success_probability(delta, heavy, mpf("0.25") + delta / 3)
    return _report("nonmono_sample", {"q": q, "z": z, "beta": beta, "delta": delta}, None, {
        "single": q / e * heavy,
        "rejection": (1 - q) * pt * (mpf(1) / 8 - delta / 4 - beta / 2),
        "exhaustion": (1 - q) * pt * ((z - 1) / (2 * z) * beta / e * (mpf("0.5") - delta)),
    }, tilde_p=pt, degenerate=raw < 0)


def eval_bound_mech5(tau, pred: Mapping, sample: Mapping, epsilon=0) -> BoundReport:
    f1 = eval_bound_nonmono_pred(pred["p"], pred["a"], pred["z"], epsilon)
    f2 = eval_bound_nonmono_sample(sample["q"], sample["z"], sample["beta"], sample["delta"])
    return _mixture("mech5", tau, f1, f2)


def eval_bound_mech8(q, a, z, beta, delta, k, epsilon=0) -> BoundReport:
    q, a, z, beta, delta, k, eps = map(mpf, (q, a, z, beta, delta, k, epsilon))
    _check_prob("q", q)
    _check_common(z=z, delta=delta, beta=beta, a=a)
    _check_eps(eps)
    if k <= 1:
        raise BoundError("k must exceed 1")
    if 1 / k - delta <= 0:
        raise BoundError("1/k - delta must be positive for a non-vacuous bound")
    e = _e()
    level = a * (1 - eps) + beta / e * (1 / k - delta)
    raw, pt = success_probability(delta, level / z, (k - 1) / k ** 2 + delta / 3)
    return _report("mech8", {"q": q, "a": a, "z": z, "beta": beta, "delta": delta, "k": k},
                   eps, {
                       "single": q / (e * z) * level,
                       "rejection": (1 - q) * pt * (((k - 1) / k - delta) / 4
                                                    - (a * (1 - eps) + beta) / 2),
                       "exhaustion": (1 - q) * pt * ((z - 1) / (2 * z) * level),
                   }, tilde_p=pt, degenerate=raw < 0)


def eval_bound_nonmono(variant: str, params: Mapping, epsilon=0) -> BoundReport:
    """Dispatch over the non-monotone guarantees: pred, sample, convex, calibrated."""
    if variant == "pred":
        return eval_bound_nonmono_pred(params["p"], params["a"], params["z"], epsilon)
    if variant == "sample":
        return eval_bound_nonmono_sample(params["q"], params["z"], params["beta"], params["delta"])
    if variant == "convex":
        return eval_bound_mech5(params["tau"], params["pred"], params["sample"], epsilon)
    if variant == "calibrated":
        return eval_bound_mech8(params["q"], params["a"], params["z"], params["beta"],
                                params["delta"], params["k"], epsilon)
    raise BoundError(f"unknown non-monotone variant {variant!r}")


# -- named bounds, presets, tuner --------------------------------------------

def _flat(fn, keys):
    def call(params, epsilon=0):
        args = [params[k] for k in keys]
        return fn(*args, epsilon) if "epsilon" in fn.__code__.co_varnames else fn(*args)
    call.keys = keys
    return call


BOUNDS = {
    "mono_pred": _flat(eval_bound_mono_pred, ("p", "a", "z")),
    "mono_sample": _flat(eval_bound_mono_sample, ("q", "z", "beta", "delta")),
    "mech4": _flat(eval_bound_mech4, ("q", "a", "z", "beta", "delta", "k")),
    "nonmono_pred": _flat(eval_bound_nonmono_pred, ("p", "a", "z")),
    "nonmono_sample": _flat(eval_bound_nonmono_sample, ("q", "z", "beta", "delta")),
    "mech8": _flat(eval_bound_mech8, ("q", "a", "z", "beta", "delta", "k")),
}

# Parameter tuples exactly as printed in the corollaries.
PRESETS = {
    "cor3.3": {"pred": {"p": "0.46", "a": "0.685", "z": "1.85"},
               "sample": {"q": "0.73", "z": "2", "beta": "0.245", "delta": "0.1265"}},
    "cor3.4": {"pred": {"p": "0.46", "a": "0.685", "z": "1.85"},
               "sample": {"q": "0.66", "z": "2.1", "beta": "0.29", "delta": "0.174"}},
    "cor4.3": {"calibrated": {"q": "0.68", "a": "0.06", "z": "2.15", "beta": "0.27",
                              "delta": "0.22", "k": "2.5"}},
    "cor5.2": {"pred": {"p": "0.33", "a": "0.335", "z": "2"},
               "sample": {"q": "0.66", "z": "2", "beta": "0.1664", "delta": "0.123"}},
    "cor5.3": {"pred": {"p": "0.33", "a": "0.335", "z": "2"},
               "sample": {"q": "0.63", "z": "2.395", "beta": "0.171", "delta": "0.13"}},
    "cor5.6": {"calibrated": {"q": "0.61", "a": "0.035", "z": "2.47", "beta": "0.155",
                              "delta": "0.164", "k": "2.5"}},
}
MONOTONE_PRESETS = ("cor3.3", "cor3.4", "cor4.3")


def evaluate_preset(name: str, epsilons: Sequence = (0,), tau=None) -> list:
    """All reports a preset defines, one per epsilon (sample-only terms once)."""
    try:
        preset = PRESETS[name]
    except KeyError:
        raise BoundError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    mono = name in MONOTONE_PRESETS
    reports = []
    if "calibrated" in preset:
        fn = BOUNDS["mech4" if mono else "mech8"]
        for eps in epsilons:
            reports.append(fn(preset["calibrated"], eps))
        return reports
    pred_fn = BOUNDS["mono_pred" if mono else "nonmono_pred"]
    sample_fn = BOUNDS["mono_sample" if mono else "nonmono_sample"]
    for eps in epsilons:
        reports.append(pred_fn(preset["pred"], eps))
    reports.append(sample_fn(preset["sample"]))
    if tau is not None:
        mix = eval_bound_mech1 if mono else eval_bound_mech5
        for eps in epsilons:
            reports.append(mix(tau, preset["pred"], preset["sample"], eps))
    return reports


@dataclass
class TuneResult:
    bound_id: str
    grid: dict
    objective: str
    best_params: dict
    best_bound: mpmath.mpf
    evaluations: int
    log: list = field(default_factory=list, repr=False)   # (params, value or None)

    def to_dict(self) -> dict:
        return {"bound": self.bound_id, "objective": self.objective,
                "grid": {k: [str(x) for x in v] for k, v in self.grid.items()},
                "best_params": {k: str(v) for k, v in self.best_params.items()},
                "best_bound": mpmath.nstr(self.best_bound, 15),
                "best_reciprocal": mpmath.nstr(1 / self.best_bound, 15)
                if self.best_bound > 0 else "inf",
                "evaluations": self.evaluations}


def _objective_value(fn, params, objective):
    try:
        if objective == "consistency":
            return fn(params, 0).bound
        if objective == "robustness":
            return fn(params, ROBUST_EPSILON).bound
        return min(fn(params, 0).bound, fn(params, ROBUST_EPSILON).bound)
    except BoundError:
        return None


def tune_params(bound_id: str, grid: Mapping[str, Sequence], objective: str = "consistency",
                fixed: Optional[Mapping] = None, record: bool = False) -> TuneResult:
    """Exhaustive grid search; ties go to the lexicographically smallest tuple.

    ``objective`` is ``consistency`` (epsilon = 0), ``robustness``
    (epsilon -> 1) or ``tradeoff`` (the smaller of the two).
    """
    if bound_id not in BOUNDS:
        raise BoundError(f"unknown bound {bound_id!r}")
    if objective not in ("consistency", "robustness", "tradeoff"):
        raise BoundError(f"unknown objective {objective!r}")
    fn = BOUNDS[bound_id]
    fixed = dict(fixed or {})
    keys = [k for k in fn.keys if k in grid]
    missing = [k for k in fn.keys if k not in grid and k not in fixed]
    if missing:
        raise BoundError(f"grid/fixed values missing for {missing}")
    axes = [sorted(mpf(x) for x in grid[k]) for k in keys]
    if not keys or any(len(ax) == 0 for ax in axes):
        raise BoundError("empty grid")
    best, best_val, count, log = None, None, 0, []
    for combo in itertools.product(*axes):
        params = dict(fixed)
        params.update(zip(keys, combo))
        count += 1
        val = _objective_value(fn, params, objective)
        if record:
            log.append((dict(params), val))
        if val is None:
            continue
        # product() walks tuples in lexicographic order, so strict > keeps the smallest
        if best_val is None or val > best_val:
            best, best_val = params, val
    if best is None:
        raise BoundError("no grid point gives a valid evaluation")
    return TuneResult(bound_id, {k: list(ax) for k, ax in zip(keys, axes)}, objective,
                      {k: best[k] for k in fn.keys}, best_val, count, log)


def frange(lo, hi, step) -> list:
    """Inclusive decimal grid, exact at working precision."""
    lo, hi, step = mpf(lo), mpf(hi), mpf(step)
    n = int(mpmath.nint((hi - lo) / step))
    return [lo + i * step for i in range(n + 1)]
