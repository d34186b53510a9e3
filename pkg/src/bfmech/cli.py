"""Command-line experiment runner.

Every subcommand writes ``results.csv`` (fixed, versioned columns),
``summary.json`` (aggregates, schema-versioned) and ``replay.json`` (seeds and
transcripts) into the output directory, plus PNG figures unless
``--no-figures`` is given.  Exit status: 0 clean, 1 invariant violation,
2 bad input.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np

from . import audit as audit_mod
from . import bounds as bnd
from . import lowerbound as lb
from . import registry
from .instances import (
    ConfigError,
    GeneratorConfig,
    InstanceError,
    attach_prediction,
    generate_instance,
    load_instance,
    AugmentedInstance,
)
from .mechanisms import MUTATIONS, MechanismError, MechParams
from .offline import SolverRefused, brute_force_opt
from .valuations import ValuationError

SCHEMA_VERSION = "bfmech-results/1"
CSV_VERSION = 1
OUT_ENV = "BFMECH_OUT"

log = logging.getLogger("bfmech")


class UsageError(ValueError):
    pass


# -- parameter handling -----------------------------------------------------

def preset_params(name: str) -> tuple:
    """(MechParams, sample-side z used only by the bounds) for a named preset."""
    try:
        p = bnd.PRESETS[name]
    except KeyError:
        raise UsageError(f"unknown preset {name!r}; choose from {sorted(bnd.PRESETS)}") from None
    if "calibrated" in p:
        c = p["calibrated"]
        return MechParams(q_dynkin=c["q"], a=c["a"], z=c["z"], beta=c["beta"],
                          delta=c["delta"], k=c["k"]), Fraction(c["z"])
    pr, sm = p["pred"], p["sample"]
    return MechParams(p_pred=pr["p"], a=pr["a"], z=pr["z"], q_dynkin=sm["q"],
                      beta=sm["beta"], delta=sm["delta"]), Fraction(sm["z"])


PARAM_ALIASES = {"p": "p_pred", "q": "q_dynkin"}


def build_params(preset, overrides) -> tuple:
    if preset:
        params, sample_z = preset_params(preset)
    else:
        params, sample_z = MechParams(), Fraction("2.1")
    changes = {}
    for item in overrides or ():
        key, _, value = item.partition("=")
        key = PARAM_ALIASES.get(key.strip(), key.strip())
        if not value:
            raise UsageError(f"--param expects name=value, got {item!r}")
        if key == "sample_z":
            sample_z = Fraction(value)
            continue
        if key not in MechParams.__dataclass_fields__:
            raise UsageError(f"unknown parameter {key!r}")
        changes[key] = Fraction(value)
    return (params.with_(**changes) if changes else params), sample_z


def analytic_bound(mech_id: str, params: MechParams, epsilon, sample_z):
    """Guarantee for the mechanism at these parameters, or None (Dynkin)."""
    pred = {"p": params.p_pred, "a": params.a, "z": params.z}
    sample = {"q": params.q_dynkin, "z": sample_z, "beta": params.beta, "delta": params.delta}
    cal = (params.q_dynkin, params.a, params.z, params.beta, params.delta, params.k, epsilon)
    eps = epsilon
    try:
        if mech_id == "mech1":
            return bnd.eval_bound_mech1(params.tau, pred, sample, eps)
        if mech_id == "mech2":
            return bnd.eval_bound_mono_pred(params.p_pred, params.a, params.z, eps)
        if mech_id == "mech3":
            return bnd.eval_bound_mono_sample(*sample.values())
        if mech_id == "mech4":
            return bnd.eval_bound_mech4(*cal)
        if mech_id == "mech5":
            return bnd.eval_bound_mech5(params.tau, pred, sample, eps)
        if mech_id == "mech6":
            return bnd.eval_bound_nonmono_pred(params.p_pred, params.a, params.z, eps)
        if mech_id == "mech7":
            return bnd.eval_bound_nonmono_sample(*sample.values())
        if mech_id == "mech8":
            return bnd.eval_bound_mech8(*cal)
    except bnd.BoundError as exc:
        log.warning("no analytic bound for %s: %s", mech_id, exc)
    return None


def parse_epsilons(text: str) -> list:
    """Comma list; values >= 1 stand for an arbitrarily bad prediction."""
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        x = Fraction(tok)
        if x < 0:
            raise UsageError("epsilon must be non-negative")
        out.append(Fraction(bnd.ROBUST_EPSILON) if x >= 1 else x)
    if not out:
        raise UsageError("empty epsilon list")
    return out


def parse_grid_axis(text: str) -> tuple:
    """``name=lo:hi:step`` or ``name=v1,v2,...``."""
    name, _, spec = text.partition("=")
    if not spec:
        raise UsageError(f"--grid expects name=lo:hi:step or name=v1,v2; got {text!r}")
    if ":" in spec:
        lo, hi, step = spec.split(":")
        values = bnd.frange(lo, hi, step)
    else:
        values = [bnd.mpf(v) for v in spec.split(",") if v]
    return name.strip(), values


# -- instances --------------------------------------------------------------

def resolve_instance(args):
    if getattr(args, "instance", None):
        inst = load_instance(args.instance)
    else:
        cfg = GeneratorConfig(family=args.family, n=args.n, budget=Fraction(args.budget),
                              cost_dist=args.cost_dist)
        inst = generate_instance(cfg, args.instance_seed)
    return inst


def with_prediction(inst, epsilon):
    base = inst.base if isinstance(inst, AugmentedInstance) else inst
    return attach_prediction(base, epsilon, brute_force_opt(base).value)


# -- output -----------------------------------------------------------------

def config_digest(args) -> str:
    d = {k: v for k, v in sorted(vars(args).items())
         if k not in ("out", "workers", "no_figures", "func", "verbose")}
    return hashlib.sha256(json.dumps(d, sort_keys=True, default=str).encode()).hexdigest()[:12]


class Output:
    def __init__(self, args, subcommand: str, columns: list):
        self.dir = Path(args.out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.subcommand = subcommand
        self.columns = ["config_digest", "seed"] + columns
        self.digest = config_digest(args)
        self.seed = getattr(args, "seed", 0)
        self.rows = []
        self.figures = []
        self.figures_on = not args.no_figures

    def row(self, **values):
        values.setdefault("seed", self.seed)
        values["config_digest"] = self.digest
        missing = set(values) - set(self.columns)
        if missing:
            raise KeyError(f"unexpected columns {sorted(missing)}")
        self.rows.append(values)
        return len(self.rows)            # 1-based data row index

    def figure(self, fn, name, *a, **kw):
        if self.figures_on:
            path = fn(*a, path=self.dir / name, **kw)
            self.figures.append(path.name)

    def write(self, summary: dict, replay: dict):
        buf = io.StringIO()
        buf.write(f"# bfmech {self.subcommand} results, csv version {CSV_VERSION}\n")
        w = csv.DictWriter(buf, fieldnames=self.columns, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: _cell(r.get(k, "")) for k in self.columns})
        (self.dir / "results.csv").write_text(buf.getvalue())
        summary = {"schema": SCHEMA_VERSION, "subcommand": self.subcommand,
                   "config_digest": self.digest, "figures": self.figures, **summary}
        _dump(self.dir / "summary.json", summary)
        _dump(self.dir / "replay.json", {"schema": SCHEMA_VERSION,
                                         "config_digest": self.digest, **replay})


def _cell(x):
    if isinstance(x, (list, tuple)):
        return " ".join(str(v) for v in x)
    if isinstance(x, mpmath.mpf):
        return mpmath.nstr(x, 15)
    return str(x)


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, mpmath.mpf):
        return mpmath.nstr(x, 20)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (set, frozenset)):
        return sorted(x)
    raise TypeError(type(x))


def _dump(path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


# -- subcommands --------------------------------------------------------------

def cmd_run(args) -> int:
    from . import plotting
    params, sample_z = build_params(args.preset, args.param)
    spec = registry.get(args.mech)
    inst = resolve_instance(args)
    base = inst.base if isinstance(inst, AugmentedInstance) else inst
    if spec.needs_monotone and not base.oracle.monotone:
        raise UsageError(f"{args.mech} needs a monotone valuation")
    out = Output(args, "run", ["epsilon", "trial", "order", "branch", "winners", "value",
                               "optimum", "ratio", "total_payment", "budget_ir_ok"])
    optimum = brute_force_opt(base).value
    per_eps, replay_rows, violations = [], [], 0
    for eps in parse_epsilons(args.epsilon):
        aug = attach_prediction(base, eps, optimum)
        est = audit_mod.estimate_ratio(args.mech, aug, args.trials, args.seed, params,
                                       workers=args.workers)
        for r in est.rows:
            idx = out.row(epsilon=eps, trial=r["trial"], seed=f"{r['seed'][0]}:{r['seed'][1]}",
                          order=r["order"], branch=r["branch"], winners=r["winners"],
                          value=r["value"], optimum=optimum, ratio=r["ratio"],
                          total_payment=r["total_payment"], budget_ir_ok=r["budget_ir_ok"])
            if not r["budget_ir_ok"]:
                violations += 1
                log.error("budget/IR violation at results.csv data row %d", idx)
            replay_rows.append({"epsilon": str(eps), "trial": r["trial"],
                                "order_seed": r["seed"] + [0],
                                "transcript_seed": r["seed"] + [1]})
        rep = analytic_bound(args.mech, params, eps, sample_z)
        entry = est.to_dict()
        entry["epsilon"] = str(eps)
        ci = 1.96 * est.standard_error
        entry["ci95"] = [est.mean_ratio - ci, est.mean_ratio + ci]
        if rep is not None:
            floor = float(rep.bound)
            entry["analytic_bound"] = floor
            entry["above_bound_minus_3se"] = est.mean_ratio >= floor - 3 * est.standard_error
        per_eps.append(entry)
        out.figure(plotting.ratio_histogram, f"ratios_eps{float(eps):.3g}.png",
                   [float(r["ratio"]) for r in est.rows],
                   bound=None if rep is None else float(rep.bound), mean=est.mean_ratio,
                   title=f"{args.mech}, epsilon = {float(eps):.3g}")
    out.write({"mechanism": args.mech, "params": params.to_dict(), "sample_z": str(sample_z),
               "optimum": str(optimum), "trials": args.trials, "estimates": per_eps,
               "budget_ir_violations": violations},
              {"instance": base.to_dict(), "mechanism": args.mech, "params": params.to_dict(),
               "root_seed": args.seed,
               "seed_scheme": "order = default_rng([root, trial, 0]).permutation(n); "
                              "coins = default_rng([root, trial, 1]).random(4)",
               "trials": replay_rows})
    return 1 if violations else 0


def cmd_audit(args) -> int:
    params, _ = build_params(args.preset, args.param)
    inst = resolve_instance(args)
    base = inst.base if isinstance(inst, AugmentedInstance) else inst
    eps = parse_epsilons(args.epsilon)[0]
    aug = with_prediction(base, eps)
    if args.mech == "all":
        mechs = [m for m in registry.PAPER_MECHANISMS
                 if base.oracle.monotone or not registry.get(m).needs_monotone]
    else:
        mechs = [args.mech]
        if registry.get(args.mech).needs_monotone and not base.oracle.monotone:
            raise UsageError(f"{args.mech} needs a monotone valuation")
    orders = "exhaustive" if args.exhaustive_orders else args.orders
    out = Output(args, "audit", ["mechanism", "kind", "agent", "order", "transcript_seed",
                                 "deviation", "truthful_utility", "deviant_utility", "detail"])
    reports, first_row = [], None
    for m in mechs:
        rep = audit_mod.audit_truthfulness(m, aug, orders, args.transcripts, args.grid, params,
                                           seed=args.seed, mutation=args.mutation,
                                           max_violations=args.max_violations)
        for v in rep.violations:
            idx = out.row(mechanism=m, kind="truthfulness", agent=v.agent, order=v.order,
                          transcript_seed=v.transcript["seed"], deviation=v.deviation,
                          truthful_utility=v.truthful_utility, deviant_utility=v.deviant_utility)
            first_row = first_row or idx
        for w in rep.budget_violations + rep.ir_violations:
            idx = out.row(mechanism=m, kind=w.kind, order=w.order,
                          transcript_seed=w.transcript["seed"], detail=w.detail)
            first_row = first_row or idx
        d = rep.to_dict()
        for key in ("violations", "budget_violations", "ir_violations"):
            d[key] = len(d[key])
        reports.append(d)
        log.info("%s: %s (%d runs)", m, "pass" if rep.passed else "FAIL", rep.trials)
    passed = all(r["passed"] for r in reports)
    out.write({"passed": passed, "first_violation_row": first_row, "mutation": args.mutation,
               "epsilon": str(eps), "reports": reports},
              {"instance": aug.to_dict(), "params": params.to_dict(), "root_seed": args.seed,
               "orders": orders, "transcripts": args.transcripts,
               "transcript_seed_scheme": "default_rng([root, 1, j]).random(4)",
               "order_seed_scheme": "exhaustive permutations in lexicographic order"
               if orders == "exhaustive" else "default_rng([root, 0, j]).permutation(n)"})
    if not passed:
        print(f"invariant violation: see results.csv data row {first_row}", file=sys.stderr)
    return 0 if passed else 1


def _bound_reports(args):
    eps_list = parse_epsilons(args.epsilon)
    if args.preset:
        return bnd.evaluate_preset(args.preset, eps_list, tau=args.tau), eps_list
    if not args.bound:
        raise UsageError("bounds needs --preset or --bound")
    fn = bnd.BOUNDS.get(args.bound)
    if fn is None:
        raise UsageError(f"unknown bound {args.bound!r}; choose from {sorted(bnd.BOUNDS)}")
    params = {}
    for item in args.param or ():
        k, _, v = item.partition("=")
        params[k.strip()] = v
    missing = [k for k in fn.keys if k not in params]
    if missing:
        raise UsageError(f"--bound {args.bound} needs --param for {missing}")
    return [fn(params, e) for e in eps_list], eps_list


def cmd_bounds(args) -> int:
    from . import plotting
    reports, eps_list = _bound_reports(args)
    out = Output(args, "bounds", ["mechanism", "epsilon", "params", "terms", "tilde_p",
                                  "bound", "reciprocal", "binding_term", "degenerate"])
    for r in reports:
        row = r.row()
        out.row(mechanism=r.mechanism, epsilon=row["epsilon"],
                params=";".join(f"{k}={v}" for k, v in r.params.items()),
                terms=";".join(f"{k}={mpmath.nstr(v, 15)}" for k, v in r.terms.items()),
                tilde_p=row["tilde_p"], bound=row["bound"], reciprocal=row["reciprocal"],
                binding_term=r.binding_term, degenerate=r.degenerate)
    if out.figures_on:
        grid = [i / 100 for i in range(100)]
        series = {}
        if args.preset:
            for name in sorted({r.mechanism for r in reports}):
                curve = []
                for e in grid:
                    hit = [r for r in bnd.evaluate_preset(args.preset, (e,), tau=args.tau)
                           if r.mechanism == name]
                    curve.append(float(hit[0].bound))
                series[name] = curve
        else:
            fn = bnd.BOUNDS[args.bound]
            params = dict(item.split("=", 1) for item in args.param)
            series[args.bound] = [float(fn(params, e).bound) for e in grid]
        out.figure(plotting.bound_curves, "bounds_vs_epsilon.png", grid, series,
                   title=args.preset or args.bound)
    out.write({"reports": [r.to_dict() for r in reports]},
              {"preset": args.preset, "bound": args.bound, "params": args.param,
               "epsilons": [str(e) for e in eps_list], "tau": args.tau,
               "precision_digits": bnd.DPS})
    return 0


def cmd_tune(args) -> int:
    from . import plotting
    grid = dict(parse_grid_axis(g) for g in args.grid)
    fixed = dict(item.split("=", 1) for item in args.fixed or ())
    res = bnd.tune_params(args.bound, grid, args.objective, fixed, record=True)
    keys = list(res.grid)
    out = Output(args, "tune", ["point"] + [f"param_{k}" for k in keys] + ["objective"])
    for j, (params, val) in enumerate(res.log):
        out.row(point=j, objective="invalid" if val is None else mpmath.nstr(val, 15),
                **{f"param_{k}": mpmath.nstr(params[k], 10) for k in keys})
    if out.figures_on and len(keys) in (1, 2):
        xs = [float(x) for x in res.grid[keys[0]]]
        vals = [float(v) if v is not None else np.nan for _, v in res.log]
        if len(keys) == 1:
            out.figure(plotting.tune_surface, "tune.png", xs, None, vals, keys[0], "",
                       best=(float(res.best_params[keys[0]]),))
        else:
            ys = [float(y) for y in res.grid[keys[1]]]
            z = np.array(vals).reshape(len(xs), len(ys))
            out.figure(plotting.tune_surface, "tune.png", xs, ys, z, keys[0], keys[1],
                       best=(float(res.best_params[keys[0]]), float(res.best_params[keys[1]])))
    out.write({"result": res.to_dict()}, {"bound": args.bound, "grid": args.grid,
                                          "fixed": args.fixed, "objective": args.objective})
    return 0


def cmd_lowerbound(args) -> int:
    from . import plotting
    ks = [int(x) for x in str(args.k).split(",") if x]
    out = Output(args, "lowerbound", ["k", "max_expected_ratio", "ceiling", "matches_ceiling",
                                      "curves_searched", "blocking_failures", "yao_mixtures",
                                      "yao_failures"])
    results, ok = [], True
    rng = np.random.default_rng(args.seed)
    for k in ks:
        res = lb.max_expected_ratio(k, Fraction(args.budget), args.figure_variant)
        dist = lb.build_pk(k, Fraction(args.budget), args.figure_variant)
        yao_fail = 0
        for _ in range(args.yao):
            size = int(rng.integers(1, 5))
            tables = [lb.random_table(dist.grid, rng) for _ in range(size)]
            weights = rng.integers(1, 10, size=size)
            mix = [(Fraction(int(w), int(weights.sum())), t) for w, t in zip(weights, tables)]
            yao_fail += not lb.yao_check(mix, dist).holds
        good = res.max_ratio == res.ceiling and res.blocking_failures == 0 and yao_fail == 0
        ok &= good
        out.row(k=k, max_expected_ratio=res.max_ratio, ceiling=res.ceiling,
                matches_ceiling=res.max_ratio == res.ceiling,
                curves_searched=res.curves_searched, blocking_failures=res.blocking_failures,
                yao_mixtures=args.yao, yao_failures=yao_fail)
        d = res.to_dict()
        d["yao_failures"] = yao_fail
        results.append(d)
        _dump(out.dir / f"witness_k{k}.json", res.witness.to_dict())
        out.figure(plotting.witness_heatmap, f"witness_k{k}.png", res.witness.matrix(),
                   dist.support, title=f"k = {k}, ratio {res.max_ratio}")
    summary = {"results": results, "theorem_chain": [
        {k: str(v) for k, v in lb.theorem_chain(k).items()} for k in ks]}
    if len(results) == 1:
        summary["max_expected_ratio"] = results[0]["max_expected_ratio"]
    out.write(summary, {"k": ks, "budget": str(args.budget), "yao_seed": args.seed,
                        "figure_variant": args.figure_variant})
    return 0 if ok else 1


def cmd_demo(args) -> int:
    from . import plotting
    values = [Fraction(x) for x in args.epsilon_small.split(",") if x]
    out = Output(args, "demo", ["epsilon_small", "n", "adversarial_max_ratio",
                                "adversarial_mean_ratio", "random_mean_ratio",
                                "random_standard_error", "separated"])
    reports = []
    for e in values:
        rep = audit_mod.adversarial_demo(e, args.n, args.transcripts, args.seed)
        out.row(epsilon_small=e, n=args.n, adversarial_max_ratio=rep.adversarial_max_ratio,
                adversarial_mean_ratio=rep.adversarial_mean_ratio,
                random_mean_ratio=rep.random_mean_ratio,
                random_standard_error=rep.random_standard_error, separated=rep.separated)
        reports.append(rep)
    out.figure(plotting.demo_bars, "demo.png", [str(e) for e in values],
               [r.adversarial_mean_ratio for r in reports],
               [r.random_mean_ratio for r in reports])
    ok = all(r.separated and r.random_mean_ratio > r.adversarial_mean_ratio for r in reports)
    out.write({"reports": [r.to_dict() for r in reports], "passed": ok},
              {"root_seed": args.seed, "n": args.n, "transcripts": args.transcripts,
               "adversarial_order": "valuable agent 0 arrives first, then 1..n-1"})
    return 0 if ok else 1


# -- parser -------------------------------------------------------------------

def _common(p, seed=True):
    p.add_argument("--out", default=os.environ.get(OUT_ENV, "bfmech-out"),
                   help=f"output directory (default ${OUT_ENV} or ./bfmech-out)")
    p.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    p.add_argument("--workers", type=int, default=1, help="worker processes for trials")
    p.add_argument("-v", "--verbose", action="store_true")
    if seed:
        p.add_argument("--seed", type=int, default=0, help="root seed")


def _instance_args(p, n_default=6):
    p.add_argument("--instance", help="instance JSON file (overrides the generator)")
    p.add_argument("--family", choices=("additive", "coverage", "cut"), default="coverage")
    p.add_argument("--n", type=int, default=n_default)
    p.add_argument("--budget", default="1")
    p.add_argument("--cost-dist", choices=("uniform", "correlated"), default="uniform")
    p.add_argument("--instance-seed", type=int, default=7)
    p.add_argument("--preset", choices=sorted(bnd.PRESETS))
    p.add_argument("--param", action="append", metavar="NAME=VALUE",
                   help="override a mechanism parameter (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bfmech", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("run", help="Monte Carlo runs of one mechanism")
    _common(p)
    _instance_args(p, n_default=10)
    p.add_argument("--mech", required=True, choices=sorted(registry.MECHANISMS))
    p.add_argument("--epsilon", default="0")
    p.add_argument("--trials", type=int, default=1000)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("audit", help="truthfulness, budget and IR audit")
    _common(p)
    _instance_args(p, n_default=4)
    p.add_argument("--mech", required=True, choices=sorted(registry.MECHANISMS) + ["all"])
    p.add_argument("--epsilon", default="0", help="prediction error of the audited instance")
    order = p.add_mutually_exclusive_group()
    order.add_argument("--exhaustive-orders", action="store_true")
    order.add_argument("--orders", type=int, default=24, help="number of sampled orders")
    p.add_argument("--transcripts", type=int, default=64)
    p.add_argument("--grid", type=int, default=21, help="evenly spaced deviations in [0, B]")
    p.add_argument("--mutation", choices=MUTATIONS)
    p.add_argument("--max-violations", type=int, default=50)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("bounds", help="evaluate closed-form guarantees")
    _common(p, seed=False)
    p.add_argument("--preset", choices=sorted(bnd.PRESETS))
    p.add_argument("--bound", choices=sorted(bnd.BOUNDS))
    p.add_argument("--param", action="append", metavar="NAME=VALUE")
    p.add_argument("--epsilon", default="0,1", help="values >= 1 mean epsilon -> 1")
    p.add_argument("--tau", help="also report the tau-mixture (preset mode)")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("tune", help="grid search over bound parameters")
    _common(p, seed=False)
    p.add_argument("--bound", required=True, choices=sorted(bnd.BOUNDS))
    p.add_argument("--grid", action="append", required=True, metavar="NAME=LO:HI:STEP")
    p.add_argument("--fixed", action="append", metavar="NAME=VALUE")
    p.add_argument("--objective", choices=("consistency", "robustness", "tradeoff"),
                   default="consistency")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("lowerbound", help="exhaustive search on canonical two-agent tables")
    _common(p)
    p.add_argument("--k", default="3", help="grid resolution, or a comma list")
    p.add_argument("--budget", default="1")
    p.add_argument("--yao", type=int, default=100, help="random mixtures for the Yao check")
    p.add_argument("--figure-variant", action="store_true",
                   help="support i = 0..k-1 instead of 1..k")
    p.set_defaults(func=cmd_lowerbound)

    p = sub.add_parser("demo", help="adversarial arrival order against the sampling mechanism")
    _common(p)
    p.add_argument("--epsilon-small", default="0.01,0.001")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--transcripts", type=int, default=2000)
    p.set_defaults(func=cmd_demo)
    return ap


INPUT_ERRORS = (UsageError, ConfigError, InstanceError, ValuationError, MechanismError,
                bnd.BoundError, lb.LowerBoundError, audit_mod.AuditError, SolverRefused,
                ValueError, OSError, ZeroDivisionError)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"bfmech {args.subcommand}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
