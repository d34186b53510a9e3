"""Name -> runner table shared by the audit, estimator and CLI."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .mechanisms import (
    MechanismError,
    run_dynkin,
    run_mech_calibrated,
    run_mech_convex,
    run_mech_pred,
    run_mech_sample,
)
from .nonmono import (
    run_nonmono_convex,
    run_twosol_calibrated,
    run_twosol_pred,
    run_twosol_sample,
)


@dataclass(frozen=True)
class MechSpec:
    runner: Callable
    needs_prediction: bool
    needs_monotone: bool
    title: str
    coins: tuple = ()     # coin comparisons the runner reads (see audit.transcript_class)


def _dynkin(inst, order, transcript, params, bids=None, mutation=None):
    return run_dynkin(inst, order, transcript)


MECHANISMS = {
    "mech1": MechSpec(run_mech_convex, True, True, "tau-mixture of mech2 and mech3",
                      ("mix", "pred", "dynkin", "half")),
    "mech2": MechSpec(run_mech_pred, True, True, "prediction-only posted prices",
                      ("pred",)),
    "mech3": MechSpec(run_mech_sample, False, True, "Dynkin or sample-then-price",
                      ("dynkin", "half")),
    "mech4": MechSpec(run_mech_calibrated, True, True, "sampling-calibrated with prediction",
                      ("dynkin", "rate")),
    "mech5": MechSpec(run_nonmono_convex, True, False, "tau-mixture of mech6 and mech7",
                      ("mix", "pred", "dynkin", "half", "pick")),
    "mech6": MechSpec(run_twosol_pred, True, False, "two-solution prediction-only",
                      ("pred", "pick")),
    "mech7": MechSpec(run_twosol_sample, False, False, "two-solution sample-then-price",
                      ("dynkin", "half", "pick")),
    "mech8": MechSpec(run_twosol_calibrated, True, False, "two-solution sampling-calibrated",
                      ("dynkin", "rate", "pick")),
    "dynkin": MechSpec(_dynkin, False, False, "secretary rule on singleton values",
                      ()),
}

PAPER_MECHANISMS = tuple(f"mech{i}" for i in range(1, 9))


def get(mech_id: str) -> MechSpec:
    try:
        return MECHANISMS[mech_id]
    except KeyError:
        raise MechanismError(
            f"unknown mechanism {mech_id!r}; choose from {sorted(MECHANISMS)}") from None


def run(mech_id, inst, order, transcript, params, bids=None, mutation=None):
    return get(mech_id).runner(inst, order, transcript, params, bids=bids, mutation=mutation)
