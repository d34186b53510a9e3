from fractions import Fraction
from itertools import permutations
from statistics import fmean, stdev

import pytest
from hypothesis import given, settings, strategies as st

from bfmech.audit import audit_budget_ir
from bfmech.instances import (
    ArrivalOrder,
    Instance,
    attach_prediction,
    generate_instance,
    sample_arrival,
)
from bfmech.mechanisms import (
    CoinTranscript,
    MechanismError,
    MechParams,
    binomial_inverse,
    posted_price,
    run_dynkin,
    run_mech_calibrated,
    run_mech_convex,
    run_mech_pred,
    run_mech_sample,
    trial_draws,
)
from bfmech.offline import brute_force_opt
from bfmech.valuations import Additive, GraphCut

from oracles import binom_quantile, ref_dynkin, ref_mech3

B = Fraction(1)
PARAMS = MechParams()


def coins(mix=0.9, branch=0.9, split=0.5, pick=0.1):
    return CoinTranscript(mix, branch, split, pick)


def order(*perm):
    return ArrivalOrder(perm)


def aug_of(inst, eps=0):
    return attach_prediction(inst, eps, brute_force_opt(inst).value)


# -- Dynkin ------------------------------------------------------------------

def test_dynkin_single_agent():
    out = run_dynkin(Instance([Fraction(1, 2)], B, Additive([3])), order(0), coins())
    assert out.winners == {0}
    assert out.payments == {0: B}


def test_dynkin_exact_success_at_n4():
    inst = Instance([Fraction(1, 4)] * 4, B, Additive([1, 2, 3, 4]))
    hits = sum(3 in run_dynkin(inst, order(*p), coins()).winners for p in permutations(range(4)))
    assert Fraction(hits, 24) == Fraction(11, 24)
    assert Fraction(hits, 24) == Fraction(1, 4) * (1 + Fraction(1, 2) + Fraction(1, 3))


def test_dynkin_matches_reference_and_pays_budget():
    inst = generate_instance({"family": "coverage", "n": 9, "budget": "3"}, 2)
    for t in range(300):
        o = sample_arrival(9, [4, t])
        out = run_dynkin(inst, o, coins())
        assert out.winners == ref_dynkin(inst.oracle.eval, list(o), inst.budget)
        if out.winners:
            assert list(out.payments.values()) == [inst.budget]


def test_dynkin_ties_earliest_and_ge():
    # n=3: observe one agent; an equal later value qualifies
    inst = Instance([B] * 3, B, Additive([2, 2, 1]))
    assert run_dynkin(inst, order(0, 2, 1), coins()).winners == {1}


# -- prediction mechanism ----------------------------------------------------

def test_pred_single_branch():
    inst = Instance([Fraction(1, 2)], B, Additive([1]))
    aug = attach_prediction(inst, 0, 1)
    out = run_mech_pred(aug, order(0), coins(branch=0.0), PARAMS.with_(a=1, z=2))  # a·ω/z = 1/2
    assert out.branch_label == "pred.single"
    assert out.winners == {0} and out.payments == {0: B}


def test_pred_posted_hand_trace():
    inst = Instance([Fraction(3, 10), Fraction(6, 10)], B, Additive([4, 2]))
    aug = attach_prediction(inst, 0, 2)                        # omega = 2, a = 1 gives t = 2
    params = PARAMS.with_(a=1)
    out = run_mech_pred(aug, order(0, 1), coins(branch=0.99), params)
    assert out.offers == {0: 2 * B, 1: B}
    assert out.winners == {1}
    assert out.payments == {1: B}
    assert out.residual_budget == 0


def test_pred_needs_prediction():
    inst = Instance([Fraction(1, 2)], B, Additive([1]))
    with pytest.raises(MechanismError):
        run_mech_pred(inst, order(0), coins(), PARAMS)


def test_pred_zero_threshold_is_an_error():
    aug = attach_prediction(Instance([Fraction(1, 2)], B, Additive([1])), 0, 1)
    with pytest.raises(MechanismError):
        run_mech_pred(aug, order(0), coins(branch=0.99), PARAMS.with_(a=0))


# -- sample mechanism --------------------------------------------------------

def test_sample_everyone_sampled_is_empty():
    inst = generate_instance({"family": "coverage", "n": 6}, 3)
    out = run_mech_sample(inst, order(*range(6)), coins(branch=0.99, split=0.9999999), PARAMS)
    assert out.details["xi1"] == 6
    assert out.winners == frozenset() and out.payments == {}


def test_sample_replay_is_identical():
    inst = generate_instance({"family": "coverage", "n": 6}, 12)
    o, tr = trial_draws(5, 17, 6)
    a = run_mech_sample(inst, o, tr, PARAMS)
    b = run_mech_sample(inst, o, CoinTranscript(**{k: v for k, v in tr.to_dict().items()}),
                        PARAMS)
    assert a.summary() == b.summary() and a.offers == b.offers


def test_sample_prices_second_half_only():
    inst = generate_instance({"family": "additive", "n": 8}, 4)
    out = run_mech_sample(inst, order(*range(8)), coins(branch=0.99, split=0.5), PARAMS)
    xi = out.details["xi1"]
    assert set(out.offers) == set(range(xi, 8))
    assert not out.winners & set(range(xi))


def test_sample_needs_monotone():
    inst = Instance([B, B], B, GraphCut([[0, 1], [1, 0]]))
    with pytest.raises(MechanismError):
        run_mech_sample(inst, order(0, 1), coins(), PARAMS)


def test_sample_against_duplicate_simulator():
    inst = generate_instance({"family": "coverage", "n": 12}, 5)
    opt = brute_force_opt(inst).value
    mine, ref = [], []
    for t in range(10_000):
        o, tr = trial_draws(77, t, 12)
        got = run_mech_sample(inst, o, tr, PARAMS).winners
        want = ref_mech3(inst.oracle.eval, inst.costs, inst.budget, list(o),
                         (tr.mix, tr.branch, tr.split, tr.pick), PARAMS.q_dynkin, PARAMS.beta)
        assert got == want, t
        mine.append(float(inst.oracle.eval(got) / opt))
        ref.append(float(inst.oracle.eval(want) / opt))
    se = stdev(ref) / len(ref) ** 0.5
    assert abs(fmean(mine) - fmean(ref)) <= 2 * se


# -- convex mixture and calibrated -------------------------------------------

def test_convex_tau_zero_equals_sample():
    inst = generate_instance({"family": "coverage", "n": 7}, 9)
    aug = aug_of(inst)
    params = PARAMS.with_(tau=0)
    for t in range(200):
        o, tr = trial_draws(3, t, 7)
        assert (run_mech_convex(aug, o, tr, params).summary()
                == run_mech_sample(inst, o, tr, params).summary())


def test_convex_tau_near_one_takes_prediction_branch():
    inst = generate_instance({"family": "coverage", "n": 5}, 9)
    aug = aug_of(inst)
    params = PARAMS.with_(tau=Fraction(999, 1000))
    pred = sum(run_mech_convex(aug, *trial_draws(8, t, 5), params).branch_label.startswith("pred")
               for t in range(10_000))
    assert pred >= 9900


def test_calibrated_a_zero_matches_sample_rate():
    inst = generate_instance({"family": "coverage", "n": 8}, 1)
    aug = aug_of(inst)
    params = PARAMS.with_(a=0, k=2)
    for t in range(200):
        o, tr = trial_draws(6, t, 8)
        cal = run_mech_calibrated(aug, o, tr, params)
        smp = run_mech_sample(inst, o, tr, params)
        assert cal.winners == smp.winners and cal.payments == smp.payments


def test_calibrated_huge_prediction_prices_out_everyone():
    inst = generate_instance({"family": "additive", "n": 6}, 2)
    aug = attach_prediction(inst, 0, Fraction(10**9))
    for t in range(50):
        out = run_mech_calibrated(aug, *trial_draws(1, t, 6), PARAMS.with_(q_dynkin=0))
        assert out.winners == frozenset()


def test_calibrated_mean_sample_size():
    xs = [binomial_inverse(CoinTranscript.from_seed([11, t]).split, 10, Fraction(2, 5))
          for t in range(100_000)]
    assert abs(fmean(xs) - 4.0) <= 0.05


# -- binomial inverse ---------------------------------------------------------

@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1, exclude_max=True), st.integers(0, 15),
       st.sampled_from([Fraction(1, 2), Fraction(2, 5), Fraction(1, 3)]))
def test_binomial_inverse_matches_reference(u, n, p):
    assert binomial_inverse(u, n, p) == binom_quantile(u, n, p)


# -- universal properties -----------------------------------------------------

RUNNERS = [run_mech_convex, run_mech_pred, run_mech_sample, run_mech_calibrated]


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(RUNNERS), st.sampled_from(["additive", "coverage"]),
       st.integers(1, 8), st.integers(0, 2**32), st.integers(0, 2**32),
       st.fractions(0, Fraction(9, 10)))
def test_budget_ir_and_price_cap(runner, fam, n, iseed, tseed, eps):
    inst = generate_instance({"family": fam, "n": n}, iseed)
    aug = aug_of(inst, eps)
    o, tr = trial_draws(tseed, 0, n)
    out = runner(aug, o, tr, PARAMS)
    assert audit_budget_ir(out, inst).passed
    assert sum(out.payments.values()) <= inst.budget
    assert set(out.payments) == set(out.winners)
    t = out.details.get("threshold")
    if t:
        for i in out.winners:
            assert out.payments[i] <= inst.budget / t * inst.oracle.eval({i})


def test_posted_price_rejects_overpriced_and_overbudget():
    inst = Instance([Fraction(1, 10)] * 3, B, Additive([1, 1, 1]))
    chosen, pay, residual, _ = posted_price(inst, inst.costs, [0, 1, 2], Fraction(2))
    assert chosen == [0, 1] and residual == 0
    assert pay == {0: Fraction(1, 2), 1: Fraction(1, 2)}


def test_params_validation():
    for bad in ({"z": 1}, {"k": 1}, {"delta": Fraction(1, 2)}, {"tau": 2}, {"beta": -1}):
        with pytest.raises(MechanismError):
            MechParams(**bad)


def test_declared_bids_are_validated():
    inst = Instance([Fraction(1, 2)] * 2, B, Additive([1, 1]))
    aug = aug_of(inst)
    with pytest.raises(MechanismError):
        run_mech_pred(aug, order(0, 1), coins(), PARAMS, bids=[Fraction(1, 2)])
    with pytest.raises(MechanismError):
        run_mech_pred(aug, order(0, 1), coins(), PARAMS, bids=[2, 0])
