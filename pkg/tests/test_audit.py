from fractions import Fraction

import pytest

from bfmech import registry
from bfmech.audit import (
    AuditError,
    adversarial_demo,
    audit_budget_ir,
    audit_orders,
    audit_transcripts,
    audit_truthfulness,
    deviation_grid,
    estimate_ratio,
    perfect_prediction,
    replay_violation,
    transcript_class,
)
from bfmech.bounds import eval_bound_mono_pred
from bfmech.instances import ArrivalOrder, Instance, attach_prediction, generate_instance
from bfmech.mechanisms import (
    FIRST_PRICE,
    NO_BUDGET_CHECK,
    PRICE_SAMPLE,
    CoinTranscript,
    MechanismOutcome,
    MechParams,
    run_dynkin,
    trial_draws,
)
from bfmech.valuations import Additive

PARAMS = MechParams()


def fuzz_instance(fam, n, seed):
    return perfect_prediction(generate_instance({"family": fam, "n": n}, seed))


# -- budget / IR -----------------------------------------------------------------

def test_dynkin_outcome_passes():
    inst = Instance([Fraction(1, 2)] * 3, 1, Additive([1, 2, 3]))
    out = run_dynkin(inst, ArrivalOrder((0, 1, 2)), CoinTranscript(0, 0, 0, 0))
    check = audit_budget_ir(out, inst)
    assert check.passed and check.total_payment == 1


def test_forged_outcome_fails_with_sum():
    inst = Instance([Fraction(1, 2)] * 2, 1, Additive([1, 1]))
    forged = MechanismOutcome(frozenset({0, 1}), {0: Fraction(1, 2), 1: Fraction(501, 1000)},
                              Fraction(2), CoinTranscript(0, 0, 0, 0), "forged", Fraction(0))
    check = audit_budget_ir(forged, inst)
    assert not check.passed
    assert check.total_payment == Fraction(1001, 1000)
    assert "1001/1000" in check.witnesses[0][1]


def test_forged_ir_failure():
    inst = Instance([Fraction(1, 2)], 1, Additive([1]))
    forged = MechanismOutcome(frozenset({0}), {0: Fraction(1, 4)}, Fraction(1),
                              CoinTranscript(0, 0, 0, 0), "forged", Fraction(3, 4))
    assert [k for k, _ in audit_budget_ir(forged, inst).witnesses] == ["ir"]


def test_fuzz_budget_and_ir():
    fams = ("additive", "coverage", "cut")
    trials = 0
    for s in range(60):
        fam = fams[s % 3]
        inst = generate_instance({"family": fam, "n": 2 + s % 5, "density": 0.8}, 500 + s)
        aug = attach_prediction(inst, Fraction(s % 10, 10), 1 + s % 4)
        mechs = registry.PAPER_MECHANISMS if fam != "cut" else ("mech5", "mech6", "mech7", "mech8")
        for mech in mechs:
            for t in range(250):
                out = registry.run(mech, aug, *trial_draws(s, t, inst.n), PARAMS)
                assert audit_budget_ir(out, inst).passed
                trials += 1
    assert trials >= 100_000


# -- truthfulness ----------------------------------------------------------------

def test_deviation_grid():
    g = deviation_grid(Fraction(1), 21)
    assert len(g) == 21 and g[0] == 0 and g[-1] == 1 and g[1] == Fraction(1, 20)
    with pytest.raises(AuditError):
        deviation_grid(Fraction(1), 1)


def test_orders():
    assert len(audit_orders(4, "exhaustive")) == 24
    assert audit_orders(5, 3, seed=1)[0].perm == audit_orders(5, 3, seed=1)[0].perm
    with pytest.raises(AuditError):
        audit_orders(9, "exhaustive")


@pytest.mark.parametrize("mech", registry.PAPER_MECHANISMS)
def test_truthful_on_small_instances(mech):
    fam = "cut" if mech in ("mech5", "mech6", "mech7", "mech8") else "coverage"
    inst = fuzz_instance(fam, 3, 41)
    rep = audit_truthfulness(mech, inst, orders="exhaustive", transcripts=64)
    assert rep.passed, rep.to_dict()
    assert rep.orders_checked == 6 and rep.transcripts_checked == 64


@pytest.mark.parametrize("mech, mutation", [
    ("mech4", FIRST_PRICE), ("mech2", FIRST_PRICE), ("mech6", FIRST_PRICE),
    ("mech3", PRICE_SAMPLE), ("mech7", PRICE_SAMPLE), ("mech1", NO_BUDGET_CHECK),
])
def test_mutations_are_caught(mech, mutation):
    inst = perfect_prediction(generate_instance({"family": "coverage", "n": 4}, 3))
    rep = audit_truthfulness(mech, inst, transcripts=64, mutation=mutation, max_violations=5)
    assert not rep.passed
    for v in rep.violations:
        assert replay_violation(mech, inst, v, mutation=mutation) == (
            v.truthful_utility, v.deviant_utility)


def test_no_budget_check_shows_budget_witnesses():
    inst = perfect_prediction(generate_instance({"family": "coverage", "n": 4}, 3))
    rep = audit_truthfulness("mech2", inst, orders=4, transcripts=16, mutation=NO_BUDGET_CHECK)
    assert rep.budget_violations


def test_sampled_agents_never_profit():
    inst = generate_instance({"family": "coverage", "n": 5}, 13)
    t = CoinTranscript(0.9, 0.99, 0.6, 0.1)
    order = ArrivalOrder((0, 1, 2, 3, 4))
    truthful = registry.run("mech3", inst, order, t, PARAMS)
    sampled = truthful.details["sample"]
    assert sampled
    for i in sampled:
        for b in deviation_grid(inst.budget, 21):
            bids = list(inst.costs)
            bids[i] = b
            out = registry.run("mech3", inst, order, t, PARAMS, bids=bids)
            assert out.utility(i, inst.costs[i]) == 0


def test_transcript_classes_are_sound():
    """Transcripts sharing a class drive each mechanism to identical outcomes."""
    for mech in registry.PAPER_MECHANISMS:
        spec = registry.get(mech)
        fam = "cut" if not spec.needs_monotone else "coverage"
        inst = fuzz_instance(fam, 5, 77)
        orders = audit_orders(5, 6, seed=2)
        seen = {}
        for t in audit_transcripts(300, seed=9):
            key = transcript_class(t, PARAMS, 5, spec.coins)
            for o in orders:
                s = registry.run(mech, inst, o, t, PARAMS).summary()
                s.pop("branch")
                seen.setdefault((key, o.perm), s)
                assert seen[(key, o.perm)] == s, (mech, key)


def test_transcript_classes_cover_every_mechanism_reading():
    # perturbing a coin no listed test reads never changes the outcome
    inst = fuzz_instance("coverage", 4, 1)
    base = CoinTranscript(0.2, 0.7, 0.4, 0.3)
    for mech, spec in registry.MECHANISMS.items():
        if not spec.needs_monotone and mech != "dynkin":
            continue
        read = {c for c in spec.coins}
        for field, coin in (("mix", "mix"), ("pick", "pick")):
            if coin in read:
                continue
            alt = CoinTranscript(**{**base.to_dict(), field: 0.95})
            o = ArrivalOrder((0, 1, 2, 3))
            assert (registry.run(mech, inst, o, base, PARAMS).winners
                    == registry.run(mech, inst, o, alt, PARAMS).winners)


# -- ratio estimation --------------------------------------------------------------

def test_ratio_one_when_everyone_is_hired():
    inst = Instance([Fraction(1, 10)] * 4, 1, Additive([1, 1, 1, 1]))
    aug = attach_prediction(inst, 0, 4)
    est = estimate_ratio("mech2", aug, 200, seed=1, params=PARAMS.with_(p_pred=0, a=1))
    assert est.mean_ratio == 1 and est.standard_error == 0
    assert all(r["ratio"] == 1 for r in est.rows)


def test_mech2_ratio_above_consistency_floor():
    inst = generate_instance({"family": "additive", "n": 10}, 23)
    aug = perfect_prediction(inst)
    params = PARAMS.with_(p_pred=Fraction("0.46"), a=Fraction("0.685"), z=Fraction("1.85"))
    est = estimate_ratio("mech2", aug, 4000, seed=2, params=params)
    floor = float(eval_bound_mono_pred("0.46", "0.685", "1.85", 0).bound)
    assert est.mean_ratio >= floor - 3 * est.standard_error
    assert 0 <= est.mean_ratio <= 1 + 3 * est.standard_error


def test_tau_zero_matches_sample_mechanism_per_trial():
    inst = generate_instance({"family": "coverage", "n": 7}, 5)
    aug = perfect_prediction(inst)
    params = PARAMS.with_(tau=0)
    a = estimate_ratio("mech1", aug, 300, seed=4, params=params)
    b = estimate_ratio("mech3", inst, 300, seed=4, params=params)
    assert [r["winners"] for r in a.rows] == [r["winners"] for r in b.rows]


def test_ratio_is_reproducible_and_worker_independent():
    aug = perfect_prediction(generate_instance({"family": "cut", "n": 6}, 8))
    a = estimate_ratio("mech5", aug, 400, seed=6)
    b = estimate_ratio("mech5", aug, 400, seed=6)
    c = estimate_ratio("mech5", aug, 400, seed=6, workers=2)
    assert (a.mean_ratio, a.standard_error) == (b.mean_ratio, b.standard_error)
    assert [r["winners"] for r in a.rows] == [r["winners"] for r in c.rows]
    assert sum(v["trials"] for v in a.per_branch.values()) == 400


def test_zero_optimum_rejected():
    inst = generate_instance({"family": "cut", "n": 1}, 0)
    with pytest.raises(AuditError):
        estimate_ratio("mech7", inst, 10, seed=0)


# -- adversarial arrival -------------------------------------------------------------

@pytest.mark.parametrize("eps", ["0.01", "0.001"])
def test_adversarial_demo(eps):
    rep = adversarial_demo(eps, n=10, transcripts=1000, seed=3)
    assert rep.adversarial_max_ratio <= Fraction(eps)
    assert rep.separated
    assert rep.random_mean_ratio > rep.adversarial_mean_ratio
