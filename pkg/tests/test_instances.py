from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bfmech.instances import (
    ArrivalOrder,
    ConfigError,
    GeneratorConfig,
    Instance,
    InstanceError,
    attach_prediction,
    generate_instance,
    load_instance,
    parse,
    render,
    sample_arrival,
    save_instance,
)
from bfmech.valuations import Additive, Coverage, subsets


def test_single_agent_permutation():
    assert sample_arrival(1, 123).perm == (0,)


def test_zero_agents_rejected():
    with pytest.raises(InstanceError):
        sample_arrival(0, 1)


def test_same_seed_same_permutation():
    assert sample_arrival(7, 42).perm == sample_arrival(7, 42).perm
    assert sample_arrival(7, [3, 1]).perm == sample_arrival(7, [3, 1]).perm


def test_permutation_frequencies_n3():
    rng = np.random.default_rng(2024)
    counts = Counter(sample_arrival(3, int(s)).perm for s in rng.integers(0, 2**62, 60000))
    assert len(counts) == 6
    for c in counts.values():
        assert abs(c / 60000 - 1 / 6) <= 0.01


def test_first_slot_frequency_n4():
    hits = sum(sample_arrival(4, [9, t]).perm[0] == 2 for t in range(100_000))
    assert abs(hits / 100_000 - 0.25) <= 0.01


def test_arrival_order_must_be_permutation():
    with pytest.raises(InstanceError):
        ArrivalOrder((0, 0, 1))
    assert ArrivalOrder((2, 0, 1)).position() == {2: 0, 0: 1, 1: 2}


@pytest.mark.parametrize("eps, opt, omega", [
    (0, 2, Fraction(2)),
    (Fraction(1, 2), 10, Fraction(5)),
    (Fraction(99, 100), 1, Fraction(1, 100)),
])
def test_attach_prediction(eps, opt, omega):
    inst = Instance([Fraction(1, 2)], 1, Additive([1]))
    aug = attach_prediction(inst, eps, opt)
    assert aug.omega == omega
    assert aug.epsilon == Fraction(eps)
    assert aug.omega == (1 - aug.epsilon) * opt


@pytest.mark.parametrize("eps, opt", [(1, 2), (-Fraction(1, 10), 2), (0, 0)])
def test_attach_prediction_domain(eps, opt):
    inst = Instance([Fraction(1, 2)], 1, Additive([1]))
    with pytest.raises(InstanceError):
        attach_prediction(inst, eps, opt)


def test_instance_invariants():
    with pytest.raises(InstanceError):
        Instance([0], 1, Additive([1]))
    with pytest.raises(InstanceError):
        Instance([2], 1, Additive([1]))
    with pytest.raises(InstanceError):
        Instance([1], 0, Additive([1]))
    with pytest.raises(InstanceError):
        Instance([1, 1], 1, Additive([1]))


def test_generate_additive_range():
    cfg = GeneratorConfig(family="additive", n=4, budget=Fraction(1),
                          cost_low=Fraction(1, 10), cost_high=Fraction(1))
    inst = generate_instance(cfg, 5)
    assert inst.n == 4
    assert all(Fraction(1, 10) < c <= 1 for c in inst.costs)


def test_generate_is_deterministic():
    cfg = {"family": "cut", "n": 6}
    assert render(generate_instance(cfg, 11)) == render(generate_instance(cfg, 11))


def test_generate_coverage_shape():
    inst = generate_instance(GeneratorConfig(family="coverage", n=6, universe=12), 3)
    assert isinstance(inst.oracle, Coverage)
    assert len(inst.oracle.sets) == 6
    assert len(inst.oracle.element_weights) == 12
    assert all(w >= 0 for w in inst.oracle.element_weights)


def test_generate_correlated_costs_stay_in_range():
    inst = generate_instance({"family": "coverage", "n": 8, "cost_dist": "correlated",
                              "budget": "2"}, 1)
    assert all(0 < c <= 2 for c in inst.costs)


@pytest.mark.parametrize("bad", [
    {"family": "xos"},
    {"n": 0},
    {"cost_dist": "lognormal"},
    {"budget": "0"},
    {"colour": "red"},
    {"density": 0},
])
def test_malformed_config(bad):
    with pytest.raises(ConfigError):
        generate_instance(bad, 0)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["additive", "coverage", "cut"]), st.integers(1, 7),
       st.integers(0, 2**32), st.booleans())
def test_round_trip(family, n, seed, with_pred):
    inst = generate_instance({"family": family, "n": n}, seed)
    if with_pred:
        inst = attach_prediction(inst, Fraction(1, 3), Fraction(7, 2))
    back = parse(render(inst))
    assert back.to_dict() == inst.to_dict()
    assert all(back.oracle.eval(s) == inst.oracle.eval(s) for s in subsets(range(n)))
    if with_pred:
        assert back.epsilon == Fraction(1, 3)


def test_file_round_trip(tmp_path):
    inst = generate_instance({"family": "coverage", "n": 5}, 8)
    path = tmp_path / "inst.json"
    save_instance(inst, path)
    assert load_instance(path).to_dict() == inst.to_dict()


def test_bad_documents():
    with pytest.raises(InstanceError):
        parse("{not json")
    with pytest.raises(InstanceError):
        parse('{"budget": "1"}')
    with pytest.raises(InstanceError):
        parse('{"n": 2, "budget": "1", "costs": ["1/2"],'
              ' "valuation": {"family": "additive", "payload": {"weights": ["1"]}}}')
