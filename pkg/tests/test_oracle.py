import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fsosched.core import Contact, EpisodeResult, ValidationError
from fsosched.oracle import (KnapsackInstance, KnapsackItem, brute_force_optimal, expected_item,
                             instance_from_period, optimality_gap, soft_knapsack_objective, weighted_objective)
from fsosched.static import run_cgr
from helpers import make_period


def _inst(pairs, W, beta=1.0, upsilon=1.0):
    return KnapsackInstance(tuple(KnapsackItem(cv, wt, i) for i, (cv, wt) in enumerate(pairs)), W, beta, upsilon)


def _exhaustive(inst):
    n = len(inst.items)
    return max(soft_knapsack_objective(m, inst) for m in itertools.product((0, 1), repeat=n))


def test_expected_item_perfect_contact():
    it = expected_item(Contact(0.0, 0.0, 10, 0))
    assert (it.wt, it.cv) == (10, 10)


def test_expected_item_overcast_contact():
    it = expected_item(Contact(1.0, 1.0, 10, 0))
    assert (it.wt, it.cv) == (0, -10)


def test_expected_item_partial_cover():
    v, cc, beta, ups = 10, 0.3, 1.0, 0.5
    wt = v * (1 - cc)
    cv = beta * wt - ups * (v - wt)
    it = expected_item(Contact(cc, cc, v, 0), beta=beta, upsilon=ups)
    assert it.wt == pytest.approx(wt) == pytest.approx(7)
    assert it.cv == pytest.approx(cv) == pytest.approx(5.5)


def test_expected_item_can_read_forecast():
    assert expected_item(Contact(0.0, 1.0, 10, 0), use_forecast=True).wt == 0


def test_objective_empty_selection():
    assert soft_knapsack_objective([0, 0], _inst([(10, 10), (5.5, 7)], 10)) == 0


def test_objective_at_exact_capacity():
    assert soft_knapsack_objective([1], _inst([(10, 10)], 10)) == 10


def test_objective_overweight_penalty():
    inst = _inst([(10, 10), (5.5, 7)], 10)
    expected = (10 + 5.5) - (1 + 1) * max(0, 17 - 10)
    assert soft_knapsack_objective([1, 1], inst) == pytest.approx(expected) == pytest.approx(1.5)


def test_objective_mask_length_checked():
    with pytest.raises(ValidationError):
        soft_knapsack_objective([1], _inst([(1, 1), (1, 1)], 5))


def test_brute_force_all_negative_is_empty():
    assert brute_force_optimal(_inst([(-1, 1), (-2, 0), (-0.5, 3)], 10)) == ((0, 0, 0), 0.0)


def test_brute_force_dominant_singleton():
    mask, val = brute_force_optimal(_inst([(1, 9), (20, 10), (2, 9)], 10))
    assert mask == (0, 1, 0) and val == 20


def test_brute_force_ties_take_lexicographically_smallest():
    mask, _ = brute_force_optimal(_inst([(5, 10), (5, 10)], 10))
    assert mask == (0, 1)


def test_brute_force_empty_instance():
    assert brute_force_optimal(_inst([], 10)) == ((), 0.0)


def test_brute_force_guard():
    with pytest.raises(ValidationError):
        brute_force_optimal(_inst([(1, 1)] * 25, 10))


def test_chunked_enumeration_matches_direct_on_larger_instance():
    rng = np.random.default_rng(4)
    pairs = list(zip(rng.normal(3, 4, 17), rng.uniform(0, 10, 17)))
    inst = _inst(pairs, 40)
    mask, val = brute_force_optimal(inst)
    assert soft_knapsack_objective(mask, inst) == pytest.approx(val)
    # every single-bit flip of the optimum is no better
    for i in range(17):
        flipped = list(mask)
        flipped[i] ^= 1
        assert soft_knapsack_objective(flipped, inst) <= val + 1e-9


@given(st.lists(st.tuples(st.floats(-20, 20), st.floats(0, 15)), min_size=0, max_size=10), st.floats(0, 80))
def test_brute_force_matches_exhaustive(pairs, W):
    inst = _inst(pairs, W)
    _, val = brute_force_optimal(inst)
    assert val == pytest.approx(_exhaustive(inst), abs=1e-9)


def test_greedy_ratio_never_beats_oracle():
    rng = np.random.default_rng(11)
    for _ in range(100):
        cc = rng.random(10)
        inst = instance_from_period(make_period(cc, dv_init=int(rng.integers(5, 101))))
        order = sorted(range(10), key=lambda i: -inst.items[i].cv / max(inst.items[i].wt, 1e-12))
        mask, load = [0] * 10, 0.0
        for i in order:
            if inst.items[i].cv > 0 and load + inst.items[i].wt <= inst.W:
                mask[i] = 1
                load += inst.items[i].wt
        assert soft_knapsack_objective(mask, inst) <= brute_force_optimal(inst)[1] + 1e-9


@given(st.lists(st.tuples(st.floats(-20, 20), st.floats(0, 15)), min_size=1, max_size=8), st.floats(0, 60),
       st.floats(0.1, 10))
def test_scale_covariance(pairs, W, lam):
    base = _inst(pairs, W)
    scaled = _inst([(lam * cv, wt) for cv, wt in pairs], W, beta=lam, upsilon=lam)
    m1, v1 = brute_force_optimal(base)
    m2, v2 = brute_force_optimal(scaled)
    assert v2 == pytest.approx(lam * v1, rel=1e-9, abs=1e-9)
    assert soft_knapsack_objective(m1, scaled) == pytest.approx(v2, rel=1e-9, abs=1e-9)


@given(st.lists(st.tuples(st.floats(-20, 20), st.floats(0, 15)), min_size=1, max_size=8), st.floats(0, 60),
       st.data())
def test_penalty_zero_iff_within_capacity(pairs, W, data):
    inst = _inst(pairs, W)
    mask = data.draw(st.lists(st.integers(0, 1), min_size=len(pairs), max_size=len(pairs)))
    x = np.array(mask, float)
    penalty = float(x @ inst.cv) - soft_knapsack_objective(mask, inst)
    load = float(x @ inst.wt)
    if load <= W:
        assert penalty == pytest.approx(0.0, abs=1e-9)
    else:
        assert penalty == pytest.approx(2.0 * (load - W), abs=1e-9)
        assert penalty > 0


def test_weighted_objective_examples():
    p = make_period([0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], dv_init=70)
    r = EpisodeResult.from_run(p, [1, 1, 1, 1, 1, 1, 1], [10, 10, 10, 10, 10, 0, 0], [0, 0, 0, 0, 0, 10, 10], 0)
    assert weighted_objective(r, 1.0) == 50
    assert weighted_objective(r, 0.0) == -20
    assert weighted_objective(r, 0.5) == 0.5 * 50 - 0.5 * 20 == 15
    with pytest.raises(ValidationError):
        weighted_objective(r, 1.5)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=10), st.integers(0, 100), st.integers(0, 2**32))
def test_cgr_weighted_objective_is_delivered_volume(cc, dv, seed):
    r = run_cgr(make_period(cc, dv_init=dv), seed)
    assert weighted_objective(r, 1.0) == pytest.approx(r.dv_init * r.delivery_ratio)


def test_optimality_gap_nonnegative():
    inst = instance_from_period(make_period([0.1, 0.5, 0.9, 0.2], dv_init=15))
    for m in itertools.product((0, 1), repeat=4):
        assert optimality_gap(m, inst) >= -1e-12


def test_instance_validation():
    with pytest.raises(ValidationError):
        KnapsackItem(1.0, -1.0, 0)
    with pytest.raises(ValidationError):
        KnapsackInstance((), 1.0, beta=-1)
    with pytest.raises(ValidationError):
        KnapsackInstance((), 1.0, w_objective=2)
