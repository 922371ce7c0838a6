import itertools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from profitbandit.core import Action, NormalizedLoss
from profitbandit.policy_baseline import (
    CombinatorialBlowupError,
    JointExp3,
    fixed_policy,
    joint_init,
    uniform_policy,
)


def losses(*values):
    arr = np.array(values, dtype=float)
    return NormalizedLoss(per_market=arr, total=float(arr.sum()))


def test_four_arms_uniform():
    pol = joint_init(1, 1, 0.1)
    assert pol.n_arms == 4
    np.testing.assert_allclose(pol.probs, 0.25)


def test_arm_count():
    assert joint_init(3, 9, 0.1).n_arms == 10**4


def test_blowup():
    with pytest.raises(CombinatorialBlowupError, match="10000000"):
        joint_init(6, 9, 0.1)


@given(st.integers(1, 3), st.integers(1, 5), st.data())
def test_index_tuple_round_trip(n, K, data):
    pol = JointExp3(n, K, 0.1)
    arm = data.draw(st.integers(0, pol.n_arms - 1))
    costs, price = pol.tuple_of(arm)
    assert pol.index_of(costs, price) == arm
    # price is the lowest digit
    assert price == arm % (K + 1)


def test_bijection_small():
    pol = JointExp3(2, 2, 0.1)
    seen = {pol.tuple_of(a) for a in range(pol.n_arms)}
    assert seen == {(cs, p) for cs in itertools.product(range(3), repeat=2) for p in range(3)}


def test_zero_loss_unchanged():
    pol = joint_init(1, 1, 0.1)
    pol.update(2, losses(0.0))
    np.testing.assert_allclose(pol.probs, 0.25)


def test_unit_loss_update():
    pol = joint_init(1, 1, 0.1)
    before = pol.logweights.copy()
    pol.update(1, losses(1.0))
    delta = pol.logweights - before
    # arm 1 loses 0.1 / 0.25 = 0.4 relative to the rest
    others = np.delete(delta, 1)
    assert np.ptp(others) < 1e-15
    assert others[0] - delta[1] == pytest.approx(0.4)


def test_loss_divided_by_n():
    pol = joint_init(2, 1, 0.1)
    before = pol.logweights.copy()
    pol.update(3, losses(1.0, 1.0))
    delta = pol.logweights - before
    assert np.delete(delta, 3)[0] - delta[3] == pytest.approx(0.1 * 1.0 / (1 / 8))


def test_bad_arm_vanishes():
    pol = joint_init(1, 1, 0.05)
    rng = np.random.default_rng(0)
    for _ in range(10000):
        pol.sample_action(rng)
        loss = 0.9 if pol.last == 0 else 0.1
        pol.update(pol.last, losses(loss))
    assert pol.probs[0] < 1e-3
    assert abs(pol.probs.sum() - 1) < 1e-9


def test_samples_on_grid():
    pol = joint_init(2, 3, 0.1)
    rng = np.random.default_rng(1)
    grid = set(np.arange(4) / 3)
    for _ in range(100):
        act = pol.sample_action(rng)
        assert act.price in grid and set(act.costs) <= grid


def test_checkpoint():
    pol = joint_init(2, 2, 0.1)
    rng = np.random.default_rng(2)
    for _ in range(30):
        pol.sample_action(rng)
        pol.update(pol.last, losses(*rng.random(2)))
    back = JointExp3.from_dict(json.loads(json.dumps(pol.to_dict())))
    np.testing.assert_allclose(back.probs, pol.probs, atol=1e-15)


def test_fixed():
    act = Action(costs=np.array([0.2]), price=0.5)
    pol = fixed_policy(act)
    rng = np.random.default_rng(0)
    assert all(pol.sample_action(rng) is act for _ in range(10))


def test_uniform_mean_price():
    pol = uniform_policy(2)
    rng = np.random.default_rng(3)
    prices = [pol.sample_action(rng).price for _ in range(10000)]
    assert abs(np.mean(prices) - 0.5) < 0.01


def test_uniform_replay():
    pol1, pol2 = uniform_policy(3), uniform_policy(3)
    r1, r2 = np.random.default_rng(9), np.random.default_rng(9)
    s1 = [pol1.sample_action(r1) for _ in range(50)]
    s2 = [pol2.sample_action(r2) for _ in range(50)]
    assert all(x.price == y.price and np.array_equal(x.costs, y.costs) for x, y in zip(s1, s2))
