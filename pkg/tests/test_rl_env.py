import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fsosched.core import ValidationError
from fsosched.rl.env import DownlinkEnv, RewardParams, step_reward, terminal_reward
from helpers import make_period

unit = st.floats(0, 1, allow_nan=False)


def test_step_reward_perfect_contact():
    assert step_reward(10, 0, 10, 1, 100, 100) == 10


def test_step_reward_partial_contact():
    d, e, v, dv0, c = 5, 5, 10, 100, 100
    f1 = c / dv0 * d
    f2 = c / dv0 * d * e / (e + v)
    assert step_reward(d, e, v, 1, dv0, c) == pytest.approx(f1 - f2) == pytest.approx(10 / 3)


def test_step_reward_wasted_contact_is_penalised():
    e, dv0, c = 10, 100, 100
    assert step_reward(0, e, 10, 1, dv0, c) == -(e * c / (2 * dv0)) == -5


def test_step_reward_skip_is_zero():
    assert step_reward(0, 0, 10, 0, 100, 100) == 0


def test_step_reward_empty_buffer_convention():
    assert step_reward(0, 10, 10, 1, 0, 100) == 0


@pytest.mark.parametrize("dr,ct,expected", [(0.5, 0.3, 50), (1.0, 0.5, 2 * 100 * 1 / 0.5), (1.0, 1.0, 200)])
def test_terminal_reward(dr, ct, expected):
    assert terminal_reward(dr, ct, 100) == pytest.approx(expected)


def test_terminal_reward_empty_buffer():
    assert terminal_reward(1.0, 0.0, 100, dv_init=0) == 100


def test_reward_params_validation():
    with pytest.raises(ValidationError):
        RewardParams(c=0)


@given(st.floats(0, 50), st.floats(0, 50), st.floats(1, 1000), st.floats(0.1, 500))
def test_efficiency_term_never_exceeds_delivery_term(d, e, dv0, c):
    v = d + e
    f1 = c / dv0 * d
    f2 = c / dv0 * d * e / (e + v) if v > 0 else 0.0
    assert f2 <= f1
    if d > 0:
        assert step_reward(d, e, v, 1, dv0, c) == pytest.approx(f1 - f2)


@given(st.integers(0, 1), st.integers(0, 30), st.data(), st.floats(1, 200), st.floats(0.1, 500))
def test_reward_sign(action, v, data, dv0, c):
    d = data.draw(st.floats(0, v)) if v else 0.0
    e = v - d
    r = step_reward(d, e, v, action, dv0, c)
    assert (r < 0) == (action == 1 and d == 0 and e > 0)
    assert (r > 0) == (action == 1 and d > 0)


def test_reset_with_empty_buffer_is_terminal():
    env = DownlinkEnv(RewardParams(c=100))
    env.reset(make_period([0.2, 0.4], dv_init=0), 1)
    assert env.done
    assert env.episode_return == 100
    assert env.result().delivery_ratio == 1.0
    with pytest.raises(RuntimeError):
        env.step(1)


def test_fresh_observation():
    p = make_period([0.3, 0.6, 0.9], volumes=[10, 20, 10], dv_init=20)
    obs = DownlinkEnv().reset(p, 1)
    assert obs.cvr == 1.0 and obs.dv == 1.0 and obs.cc_next == 0.3
    assert np.array_equal(obs.sgc, [[0.3, 0.25], [0.6, 0.5], [0.9, 0.25]])
    assert obs.vector().shape == (3 + 2 * 3,)


def test_skip_advances_one_contact():
    env = DownlinkEnv()
    env.reset(make_period([0.3, 0.6, 0.9], dv_init=20), 1)
    obs, r, done = env.step(0)
    assert (r, done) == (0.0, False)
    assert obs.cc_next == 0.6 and obs.cvr == pytest.approx(2 / 3)
    assert obs.sgc[0, 0] == 1.0


def test_overcast_contact_penalty_in_env():
    env = DownlinkEnv(RewardParams(c=100))
    env.reset(make_period([1.0, 0.0], dv_init=100), 1)
    _, r, done = env.step(1)
    assert (r, done) == (-5.0, False)


def test_last_contact_includes_terminal_reward():
    env = DownlinkEnv(RewardParams(c=100))
    env.reset(make_period([0.0, 0.0], dv_init=20), 1)
    env.step(0)
    _, r, done = env.step(1)
    assert done
    # DR = 0.5, so terminal = c * DR
    assert r == pytest.approx(step_reward(10, 0, 10, 1, 20, 100) + 50)


def test_episode_ends_when_buffer_empties():
    env = DownlinkEnv(RewardParams(c=100))
    env.reset(make_period([0.0] * 4, dv_init=10), 1)
    _, r, done = env.step(1)
    assert done
    # (c / dv_init) * d for the step, then full delivery using a quarter of V
    assert r == pytest.approx(100 / 10 * 10 + 2 * 100 * 1.0 / 0.25)


@given(st.lists(unit, min_size=1, max_size=10), st.integers(0, 100), st.integers(0, 2**32), st.data())
def test_return_composition(cc, dv0, seed, data):
    p = make_period(cc, dv_init=dv0)
    env = DownlinkEnv(RewardParams(c=100))
    obs = env.reset(p, seed)
    rewards, steps = [], 0
    while not env.done:
        comps = np.concatenate(([obs.cc_next, obs.dv, obs.cvr], obs.sgc.ravel()))
        assert np.all((comps >= 0) & (comps <= 1))
        a = data.draw(st.integers(0, 1))
        obs, r, _ = env.step(a)
        rewards.append(r)
        steps += 1
    assert steps <= len(cc)
    res = env.result()
    # independent recomputation of every component
    sr = [step_reward(d, e, v, x, dv0, 100)
          for x, d, e, v in zip(res.decisions, res.delivered_per_contact, res.excess_per_contact, res.volumes)]
    used = sum(v for x, v in zip(res.decisions, res.volumes) if x)
    er = terminal_reward(res.delivery_ratio, used / sum(res.volumes), 100, dv0) if dv0 else 100
    assert env.episode_return == pytest.approx(math.fsum(sr) + er)
    if steps:
        assert math.fsum(rewards) == pytest.approx(env.episode_return)
