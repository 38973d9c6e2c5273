import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from fsosched.channel import attempt_contact, sample_link_availability, transfer
from fsosched.core import channel_rng
from helpers import make_period


def test_clear_sky_every_sample_available():
    assert sample_link_availability(0.0, 10, 1, np.random.default_rng(0)) == 10


def test_overcast_no_sample_available():
    assert sample_link_availability(1.0, 10, 1, np.random.default_rng(0)) == 0


def test_zero_volume_has_no_samples():
    assert sample_link_availability(0.3, 0, 4, np.random.default_rng(0)) == 0


def test_availability_mean_matches_binomial():
    cc, v = 0.3, 100
    mean, sd = v * (1 - cc), math.sqrt(v * cc * (1 - cc))
    n = 10_000
    draws = [sample_link_availability(cc, v, 1, np.random.default_rng([s, 1])) for s in range(n)]
    assert abs(np.mean(draws) - mean) < 3 * sd / math.sqrt(n)


@pytest.mark.parametrize("cc", [0.1, 0.5, 0.9])
def test_availability_chi_square(cc):
    v, n = 10, 20_000
    rng = np.random.default_rng(int(cc * 1000))
    draws = np.array([sample_link_availability(cc, v, 1, rng) for _ in range(n)])
    expected = stats.binom.pmf(np.arange(v + 1), v, 1 - cc) * n
    observed = np.bincount(draws, minlength=v + 1)
    # pool sparse cells so every expected count is at least 5
    keep = expected >= 5
    obs = np.append(observed[keep], observed[~keep].sum())
    exp = np.append(expected[keep], expected[~keep].sum())
    if exp[-1] == 0:
        obs, exp = obs[:-1], exp[:-1]
    assert stats.chisquare(obs, exp * obs.sum() / exp.sum()).pvalue > 0.001


def test_transfer_full_availability():
    out = transfer(10, 100, 10, 1, 1.0)
    assert (out.delivered, out.excess_energy, out.dv_after) == (10, 0, 90)


def test_transfer_total_outage():
    out = transfer(0, 50, 10, 1, 1.0)
    assert (out.delivered, out.excess_energy, out.dv_after) == (0, 10, 50)


def test_transfer_partial_final_sample():
    # Per-sample loop by hand: three whole packets, then 0.5 flushed on the fourth sample.
    dv, d = 3.5, 0.0
    for _ in range(10):
        if dv >= 1.0:
            d, dv = d + 1.0, dv - 1.0
        elif dv > 0:
            d, dv = d + dv, 0.0
    expected = (d, 10 - d, dv)
    out = transfer(10, 3.5, 10, 1, 1.0)
    assert (out.delivered, out.excess_energy, out.dv_after) == expected == (3.5, 6.5, 0.0)


def test_transfer_rejects_bad_availability():
    with pytest.raises(ValueError):
        transfer(11, 5, 10, 1, 1.0)


def _loop_transfer(ca, dv, rate):
    d = 0.0
    for _ in range(ca):
        if dv >= rate:
            d += rate
            dv -= rate
        elif dv > 0:
            d += dv
            dv = 0.0
    return d, dv


@given(st.integers(0, 40), st.integers(1, 4), st.floats(0, 200, allow_nan=False), st.data())
def test_transfer_matches_per_sample_loop(volume, lr, dv, data):
    ca = data.draw(st.integers(0, volume * lr))
    rate = 1.0 / lr
    d_loop, dv_loop = _loop_transfer(ca, dv, rate)
    out = transfer(ca, dv, volume, lr, rate)
    assert out.delivered == pytest.approx(d_loop, abs=1e-9)
    assert out.dv_after == pytest.approx(dv_loop, abs=1e-9)
    assert out.delivered + out.excess_energy == pytest.approx(volume, abs=1e-9)
    assert 0 <= out.delivered <= min(dv, ca * rate) + 1e-12
    assert out.excess_energy >= 0 and out.dv_after >= 0


def test_attempt_contact_overcast_wastes_volume():
    p = make_period([1.0], dv_init=30)
    out = attempt_contact(p.contacts[0], 30, p, channel_rng(5, 0))
    assert (out.delivered, out.excess_energy) == (0, 10)


def test_attempt_contact_clear_sky_delivers_volume():
    p = make_period([0.0], dv_init=30)
    out = attempt_contact(p.contacts[0], 30, p, channel_rng(5, 0))
    assert (out.delivered, out.excess_energy) == (10, 0)


def test_attempt_contact_mean_delivery():
    cc, v = 0.5, 100
    mean, sd = v * (1 - cc), math.sqrt(v * cc * (1 - cc))
    p = make_period([cc], volumes=v, dv_init=1000)
    n = 10_000
    d = [attempt_contact(p.contacts[0], 1000, p, channel_rng(s, 0)).delivered for s in range(n)]
    assert abs(np.mean(d) - mean) < 3 * sd / math.sqrt(n)


def test_attempt_contact_uses_true_not_forecast_cover():
    p = make_period([1.0], forecasts=[0.0], dv_init=10)
    assert attempt_contact(p.contacts[0], 10, p, channel_rng(1, 0)).delivered == 0


@given(st.floats(0, 1), st.floats(0, 1), st.integers(0, 60), st.integers(0, 2**32))
def test_availability_monotone_in_cloud_cover(a, b, volume, seed):
    lo, hi = min(a, b), max(a, b)
    ca_lo = sample_link_availability(lo, volume, 1, np.random.default_rng(seed))
    ca_hi = sample_link_availability(hi, volume, 1, np.random.default_rng(seed))
    assert ca_hi <= ca_lo
