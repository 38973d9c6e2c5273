"""Static downlink schemes: CGR baseline, threshold rules, sorting planner.

Every rule here looks only at the forecast cloud cover. The true value is
used by the channel when a contact is actually attempted.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .channel import attempt_contact
from .core import DownlinkPeriod, EpisodeResult, ValidationError, channel_rng

log = logging.getLogger(__name__)

BUDGET_RULES = ("literal", "expected_delivery")

# Threshold tables tuned for the general simulations and for the case study.
GENERAL_SINGLE_T = 0.9
GENERAL_MULTI = ((0.2, 0.1), (0.4, 0.4), (0.6, 0.8), (0.8, 0.8), (1.0, 0.8))
CASE_STUDY_SINGLE_T = 0.94
CASE_STUDY_MULTI = ((0.2, 0.78), (0.4, 0.92), (0.6, 0.99), (0.8, 0.99), (1.0, 0.99))


@dataclass(frozen=True)
class ThresholdConfig:
    """Pairs of (upper bound of dv_remaining/V, cloud-cover threshold)."""

    thresholds: tuple[tuple[float, float], ...]

    def __post_init__(self):
        rows = tuple((float(u), float(t)) for u, t in self.thresholds)
        object.__setattr__(self, "thresholds", rows)
        if not rows:
            raise ValidationError("threshold config needs at least one row")
        uppers = [u for u, _ in rows]
        if any(b <= a for a, b in zip(uppers, uppers[1:])):
            raise ValidationError("range upper bounds must be strictly increasing")
        if abs(uppers[-1] - 1.0) > 1e-12:
            raise ValidationError("last range upper bound must be 1.0")
        if any(not 0.0 <= t <= 1.0 for _, t in rows):
            raise ValidationError("thresholds must lie in [0, 1]")

    @classmethod
    def single(cls, T: float) -> "ThresholdConfig":
        return cls(((1.0, T),))

    def threshold_for(self, dv_fraction: float) -> float:
        for upper, T in self.thresholds:
            if dv_fraction <= upper:
                return T
        return self.thresholds[-1][1]


@dataclass(frozen=True)
class TuningParams:
    nTe: int = 500
    Tgr: float = 0.05
    nTv: int = 20
    DRtol: float = 0.02

    def __post_init__(self):
        if self.nTe < 1 or self.nTv < 1:
            raise ValidationError("nTe and nTv must be positive")
        if not 0.0 < self.Tgr <= 1.0:
            raise ValidationError("Tgr must lie in (0, 1]")
        if not 0.0 <= self.DRtol < 1.0:
            raise ValidationError("DRtol must lie in [0, 1)")


@dataclass
class EpisodeState:
    """Mutable per-episode bookkeeping visible to per-contact deciders."""

    dv_init: float
    total_volume: int
    delivered: float = 0.0
    energy: float = 0.0

    @property
    def dv_remaining(self) -> float:
        return max(0.0, self.dv_init - self.delivered)


# -- per-contact rules -----------------------------------------------------

def cgr_decide(delivered_so_far: float, dv_init: float) -> int:
    return int(delivered_so_far < dv_init)


def threshold_decide(forecast_cc: float, T: float, delivered_so_far: float, dv_init: float) -> int:
    return int(forecast_cc <= T and delivered_so_far < dv_init)


def multi_threshold_decide(forecast_cc: float, dv_remaining: float, V: float, config: ThresholdConfig,
                           delivered_so_far: float, dv_init: float) -> int:
    if dv_remaining <= 0 or V <= 0:
        return 0
    T = config.threshold_for(dv_remaining / V)
    return threshold_decide(forecast_cc, T, delivered_so_far, dv_init)


Decider = Callable[[object, EpisodeState], int]


def cgr_decider() -> Decider:
    return lambda contact, st: cgr_decide(st.delivered, st.dv_init)


def threshold_decider(T: float) -> Decider:
    return lambda contact, st: threshold_decide(contact.forecast_cloud_cover, T, st.delivered, st.dv_init)


def multi_threshold_decider(config: ThresholdConfig) -> Decider:
    def decide(contact, st):
        return multi_threshold_decide(contact.forecast_cloud_cover, st.dv_remaining, st.total_volume,
                                      config, st.delivered, st.dv_init)
    return decide


# -- sorting planner -------------------------------------------------------

def sort_order(forecasts: Sequence[float], indices: Sequence[int] | None = None) -> list[int]:
    """Indices ordered by ascending forecast cloud cover, ties by index."""
    if indices is None:
        indices = range(len(forecasts))
    return sorted(indices, key=lambda i: (forecasts[i], i))


def budget_cost(volume: float, cc: float, rule: str, inner: bool = False) -> float:
    """Amount taken off the remaining budget when a contact is selected.

    ``literal`` subtracts the expected lost volume v*cc in the initial
    plan and the full volume v when re-planning; ``expected_delivery``
    subtracts the expected delivered volume v*(1-cc) in both places.
    """
    if rule == "literal":
        return volume if inner else volume * cc
    if rule == "expected_delivery":
        return volume * (1.0 - cc)
    raise ValidationError(f"unknown sort budget rule {rule!r}; expected one of {BUDGET_RULES}")


def static_sort_plan(dv_init: float, forecasts: Sequence[float], volumes: Sequence[float], tau: float,
                     rule: str = "literal") -> list[int]:
    if tau <= 0:
        raise ValidationError("tau must be positive")
    mask = [0] * len(forecasts)
    budget = dv_init * tau
    for i in sort_order(forecasts):
        if budget > 0 and forecasts[i] < 1.0:
            mask[i] = 1
            budget -= budget_cost(volumes[i], forecasts[i], rule)
    return mask


# -- temporal execution ----------------------------------------------------

def run_static_scheme(decider: Union[Decider, Sequence[int]], period: DownlinkPeriod, seed: int,
                      scheme: str = "") -> EpisodeResult:
    """Walk the contacts in time order and attempt the ones the scheme selects.

    ``decider`` is either a per-contact rule evaluated on the live state or a
    precomputed decision mask. A mask is executed as given, so contacts that
    are selected after the buffer has emptied still cost their full volume.
    """
    n = period.n_contacts
    mask = None if callable(decider) else list(decider)
    if mask is not None and len(mask) != n:
        raise ValidationError(f"mask length {len(mask)} != {n} contacts")
    st = EpisodeState(dv_init=period.dv_init, total_volume=period.total_volume)
    decisions = [0] * n
    delivered = [0.0] * n
    excess = [0.0] * n
    for i, contact in enumerate(period.contacts):
        x = mask[i] if mask is not None else decider(contact, st)
        if not x:
            continue
        out = attempt_contact(contact, st.dv_remaining, period, channel_rng(seed, contact.index))
        decisions[i] = 1
        delivered[i] = out.delivered
        excess[i] = out.excess_energy
        st.delivered += out.delivered
        st.energy += out.excess_energy
    return EpisodeResult.from_run(period, decisions, delivered, excess, seed, scheme=scheme)


def run_cgr(period: DownlinkPeriod, seed: int) -> EpisodeResult:
    return run_static_scheme(cgr_decider(), period, seed, scheme="cgr")


def run_threshold(period: DownlinkPeriod, seed: int, T: float) -> EpisodeResult:
    return run_static_scheme(threshold_decider(T), period, seed, scheme="threshold")


def run_multi_threshold(period: DownlinkPeriod, seed: int, config: ThresholdConfig) -> EpisodeResult:
    return run_static_scheme(multi_threshold_decider(config), period, seed, scheme="multi_threshold")


def run_static_sort(period: DownlinkPeriod, seed: int, tau: float = 1.0,
                    rule: str = "literal") -> EpisodeResult:
    mask = static_sort_plan(period.dv_init, period.forecasts, period.volumes, tau, rule)
    return run_static_scheme(mask, period, seed, scheme="static_sort")


# -- threshold tuning ------------------------------------------------------

@dataclass
class TuningResult:
    T: float
    degenerate: bool = False
    history: list[tuple[float, float]] = field(default_factory=list)


def tune_threshold(make_period: Callable[[int], DownlinkPeriod], params: TuningParams,
                   seeds: Sequence[int]) -> TuningResult:
    """Lower the threshold from 1.0 until the delivery ratio falls too far.

    ``make_period(seed)`` builds the scenario for one test episode and
    ``seeds`` must hold at least ``params.nTe`` episode seeds; the same
    episodes are reused at every threshold so the comparison is paired.
    Returns the lowest threshold whose mean delivery ratio stayed within
    ``DRtol`` of the CGR baseline.
    """
    seeds = list(seeds)[: params.nTe]
    if len(seeds) < params.nTe:
        raise ValidationError(f"need {params.nTe} seeds, got {len(seeds)}")
    periods = [make_period(s) for s in seeds]
    baseline = np.mean([run_cgr(p, s).delivery_ratio for p, s in zip(periods, seeds)])
    if baseline <= 0:
        warnings.warn("baseline delivers nothing; threshold tuning is degenerate", RuntimeWarning)
        return TuningResult(T=1.0, degenerate=True)
    T = 1.0
    last_pass = 1.0
    history = []
    for _ in range(params.nTv):
        if T < -1e-12:
            break
        tsr = np.mean([run_threshold(p, s, T).delivery_ratio for p, s in zip(periods, seeds)])
        ratio = tsr / baseline
        history.append((round(T, 12), float(ratio)))
        log.debug("T=%.3f ratio=%.4f", T, ratio)
        if ratio > 1.0 - params.DRtol:
            last_pass = T
            T = round(T - params.Tgr, 12)
        else:
            break
    return TuningResult(T=min(1.0, max(0.0, last_pass)), history=history)
