"""Soft 0-1 knapsack view of a downlink period and an exhaustive optimum.

Items are contacts projected onto their expected delivery, so the optimum
is a reference under expectation, not a bound on any single realisation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Contact, DownlinkPeriod, EpisodeResult, ValidationError

MAX_BRUTE_FORCE_ITEMS = 24
_CHUNK = 1 << 16


@dataclass(frozen=True)
class KnapsackItem:
    cv: float
    wt: float
    index: int

    def __post_init__(self):
        if self.wt < 0:
            raise ValidationError("item weight must be non-negative")


@dataclass(frozen=True)
class KnapsackInstance:
    items: tuple[KnapsackItem, ...]
    W: float
    beta: float = 1.0
    upsilon: float = 1.0
    w_objective: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if self.beta < 0 or self.upsilon < 0:
            raise ValidationError("beta and upsilon must be non-negative")
        if not 0.0 <= self.w_objective <= 1.0:
            raise ValidationError("objective weight w must lie in [0, 1]")

    @property
    def cv(self) -> np.ndarray:
        return np.array([it.cv for it in self.items], dtype=float)

    @property
    def wt(self) -> np.ndarray:
        return np.array([it.wt for it in self.items], dtype=float)


def expected_item(contact: Contact, lr: int = 1, rate: float | None = None, beta: float = 1.0,
                  upsilon: float = 1.0, use_forecast: bool = False) -> KnapsackItem:
    """Project a contact onto expected availability E[CA] = v*lr*(1-cc)."""
    cc = contact.forecast_cloud_cover if use_forecast else contact.cloud_cover
    rate = 1.0 / lr if rate is None else rate
    wt = rate * contact.volume * lr * (1.0 - cc)
    exc = contact.volume - wt
    cv = beta * wt - upsilon * exc if wt > 0 else -upsilon * exc
    return KnapsackItem(cv=cv, wt=wt, index=contact.index)


def instance_from_period(period: DownlinkPeriod, beta: float = 1.0, upsilon: float = 1.0,
                         w_objective: float = 0.5, use_forecast: bool = False) -> KnapsackInstance:
    items = tuple(expected_item(c, period.link_sample_rate, period.data_rate_packets_per_sample, beta, upsilon,
                                use_forecast) for c in period.contacts)
    return KnapsackInstance(items=items, W=float(period.dv_init), beta=beta, upsilon=upsilon,
                            w_objective=w_objective)


def soft_knapsack_objective(mask: Sequence[int], instance: KnapsackInstance) -> float:
    x = np.asarray(mask, dtype=float)
    if x.shape != (len(instance.items),):
        raise ValidationError(f"mask length {len(x)} != {len(instance.items)} items")
    overweight = float(x @ instance.wt) - instance.W
    return float(x @ instance.cv) - (instance.beta + instance.upsilon) * max(0.0, overweight)


def _masks(start: int, stop: int, n: int) -> np.ndarray:
    # item 0 is the most significant bit, so integer order == lexicographic order
    codes = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((codes[:, None] >> shifts) & 1).astype(float)


def brute_force_optimal(instance: KnapsackInstance) -> tuple[tuple[int, ...], float]:
    """Exhaustive search over all 2^N masks. Ties go to the lexicographically smallest mask."""
    n = len(instance.items)
    if n > MAX_BRUTE_FORCE_ITEMS:
        raise ValidationError(f"{n} items exceeds the brute-force limit of {MAX_BRUTE_FORCE_ITEMS}")
    cv, wt = instance.cv, instance.wt
    penalty = instance.beta + instance.upsilon
    best_val = -np.inf
    best_code = 0
    total = 1 << n
    for start in range(0, total, _CHUNK):
        stop = min(total, start + _CHUNK)
        X = _masks(start, stop, n)
        vals = X @ cv - penalty * np.maximum(0.0, X @ wt - instance.W)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val = float(vals[k])
            best_code = start + k
    mask = tuple(int(b) for b in format(best_code, f"0{n}b")) if n else ()
    return mask, (best_val if n else 0.0)


def weighted_objective(result: EpisodeResult, w: float) -> float:
    """Realised trade-off between delivered packets and excess energy."""
    if not 0.0 <= w <= 1.0:
        raise ValidationError("objective weight w must lie in [0, 1]")
    d = sum(di for x, di in zip(result.decisions, result.delivered_per_contact) if x)
    e = sum(ei for x, ei in zip(result.decisions, result.excess_per_contact) if x)
    return w * d - (1.0 - w) * e


def optimality_gap(mask: Sequence[int], instance: KnapsackInstance) -> float:
    _, best = brute_force_optimal(instance)
    return best - soft_knapsack_objective(mask, instance)
