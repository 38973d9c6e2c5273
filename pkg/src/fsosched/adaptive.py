"""Adaptive sorting: re-plan the remaining contacts after every transmission."""
from __future__ import annotations

from .channel import attempt_contact
from .core import DownlinkPeriod, EpisodeResult, ValidationError, channel_rng
from .static import budget_cost, sort_order, static_sort_plan


def replan(mask: list[int], start: int, dv_remaining: float, forecasts, volumes, tau: float,
           rule: str = "literal") -> list[int]:
    """Rebuild ``mask[start:]`` in place from the current buffer level.

    Entries before ``start`` are left untouched: past contacts cannot be
    revisited.
    """
    n = len(mask)
    for j in range(start, n):
        mask[j] = 0
    budget = dv_remaining * tau
    for j in sort_order(forecasts, range(start, n)):
        if budget > 0 and forecasts[j] < 1.0:
            mask[j] = 1
            budget -= budget_cost(volumes[j], forecasts[j], rule, inner=True)
    return mask


def adaptive_sort_run(period: DownlinkPeriod, seed: int, tau: float = 1.0,
                      rule: str = "literal") -> EpisodeResult:
    if tau <= 0:
        raise ValidationError("tau must be positive")
    forecasts = period.forecasts
    volumes = period.volumes
    mask = static_sort_plan(period.dv_init, forecasts, volumes, tau, rule)
    n = period.n_contacts
    dv = float(period.dv_init)
    decisions = [0] * n
    delivered = [0.0] * n
    excess = [0.0] * n
    replans = 0
    for i, contact in enumerate(period.contacts):
        if dv <= 0:
            break
        if not mask[i]:
            continue
        out = attempt_contact(contact, dv, period, channel_rng(seed, contact.index))
        decisions[i] = 1
        delivered[i] = out.delivered
        excess[i] = out.excess_energy
        dv = out.dv_after
        replan(mask, i + 1, dv, forecasts, volumes, tau, rule)
        replans += 1
    return EpisodeResult.from_run(period, decisions, delivered, excess, seed,
                                  scheme="adaptive_sort", replans=replans)
