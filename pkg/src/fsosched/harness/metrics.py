"""Per-episode metrics and the quartile summary used in result tables."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..core import EpisodeResult, ValidationError

METRICS = ("delivery_ratio", "mean_contact_efficiency", "total_excess_energy", "weighted_objective",
           "optimality_gap")


def delivery_ratio(result: EpisodeResult) -> float:
    """Delivered packets over the initial buffer; an empty buffer counts as fully delivered."""
    if result.dv_init == 0:
        return 1.0
    d = math.fsum(di for x, di in zip(result.decisions, result.delivered_per_contact) if x)
    return min(1.0, d / result.dv_init)


def total_excess_energy(result: EpisodeResult) -> float:
    return math.fsum(ei for x, ei in zip(result.decisions, result.excess_per_contact) if x)


def mean_contact_efficiency(result: EpisodeResult) -> float:
    """Mean of d/v over the contacts that were used; 1 when none were."""
    ratios = [d / v if v > 0 else 1.0
              for x, d, v in zip(result.decisions, result.delivered_per_contact, result.volumes) if x]
    return float(np.mean(ratios)) if ratios else 1.0


@dataclass(frozen=True)
class StatsRow:
    scheme: str
    metric: str
    mean: float
    median: float
    uq: float
    lq: float
    sd: float
    n: int

    def __post_init__(self):
        if not self.lq <= self.median <= self.uq:
            raise ValidationError(f"quartiles out of order for {self.scheme}/{self.metric}")


def describe(values: Sequence[float], scheme: str = "", metric: str = "") -> StatsRow:
    """Mean, type-7 quartiles and sample sd (0 for a single value)."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise ValidationError("cannot summarise an empty sample")
    lq, med, uq = np.percentile(x, [25, 50, 75])
    sd = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    # Interpolation can disagree with the ordering in the last ulp on constant data.
    med = float(min(max(med, lq), uq))
    return StatsRow(scheme=scheme, metric=metric, mean=float(np.mean(x)), median=med, uq=float(uq),
                    lq=float(lq), sd=sd, n=int(x.size))


def summarize(rows: Iterable[Mapping], metrics: Sequence[str] = METRICS) -> list[StatsRow]:
    """One StatsRow per (scheme, metric) over per-episode records.

    Records are mappings with a ``scheme`` key and one key per metric.
    Missing or NaN metric values are skipped, so a metric that was never
    computed produces no row.
    """
    rows = list(rows)
    if not rows:
        raise ValidationError("no rows to summarise")
    schemes = list(dict.fromkeys(r["scheme"] for r in rows))
    out = []
    for scheme in schemes:
        mine = [r for r in rows if r["scheme"] == scheme]
        for metric in metrics:
            vals = [r[metric] for r in mine if r.get(metric) is not None and not math.isnan(r[metric])]
            if vals:
                out.append(describe(vals, scheme, metric))
    return out
