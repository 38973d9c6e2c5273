"""Runtime scaling of each scheme's decision logic against the number of contacts.

Channel sampling is replaced by expected delivery v*(1-cc) so the timings
reflect only the per-contact decisions and any planning or re-planning.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..adaptive import replan
from ..core import ValidationError
from ..static import GENERAL_MULTI, GENERAL_SINGLE_T, ThresholdConfig, cgr_decide, multi_threshold_decide, \
    static_sort_plan, threshold_decide

BENCH_SCHEMES = ("cgr", "threshold", "multi_threshold", "static_sort", "adaptive_sort")
DEFAULT_GRID = (64, 128, 256, 512, 1024)


@dataclass(frozen=True)
class BenchRow:
    scheme: str
    n: int
    seconds: float
    selected: int


def _walk(forecasts, volumes, dv_init, decide) -> int:
    delivered = 0.0
    used = 0
    for i in range(len(forecasts)):
        if decide(i, delivered):
            used += 1
            delivered += volumes[i] * (1.0 - forecasts[i])
    return used


def _decision_logic(scheme: str) -> Callable[[Sequence[float], Sequence[float], float], int]:
    multi = ThresholdConfig(GENERAL_MULTI)

    def cgr(f, v, dv):
        return _walk(f, v, dv, lambda i, d: cgr_decide(d, dv))

    def threshold(f, v, dv):
        return _walk(f, v, dv, lambda i, d: threshold_decide(f[i], GENERAL_SINGLE_T, d, dv))

    def multi_threshold(f, v, dv):
        V = float(np.sum(v))
        return _walk(f, v, dv, lambda i, d: multi_threshold_decide(f[i], dv - d, V, multi, d, dv))

    def static_sort(f, v, dv):
        return sum(static_sort_plan(dv, f, v, 1.0, "expected_delivery"))

    def adaptive_sort(f, v, dv):
        mask = static_sort_plan(dv, f, v, 1.0, "expected_delivery")
        remaining = dv
        used = 0
        for i in range(len(f)):
            if remaining <= 0:
                break
            if mask[i]:
                used += 1
                remaining -= v[i] * (1.0 - f[i])
                replan(mask, i + 1, remaining, f, v, 1.0, "expected_delivery")
        return used

    table = {"cgr": cgr, "threshold": threshold, "multi_threshold": multi_threshold,
             "static_sort": static_sort, "adaptive_sort": adaptive_sort}
    if scheme not in table:
        raise ValidationError(f"unknown benchmark scheme {scheme!r}; expected one of {BENCH_SCHEMES}")
    return table[scheme]


def scaling_benchmark(schemes: Sequence[str] = BENCH_SCHEMES, grid: Sequence[int] = DEFAULT_GRID,
                      repetitions: int = 5, seed: int = 0) -> list[BenchRow]:
    """Best-of-``repetitions`` wall time per (scheme, N).

    The buffer equals the total expected delivery so every scheme keeps
    deciding until the last contact.
    """
    if repetitions < 1:
        raise ValidationError("repetitions must be >= 1")
    rng = np.random.default_rng(seed)
    rows = []
    for n in grid:
        if n < 0:
            raise ValidationError("contact counts must be non-negative")
        # Python floats keep per-element access cheap inside the decision loops.
        f = rng.random(n).tolist()
        v = [10.0] * n
        dv = sum(vi * (1.0 - fi) for vi, fi in zip(v, f))
        for scheme in schemes:
            fn = _decision_logic(scheme)
            best = float("inf")
            used = 0
            for _ in range(repetitions):
                t0 = time.perf_counter()
                used = fn(f, v, dv)
                best = min(best, time.perf_counter() - t0)
            rows.append(BenchRow(scheme, int(n), best, int(used)))
    return rows


def loglog_slopes(rows: Sequence[BenchRow]) -> dict[str, float]:
    """Least-squares slope of log(time) on log(N) per scheme, over N > 0."""
    out = {}
    for scheme in dict.fromkeys(r.scheme for r in rows):
        pts = [(r.n, r.seconds) for r in rows if r.scheme == scheme and r.n > 0 and r.seconds > 0]
        if len(pts) < 2:
            continue
        x, y = np.log([p[0] for p in pts]), np.log([p[1] for p in pts])
        out[scheme] = float(np.polyfit(x, y, 1)[0])
    return out
