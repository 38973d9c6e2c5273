import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fsosched.core import EpisodeResult, ValidationError
from fsosched.harness.bench import loglog_slopes, scaling_benchmark
from fsosched.harness.experiment import RAW_HEADER, SUMMARY_HEADER, ExperimentConfig, SchemeSpec, \
    check_energy_identity, raw_csv_text, run_batch, write_outputs
from fsosched.harness.metrics import StatsRow, delivery_ratio, describe, mean_contact_efficiency, summarize, \
    total_excess_energy
from fsosched.scenarios.generators import ScenarioConfig


def _result(decisions, delivered, excess, volumes, dv_init):
    # stored summary fields are placeholders; the metric functions recompute from the per-contact data
    return EpisodeResult(decisions=tuple(decisions), delivered_per_contact=tuple(delivered),
                         excess_per_contact=tuple(excess), volumes=tuple(volumes), dv_init=dv_init,
                         dv_remaining=0.0, delivery_ratio=0.0, total_excess_energy=0.0,
                         mean_contact_efficiency=0.0, seed=0)


# ---- metrics ----

def test_metrics_on_hand_example():
    r = _result([1, 0, 1], [6, 0, 4], [4, 0, 6], [10, 10, 10], 20)
    assert delivery_ratio(r) == 0.5
    assert total_excess_energy(r) == 10
    assert mean_contact_efficiency(r) == pytest.approx((0.6 + 0.4) / 2)


def test_metric_edge_cases():
    idle = _result([0, 0], [0, 0], [0, 0], [10, 10], 5)
    assert delivery_ratio(idle) == 0 and total_excess_energy(idle) == 0
    assert mean_contact_efficiency(idle) == 1.0
    assert delivery_ratio(_result([0], [0], [0], [10], 0)) == 1.0


def test_describe_known_values():
    s = describe([1, 2, 3, 4])
    assert (s.lq, s.median, s.uq) == (1.75, 2.5, 3.25)
    assert s.mean == 2.5 and s.sd == pytest.approx(math.sqrt(5 / 3)) and s.n == 4


def test_describe_constant_and_single():
    c = describe([0.3] * 7)
    assert c.lq == c.median == c.uq and c.sd == pytest.approx(0.0, abs=1e-15)
    one = describe([2.0])
    assert (one.mean, one.median, one.sd, one.n) == (2.0, 2.0, 0.0, 1)
    with pytest.raises(ValidationError):
        describe([])


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=60))
def test_describe_quartiles_ordered(xs):
    s = describe(xs)
    assert s.lq <= s.median <= s.uq


def test_stats_row_rejects_disordered_quartiles():
    with pytest.raises(ValidationError):
        StatsRow("a", "m", 0.0, 1.0, 0.5, 0.0, 0.0, 3)


def test_summarize_groups_and_skips_missing():
    rows = [{"scheme": "a", "delivery_ratio": 1.0, "optimality_gap": None},
            {"scheme": "a", "delivery_ratio": 0.5, "optimality_gap": float("nan")},
            {"scheme": "b", "delivery_ratio": 0.0, "optimality_gap": 2.0}]
    out = {(s.scheme, s.metric): s for s in summarize(rows, ("delivery_ratio", "optimality_gap"))}
    assert set(out) == {("a", "delivery_ratio"), ("b", "delivery_ratio"), ("b", "optimality_gap")}
    assert out["a", "delivery_ratio"].mean == 0.75


def test_energy_identity_check():
    check_energy_identity(_result([1], [3], [7], [10], 5))
    with pytest.raises(RuntimeError):
        check_energy_identity(_result([1], [3], [6], [10], 5))


# ---- batch runs ----

def _cfg(**kw):
    base = dict(scenario=ScenarioConfig(), schemes=(SchemeSpec("cgr"), SchemeSpec("threshold", params=(("T", 0.8),))),
                trials=20, sets=2, master_seed=11)
    base.update(kw)
    return ExperimentConfig(**base)


def test_clear_sky_cgr_delivers_everything_for_free():
    sc = ScenarioConfig(kind="variable", dv_fraction=0.5, cc_mean=0.0, cc_sd=0.0)
    rows = run_batch(_cfg(scenario=sc, schemes=(SchemeSpec("cgr"),)))
    assert all(r["delivery_ratio"] == 1.0 and r["total_excess_energy"] == 0.0 for r in rows)


def test_row_count_and_order():
    cfg = _cfg()
    rows = run_batch(cfg)
    assert len(rows) == len(cfg.schemes) * cfg.trials * cfg.sets
    keys = [(r["set"], r["trial"]) for r in rows]
    assert keys == sorted(keys)
    assert [r["scheme"] for r in rows[:2]] == ["cgr", "threshold"]


def test_schemes_in_a_trial_share_the_episode():
    rows = run_batch(_cfg())
    for a, b in zip(rows[::2], rows[1::2]):
        assert (a["seed"], a["dv_init"], a["V"]) == (b["seed"], b["dv_init"], b["V"])


def test_threshold_spends_less_excess_than_cgr():
    rows = run_batch(_cfg(trials=100, sets=1))
    e = {s: np.mean([r["total_excess_energy"] for r in rows if r["scheme"] == s]) for s in ("cgr", "threshold")}
    assert e["threshold"] <= e["cgr"]


def test_raw_csv_is_reproducible_across_workers():
    one = raw_csv_text(run_batch(_cfg()))
    assert raw_csv_text(run_batch(_cfg())) == one
    assert raw_csv_text(run_batch(_cfg(workers=3))) == one


def test_oracle_gap_is_non_negative():
    rows = run_batch(_cfg(trials=10, sets=1), require_oracle=True)
    assert all(r["optimality_gap"] >= -1e-9 for r in rows)


def test_write_outputs(tmp_path):
    cfg = _cfg(trials=3, sets=1)
    rows = run_batch(cfg)
    paths = write_outputs(cfg, rows, tmp_path)
    raw = list(csv.reader(io.StringIO(paths["raw"].read_text())))
    assert tuple(raw[0]) == RAW_HEADER and len(raw) == 1 + len(rows)
    summary = list(csv.reader(io.StringIO(paths["summary"].read_text())))
    assert tuple(summary[0]) == SUMMARY_HEADER
    manifest = json.loads(paths["manifest"].read_text())
    assert manifest["rows"] == len(rows) and manifest["config"]["master_seed"] == 11
    assert ExperimentConfig.from_dict(manifest["config"]) == cfg


def test_config_validation(tmp_path):
    with pytest.raises(ValidationError):
        ExperimentConfig.from_dict({"trails": 3})
    with pytest.raises(ValidationError):
        ExperimentConfig.from_dict({"schemes": [{"kind": "threshold", "tau": 1.0}]})
    with pytest.raises(ValidationError):
        ExperimentConfig.from_dict({"schemes": ["cgr", "cgr"]})
    with pytest.raises(ValidationError):
        ExperimentConfig.from_dict({"schemes": [{"kind": "ddqn"}]})
    with pytest.raises(ValidationError):
        ExperimentConfig.from_json(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ValidationError):
        ExperimentConfig.from_json(bad)


def test_shipped_configs_load():
    from pathlib import Path
    for path in sorted(Path(__file__).parent.parent.joinpath("configs").glob("*.json")):
        ExperimentConfig.from_json(path)


# ---- scaling benchmark ----

def test_benchmark_empty_instance_selects_nothing():
    rows = scaling_benchmark(grid=(0,), repetitions=1)
    assert rows and all(r.selected == 0 for r in rows)


def test_benchmark_slopes():
    rows = scaling_benchmark(grid=(256, 512, 1024, 2048), repetitions=3)
    slopes = loglog_slopes(rows)
    for scheme in ("cgr", "threshold", "multi_threshold", "static_sort"):
        assert slopes[scheme] < 1.5, (scheme, slopes)
    assert 1.5 <= slopes["adaptive_sort"] <= 2.5, slopes


def test_loglog_slope_of_synthetic_timings():
    from fsosched.harness.bench import BenchRow
    rows = [BenchRow("q", n, 1e-6 * n ** 2, 0) for n in (10, 20, 40, 80)]
    assert loglog_slopes(rows)["q"] == pytest.approx(2.0)
