"""Experiment configuration, the scheme registry and the paired-seed batch runner."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import subprocess
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Mapping

from ..adaptive import adaptive_sort_run
from ..core import DownlinkPeriod, EpisodeResult, ValidationError, episode_seed, period_from_plan, \
    read_contact_plan, scenario_rng
from ..oracle import brute_force_optimal, instance_from_period, soft_knapsack_objective, weighted_objective
from ..rl.ddqn import PROFILES as DDQN_PROFILES
from ..rl.env import RewardParams
from ..rl.policy import load_checkpoint, run_policy, run_random
from ..rl.tabular import QHyper
from ..scenarios.case_study import FORECAST_SD, CaseStudyScenario
from ..scenarios.generators import ScenarioConfig, gen_uniform_scenario, gen_variable_scenario
from ..static import BUDGET_RULES, GENERAL_MULTI, GENERAL_SINGLE_T, ThresholdConfig, TuningParams, run_cgr, \
    run_multi_threshold, run_static_sort, run_threshold
from .metrics import delivery_ratio, mean_contact_efficiency, summarize, total_excess_energy

log = logging.getLogger(__name__)

RAW_SCHEMA_VERSION = 1
SUMMARY_SCHEMA_VERSION = 1
MANIFEST_SCHEMA_VERSION = 1
RAW_HEADER = ("scheme", "set", "trial", "seed", "dv_init", "V", "DR", "E", "mean_eff", "return",
              "objective", "gap")
SUMMARY_HEADER = ("scheme", "metric", "mean", "median", "uq", "lq", "sd", "n")

SCHEME_KINDS = ("cgr", "threshold", "multi_threshold", "static_sort", "adaptive_sort", "ddqn", "qlearning",
                "random")
_SCHEME_PARAMS = {
    "cgr": set(),
    "threshold": {"T"},
    "multi_threshold": {"thresholds"},
    "static_sort": {"tau", "rule"},
    "adaptive_sort": {"tau", "rule"},
    "ddqn": {"checkpoint"},
    "qlearning": {"checkpoint"},
    "random": {"p_transmit"},
}


def _freeze(value):
    if isinstance(value, list):
        return tuple(_freeze(v) for v in value)
    if isinstance(value, dict):
        return tuple(sorted((k, _freeze(v)) for k, v in value.items()))
    return value


def _check_keys(section: str, given: Mapping, allowed) -> None:
    unknown = sorted(set(given) - set(allowed))
    if unknown:
        raise ValidationError(f"{section}: unknown key(s) {', '.join(unknown)}")


@dataclass(frozen=True)
class SchemeSpec:
    """A scheme kind plus its parameters; ``name`` labels the output rows."""

    kind: str
    name: str = ""
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise ValidationError(f"unknown scheme {self.kind!r}; expected one of {', '.join(SCHEME_KINDS)}")
        params = dict(self.params)
        _check_keys(f"scheme {self.kind}", params, _SCHEME_PARAMS[self.kind])
        if self.kind in ("ddqn", "qlearning") and "checkpoint" not in params:
            raise ValidationError(f"scheme {self.kind} needs a checkpoint path")
        if params.get("rule", "literal") not in BUDGET_RULES:
            raise ValidationError(f"unknown budget rule {params['rule']!r}")
        object.__setattr__(self, "params", _freeze(params))
        if not self.name:
            object.__setattr__(self, "name", self.kind)

    def get(self, key: str, default=None):
        return dict(self.params).get(key, default)

    @classmethod
    def from_dict(cls, d: Mapping | str) -> "SchemeSpec":
        if isinstance(d, str):
            return cls(kind=d)
        d = dict(d)
        kind = d.pop("kind", None) or d.get("name")
        name = d.pop("name", "")
        return cls(kind=kind, name=name, params=_freeze(d))

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "name": self.name}
        for k, v in self.params:
            out[k] = [list(t) for t in v] if k == "thresholds" else v
        return out


@dataclass(frozen=True)
class TrainingSpec:
    algorithm: str = "ddqn"
    episodes: int = 30_000
    profile: str = "desk"
    overrides: tuple = ()
    checkpoint: str = "policy.json"

    def __post_init__(self):
        if self.algorithm not in ("ddqn", "qlearning"):
            raise ValidationError(f"unknown training algorithm {self.algorithm!r}")
        if self.episodes < 1:
            raise ValidationError("episodes must be >= 1")
        if self.algorithm == "ddqn" and self.profile not in DDQN_PROFILES:
            raise ValidationError(f"unknown DDQN profile {self.profile!r}")
        object.__setattr__(self, "overrides", _freeze(dict(self.overrides)))
        if self.algorithm == "qlearning":
            _check_keys("train.overrides", dict(self.overrides), {f.name for f in dataclasses.fields(QHyper)})


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    schemes: tuple[SchemeSpec, ...] = (SchemeSpec("cgr"),)
    trials: int = 100
    sets: int = 3
    master_seed: int = 0
    out_dir: str = "results"
    w: float = 0.5
    workers: int = 1
    oracle: bool = True
    reward_c: float = 100.0
    tuning: TuningParams = field(default_factory=TuningParams)
    training: TrainingSpec = field(default_factory=TrainingSpec)

    def __post_init__(self):
        object.__setattr__(self, "schemes", tuple(self.schemes))
        if self.trials < 1 or self.sets < 1:
            raise ValidationError("trials and sets must be >= 1")
        if not self.schemes:
            raise ValidationError("at least one scheme is required")
        names = [s.name for s in self.schemes]
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate scheme names in {names}")
        if not 0.0 <= self.w <= 1.0:
            raise ValidationError("objective weight w must lie in [0, 1]")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")

    @classmethod
    def from_dict(cls, d: Mapping, base_dir: str | Path | None = None) -> "ExperimentConfig":
        d = dict(d)
        _check_keys("config", d, {f.name for f in dataclasses.fields(cls)})
        sc = dict(d.pop("scenario", {}))
        _check_keys("scenario", sc, {f.name for f in dataclasses.fields(ScenarioConfig)})
        if sc.get("kind") == "case_study":
            sc.setdefault("forecast_noise_sd", FORECAST_SD)
        if base_dir is not None and sc.get("path"):
            sc["path"] = str(Path(base_dir, sc["path"]))
        schemes = tuple(SchemeSpec.from_dict(s) for s in d.pop("schemes", ["cgr"]))
        tun = dict(d.pop("tuning", {}))
        _check_keys("tuning", tun, {f.name for f in dataclasses.fields(TuningParams)})
        tr = dict(d.pop("training", {}))
        _check_keys("training", tr, {f.name for f in dataclasses.fields(TrainingSpec)})
        try:
            return cls(scenario=ScenarioConfig(**sc), schemes=schemes, tuning=TuningParams(**tun),
                       training=TrainingSpec(**tr), **d)
        except TypeError as exc:
            raise ValidationError(str(exc)) from None

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except FileNotFoundError:
            raise ValidationError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(doc, dict):
            raise ValidationError(f"{path}: top level must be an object")
        return cls.from_dict(doc, base_dir=path.parent)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["scenario"]["weather_csv"] = dict(self.scenario.weather_csv)
        d["schemes"] = [s.to_dict() for s in self.schemes]
        d["training"]["overrides"] = dict(self.training.overrides)
        return d

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


# -- scenario factories ----------------------------------------------------

@lru_cache(maxsize=4)
def _case_study(profile: str, dv_mode: str, forecast_sd: float, weather_csv: tuple) -> CaseStudyScenario:
    return CaseStudyScenario(profile=profile, dv_mode=dv_mode, forecast_sd=forecast_sd,
                             weather_csv=dict(weather_csv))


@lru_cache(maxsize=4)
def _plan(path: str):
    return tuple(read_contact_plan(path))


def period_factory(sc: ScenarioConfig) -> Callable[[int], DownlinkPeriod]:
    """Map an episode seed to its downlink period for the given scenario."""
    if sc.kind == "uniform":
        return lambda seed: gen_uniform_scenario(sc, scenario_rng(seed))
    if sc.kind == "variable":
        return lambda seed: gen_variable_scenario(sc.dv_fraction, sc.cc_mean, scenario_rng(seed), sc.n_contacts,
                                                  sc.contact_volume, sc.cc_sd, sc.link_sample_rate)
    if sc.kind == "case_study":
        cs = _case_study(sc.profile, sc.dv_mode, sc.forecast_noise_sd, sc.weather_csv)
        return cs.make_period
    plan = _plan(sc.path)
    V = sum(c.volume for c in plan)
    dv_init = int(round(sc.dv_fraction * V))
    period = period_from_plan(plan, dv_init, sc.link_sample_rate)
    return lambda seed: period


# -- scheme registry -------------------------------------------------------

Runner = Callable[[DownlinkPeriod, int], EpisodeResult]


def build_runner(spec: SchemeSpec, reward_c: float = 100.0) -> Runner:
    reward = RewardParams(c=reward_c)
    kind = spec.kind
    if kind == "cgr":
        return run_cgr
    if kind == "threshold":
        T = float(spec.get("T", GENERAL_SINGLE_T))
        return lambda p, s: run_threshold(p, s, T)
    if kind == "multi_threshold":
        cfg = ThresholdConfig(tuple(tuple(t) for t in spec.get("thresholds", GENERAL_MULTI)))
        return lambda p, s: run_multi_threshold(p, s, cfg)
    if kind in ("static_sort", "adaptive_sort"):
        tau = float(spec.get("tau", 1.0))
        rule = spec.get("rule", "literal")
        fn = run_static_sort if kind == "static_sort" else adaptive_sort_run
        return lambda p, s: fn(p, s, tau, rule)
    if kind in ("ddqn", "qlearning"):
        policy = load_checkpoint(spec.get("checkpoint"))
        return lambda p, s: run_policy(policy, p, s, reward, scheme=spec.name)
    p_tx = float(spec.get("p_transmit", 0.5))
    return lambda p, s: run_random(p, s, reward, p_tx)


@lru_cache(maxsize=4)
def _compiled(config_json: str):
    cfg = ExperimentConfig.from_dict(json.loads(config_json))
    runners = [(s.name, build_runner(s, cfg.reward_c)) for s in cfg.schemes]
    return cfg, period_factory(cfg.scenario), runners


def check_energy_identity(result: EpisodeResult, tol: float = 1e-9) -> None:
    """Every used contact splits its volume into delivered plus excess, and delivery never exceeds the buffer."""
    for x, d, e, v in zip(result.decisions, result.delivered_per_contact, result.excess_per_contact,
                          result.volumes):
        if x and abs(d + e - v) > tol * max(1.0, v):
            raise RuntimeError(f"energy identity violated: d={d} e={e} v={v}")
    if math.fsum(result.delivered_per_contact) > result.dv_init + tol * max(1.0, result.dv_init):
        raise RuntimeError("delivered more than the initial data volume")


def _trial_rows(config_json: str, set_index: int, trial: int, require_oracle: bool = False) -> list[dict]:
    cfg, make_period, runners = _compiled(config_json)
    seed = episode_seed(cfg.master_seed, set_index, trial)
    period = make_period(seed)
    instance = best = None
    if require_oracle or (cfg.oracle and period.n_contacts <= 24):
        instance = instance_from_period(period)
        best = brute_force_optimal(instance)[1]
    rows = []
    for name, run in runners:
        res = run(period, seed)
        check_energy_identity(res)
        gap = None if instance is None else best - soft_knapsack_objective(res.decisions, instance)
        rows.append({
            "scheme": name, "set": set_index, "trial": trial, "seed": seed, "dv_init": period.dv_init,
            "V": period.total_volume, "delivery_ratio": delivery_ratio(res),
            "total_excess_energy": total_excess_energy(res),
            "mean_contact_efficiency": mean_contact_efficiency(res), "return": res.rl_return,
            "weighted_objective": weighted_objective(res, cfg.w), "optimality_gap": gap,
        })
    return rows


def _star(args):
    return _trial_rows(*args)


def run_batch(config: ExperimentConfig, require_oracle: bool = False) -> list[dict]:
    """Run every scheme on every (set, trial) episode; rows ordered by set, trial, then scheme order.

    All schemes in a trial share the episode seed, so they see the same
    period and the same per-contact channel draws.
    """
    config_json = json.dumps(config.to_dict(), sort_keys=True)
    jobs = [(config_json, s, t, require_oracle) for s in range(config.sets) for t in range(config.trials)]
    if config.workers == 1:
        chunks = [_trial_rows(*j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            chunks = list(pool.map(_star, jobs, chunksize=max(1, len(jobs) // (4 * config.workers))))
    order = {s.name: k for k, s in enumerate(config.schemes)}
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=lambda r: (r["set"], r["trial"], order[r["scheme"]]))
    return rows


# -- serialisation ---------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def raw_csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RAW_HEADER)
    for r in rows:
        w.writerow([_fmt(v) for v in (r["scheme"], r["set"], r["trial"], r["seed"], r["dv_init"], r["V"],
                                      r["delivery_ratio"], r["total_excess_energy"], r["mean_contact_efficiency"],
                                      r["return"], r["weighted_objective"], r["optimality_gap"])])
    return buf.getvalue()


def summary_csv_text(stats) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    for s in stats:
        w.writerow([s.scheme, s.metric] + [_fmt(v) for v in (s.mean, s.median, s.uq, s.lq, s.sd, s.n)])
    return buf.getvalue()


def git_describe() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=Path(__file__).parent,
                             capture_output=True, text=True, timeout=10)
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() if out.returncode == 0 and out.stdout.strip() else "unknown"


def write_outputs(config: ExperimentConfig, rows: list[dict], out_dir: str | Path | None = None,
                  prefix: str = "") -> dict[str, Path]:
    """Write raw CSV, summary CSV and a JSON manifest; returns the paths."""
    out = Path(out_dir if out_dir is not None else config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    raw = raw_csv_text(rows)
    paths = {"raw": out / f"{prefix}raw.csv", "summary": out / f"{prefix}summary.csv",
             "manifest": out / f"{prefix}manifest.json"}
    paths["raw"].write_text(raw)
    paths["summary"].write_text(summary_csv_text(summarize(rows)))
    manifest = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "raw_schema_version": RAW_SCHEMA_VERSION,
        "summary_schema_version": SUMMARY_SCHEMA_VERSION,
        "git_describe": git_describe(),
        "config": config.to_dict(),
        "rows": len(rows),
        "raw_sha256": hashlib.sha256(raw.encode()).hexdigest(),
    }
    paths["manifest"].write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return paths
