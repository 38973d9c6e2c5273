"""Command-line entry point.

Exit status: 0 on success, 1 for usage or validation errors, 2 for any
other failure during the run.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .core import Contact, ValidationError, derive_seed, write_contact_plan
from .harness.bench import BENCH_SCHEMES, DEFAULT_GRID, loglog_slopes, scaling_benchmark
from .harness.experiment import ExperimentConfig, SchemeSpec, run_batch, write_outputs
from .harness.metrics import summarize
from .harness.training import save_training, train_policy, tune_from_config
from .scenarios.case_study import DV_MODES, FORECAST_SD, PROFILES, CaseStudyScenario, year_weather
from .scenarios.generators import ScenarioConfig, perturb_forecast
from .scenarios.weather import write_weather_csv

log = logging.getLogger("fsosched")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 by default; usage problems here are validation errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def parse_scenario(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """``uniform``, ``variable:<dv>:<cc>``, ``case-study:<profile>[:<dv_mode>]`` or ``file:<path>``."""
    base = base or ScenarioConfig()
    kind, _, rest = text.partition(":")
    fields = {k: getattr(base, k) for k in ("n_contacts", "contact_volume", "link_sample_rate")}
    if kind == "uniform" and not rest:
        return ScenarioConfig(kind="uniform", **fields)
    if kind == "variable":
        parts = rest.split(":")
        if len(parts) != 2:
            raise ValidationError("expected variable:<dv_fraction>:<cc_mean>")
        try:
            dv, cc = float(parts[0]), float(parts[1])
        except ValueError:
            raise ValidationError(f"non-numeric variable scenario {text!r}") from None
        return ScenarioConfig(kind="variable", dv_fraction=dv, cc_mean=cc, **fields)
    if kind == "case-study":
        profile, _, dv_mode = rest.partition(":")
        profile = profile or "test"
        if profile not in PROFILES:
            raise ValidationError(f"unknown case-study profile {profile!r}; expected one of {sorted(PROFILES)}")
        if dv_mode and dv_mode not in DV_MODES:
            raise ValidationError(f"unknown dv mode {dv_mode!r}; expected one of {DV_MODES}")
        return ScenarioConfig(kind="case_study", profile=profile, dv_mode=dv_mode or "uniform",
                              forecast_noise_sd=FORECAST_SD, weather_csv=base.weather_csv)
    if kind == "file" and rest:
        return ScenarioConfig(kind="file", path=rest, dv_fraction=base.dv_fraction,
                              link_sample_rate=base.link_sample_rate)
    raise ValidationError(f"unrecognised scenario {text!r}")


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    changes = {}
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.out_dir is not None:
        changes["out_dir"] = args.out_dir
    if args.scenario is not None:
        changes["scenario"] = parse_scenario(args.scenario, cfg.scenario)
    if getattr(args, "workers", None) is not None:
        changes["workers"] = args.workers
    return cfg.replace(**changes) if changes else cfg


def _print_summary(rows) -> None:
    for s in summarize(rows, ("delivery_ratio", "mean_contact_efficiency", "total_excess_energy")):
        print(f"{s.scheme:>16} {s.metric:<24} mean={s.mean:.4f} median={s.median:.4f} "
              f"LQ={s.lq:.4f} UQ={s.uq:.4f} n={s.n}")


def cmd_run(args) -> int:
    cfg = _config(args)
    rows = run_batch(cfg)
    paths = write_outputs(cfg, rows)
    _print_summary(rows)
    print(f"wrote {paths['raw']}, {paths['summary']}, {paths['manifest']}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    cfg = _config(args)
    rows = run_batch(cfg, require_oracle=True)
    paths = write_outputs(cfg, rows, prefix="oracle_")
    for s in summarize(rows, ("optimality_gap",)):
        print(f"{s.scheme:>16} gap mean={s.mean:.4f} median={s.median:.4f} n={s.n}")
    print(f"wrote {paths['raw']}")
    return EXIT_OK


def cmd_tune(args) -> int:
    cfg = _config(args)
    res = tune_from_config(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = {"T": res.T, "degenerate": res.degenerate, "history": [list(h) for h in res.history],
           "config": cfg.to_dict()}
    (out / "tuning.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"T = {res.T:.2f}" + (" (degenerate baseline)" if res.degenerate else ""))
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    if args.episodes is not None:
        cfg = cfg.replace(training=dataclasses.replace(cfg.training, episodes=args.episodes))
    policy, returns = train_policy(cfg, progress_every=max(1, cfg.training.episodes // 10))
    paths = save_training(cfg, policy, returns, cfg.out_dir, args.checkpoint)
    k = min(100, len(returns))
    print(f"mean return first {k}: {np.mean(returns[:k]):.2f}  last {k}: {np.mean(returns[-k:]):.2f}")
    print(f"wrote {paths['checkpoint']}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _config(args)
    doc = json.loads(Path(args.checkpoint).read_text()) if Path(args.checkpoint).is_file() else None
    if doc is None:
        raise ValidationError(f"checkpoint not found: {args.checkpoint}")
    kind = {"mlp": "ddqn", "qtable": "qlearning"}.get(doc.get("kind"))
    if kind is None:
        raise ValidationError(f"{args.checkpoint}: not a policy checkpoint")
    others = tuple(s for s in cfg.schemes if s.kind not in ("ddqn", "qlearning"))
    policy = SchemeSpec(kind=kind, params=(("checkpoint", str(args.checkpoint)),))
    cfg = cfg.replace(schemes=(policy,) + others)
    rows = run_batch(cfg)
    paths = write_outputs(cfg, rows, prefix="eval_")
    _print_summary(rows)
    print(f"wrote {paths['raw']}")
    return EXIT_OK


def cmd_contacts(args) -> int:
    cfg = _config(args)
    sc = cfg.scenario
    if sc.kind != "case_study":
        raise ValidationError("contacts needs a case-study scenario, e.g. --scenario case-study:test")
    cs = CaseStudyScenario(profile=sc.profile, dv_mode=sc.dv_mode, forecast_sd=sc.forecast_noise_sd,
                           weather_csv=dict(sc.weather_csv))
    rng = np.random.default_rng(derive_seed(cfg.master_seed, 0xC0))
    true_cc = np.array([c.cloud_cover for c in cs.contacts])
    forecast = perturb_forecast(true_cc, sc.forecast_noise_sd, rng)
    contacts = [Contact(cloud_cover=float(c.cloud_cover), forecast_cloud_cover=float(f), volume=c.volume, index=i,
                        start_utc=c.window.start.strftime("%Y-%m-%dT%H:%M:%SZ"),
                        end_utc=c.window.end.strftime("%Y-%m-%dT%H:%M:%SZ"))
                for i, (c, f) in enumerate(zip(cs.contacts, forecast))]
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    plan = out / f"contacts_{sc.profile}.csv"
    write_contact_plan(plan, contacts)
    stations = {}
    for c in cs.contacts:
        stations[c.window.station] = stations.get(c.window.station, 0) + 1
    if not sc.weather_csv:
        for name, series in year_weather(PROFILES[sc.profile], cs.weather_seed).items():
            write_weather_csv(out / f"weather_{name}_{PROFILES[sc.profile].year}.csv", series)
    print(f"{len(contacts)} contacts " + ", ".join(f"{k}={v}" for k, v in sorted(stations.items())))
    print(f"wrote {plan}")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _config(args)
    grid = tuple(int(x) for x in args.grid.split(",")) if args.grid else DEFAULT_GRID
    schemes = tuple(args.schemes.split(",")) if args.schemes else BENCH_SCHEMES
    rows = scaling_benchmark(schemes, grid, args.repetitions, cfg.master_seed)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "bench.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("scheme", "n", "seconds", "selected"))
        w.writerows((r.scheme, r.n, repr(r.seconds), r.selected) for r in rows)
    slopes = loglog_slopes(rows)
    for scheme, slope in slopes.items():
        print(f"{scheme:>16} log-log slope {slope:.2f}")
    print(f"wrote {out / 'bench.csv'}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "tune": cmd_tune, "train": cmd_train, "eval": cmd_eval, "oracle": cmd_oracle,
            "contacts": cmd_contacts, "bench": cmd_bench}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="experiment JSON file")
    common.add_argument("--seed", type=int, help="master seed override")
    common.add_argument("--out-dir", help="output directory override")
    common.add_argument("--scenario", help="uniform | variable:<dv>:<cc> | case-study:<profile>[:<dv_mode>] | "
                                           "file:<path>")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="fsosched", description="Weather-aware FSO downlink scheduling experiments.")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)
    for name in ("run", "oracle", "eval"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--workers", type=int, help="worker processes")
        if name == "eval":
            p.add_argument("--checkpoint", required=True, help="policy checkpoint to evaluate")
    sub.add_parser("tune", parents=[common])
    p = sub.add_parser("train", parents=[common])
    p.add_argument("--episodes", type=int, help="override training episodes")
    p.add_argument("--checkpoint", help="checkpoint output path")
    sub.add_parser("contacts", parents=[common])
    p = sub.add_parser("bench", parents=[common])
    p.add_argument("--grid", help="comma-separated contact counts")
    p.add_argument("--schemes", help=f"comma-separated subset of {','.join(BENCH_SCHEMES)}")
    p.add_argument("--repetitions", type=int, default=5)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.verb](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - every other failure maps to the runtime exit code
        log.debug("run failed", exc_info=True)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
