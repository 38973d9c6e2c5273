"""Config-driven training and threshold tuning entry points."""
from __future__ import annotations

import csv
from pathlib import Path

from ..core import derive_seed
from ..rl.ddqn import DdqnHyper, ddqn_train
from ..rl.env import RewardParams
from ..rl.policy import save_checkpoint
from ..rl.tabular import QHyper, q_learning_train
from ..static import TuningResult, tune_threshold
from .experiment import ExperimentConfig, period_factory

TUNE_STREAM = 0x7E5E


def train_policy(config: ExperimentConfig, progress_every: int = 0):
    """Train the learner named in ``config.training``; returns (policy, per-episode returns)."""
    spec = config.training
    make_period = period_factory(config.scenario)
    reward = RewardParams(c=config.reward_c)
    overrides = dict(spec.overrides)
    if spec.algorithm == "ddqn":
        hyper = DdqnHyper.profile(spec.profile, **overrides)
        return ddqn_train(make_period, hyper, spec.episodes, config.master_seed, reward,
                          progress_every=progress_every)
    return q_learning_train(make_period, QHyper(**overrides), spec.episodes, config.master_seed, reward)


def save_training(config: ExperimentConfig, policy, returns, out_dir: str | Path,
                  checkpoint: str | Path | None = None) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ckpt = Path(checkpoint) if checkpoint else out / config.training.checkpoint
    ckpt.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(policy, ckpt, config.to_dict())
    curve = out / "training_returns.csv"
    with open(curve, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("episode", "return"))
        w.writerows((k, repr(float(r))) for k, r in enumerate(returns))
    return {"checkpoint": ckpt, "returns": curve}


def tune_from_config(config: ExperimentConfig) -> TuningResult:
    """Threshold tuning on the configured scenario with seeds derived from the master seed."""
    params = config.tuning
    seeds = [derive_seed(config.master_seed, TUNE_STREAM, k) for k in range(params.nTe)]
    return tune_threshold(period_factory(config.scenario), params, seeds)
