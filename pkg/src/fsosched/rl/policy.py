"""Action selection, greedy evaluation and checkpoint I/O shared by both learners."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Callable

import numpy as np

from ..core import DownlinkPeriod, EpisodeResult, ValidationError
from .env import DownlinkEnv, Observation, RewardParams
from .mlp import MlpPolicy
from .tabular import QTable

CHECKPOINT_VERSION = 1


def q_values(policy, obs: Observation) -> np.ndarray:
    if isinstance(policy, QTable):
        return policy.values(obs)
    return policy.forward(obs.vector())


def greedy(q: np.ndarray) -> int:
    # strict comparison so ties go to action 0
    return int(q[1] > q[0])


def policy_act(policy, obs: Observation, epsilon: float, rng: np.random.Generator | None = None) -> int:
    if epsilon > 0 and rng is not None and rng.random() < epsilon:
        return int(rng.integers(2))
    return greedy(q_values(policy, obs))


def run_policy(policy, period: DownlinkPeriod, seed: int, reward: RewardParams | None = None,
               scheme: str = "") -> EpisodeResult:
    env = DownlinkEnv(reward)
    obs = env.reset(period, seed)
    while not env.done:
        obs, _, _ = env.step(policy_act(policy, obs, 0.0))
    return env.result(scheme)


def run_random(period: DownlinkPeriod, seed: int, reward: RewardParams | None = None,
               p_transmit: float = 0.5) -> EpisodeResult:
    """Uniform random baseline. Its coin flips come from the episode seed."""
    rng = np.random.default_rng([seed, 0x4A4D])
    env = DownlinkEnv(reward)
    env.reset(period, seed)
    while not env.done:
        env.step(int(rng.random() < p_transmit))
    return env.result("random")


def config_fingerprint(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def save_checkpoint(policy, path: str | Path, config: dict | None = None) -> None:
    config = config or {}
    if isinstance(policy, QTable):
        doc = {"kind": "qtable", "bins": policy.bins, "shape": list(policy.table.shape),
               "values": policy.table.ravel().tolist()}
    else:
        doc = {"kind": "mlp", "sizes": list(policy.sizes),
               "weights": [w.tolist() for w in policy.weights],
               "biases": [b.tolist() for b in policy.biases],
               "normalization": {"cc": [0.0, 1.0], "dv": "dv_init", "cvr": "V", "sgc_volume": "V"}}
    doc.update(version=CHECKPOINT_VERSION, config=config, fingerprint=config_fingerprint(config))
    Path(path).write_text(json.dumps(doc))


def load_checkpoint(path: str | Path):
    doc = json.loads(Path(path).read_text())
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValidationError(f"{path}: unsupported checkpoint version {doc.get('version')!r}")
    if doc["kind"] == "qtable":
        table = np.asarray(doc["values"], dtype=float).reshape(doc["shape"])
        return QTable(bins=int(doc["bins"]), table=table)
    if doc["kind"] == "mlp":
        return MlpPolicy(sizes=tuple(doc["sizes"]),
                         weights=[np.asarray(w, dtype=float) for w in doc["weights"]],
                         biases=[np.asarray(b, dtype=float) for b in doc["biases"]],
                         meta={"fingerprint": doc.get("fingerprint"), "config": doc.get("config", {})})
    raise ValidationError(f"{path}: unknown checkpoint kind {doc['kind']!r}")


PeriodFactory = Callable[[int], DownlinkPeriod]
