"""Tabular Q-learning on a discretised observation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core import DownlinkPeriod, ValidationError, derive_seed, policy_rng
from .env import DownlinkEnv, Observation, RewardParams

N_FEATURES = 5
TRAIN_STREAM = 0x7AB1


def _bin(x: float, bins: int) -> int:
    return min(bins - 1, max(0, int(np.floor(x * bins))))


def discretize_observation(obs: Observation, bins: int = 10) -> tuple[int, ...]:
    """Map an observation to 5 bin indices.

    The contact table is compressed to the mean forecast cloud cover of the
    contacts still ahead and the fraction of contacts already gone by.
    """
    if bins < 2:
        raise ValidationError("need at least 2 bins per dimension")
    cc = obs.sgc[:, 0]
    n = len(cc)
    # expired rows are marked cc == 1; a genuinely overcast live contact looks the same
    live = cc < 1.0
    mean_cc = float(cc[live].mean()) if live.any() else 1.0
    elapsed = 1.0 - float(live.sum()) / n if n else 1.0
    return (_bin(obs.cc_next, bins), _bin(obs.dv, bins), _bin(obs.cvr, bins),
            _bin(mean_cc, bins), _bin(elapsed, bins))


@dataclass
class QTable:
    bins: int
    table: np.ndarray

    @classmethod
    def empty(cls, bins: int = 10) -> "QTable":
        return cls(bins=bins, table=np.zeros((bins,) * N_FEATURES + (2,)))

    def index(self, obs: Observation) -> tuple[int, ...]:
        return discretize_observation(obs, self.bins)

    def values(self, obs: Observation) -> np.ndarray:
        return self.table[self.index(obs)]


@dataclass(frozen=True)
class QHyper:
    alpha: float = 1e-5
    gamma: float = 0.99
    epsilon_decay: float = 1e-5
    epsilon_init: float = 1.0
    epsilon_min: float = 0.005
    bins: int = 10

    def __post_init__(self):
        if not 0 <= self.gamma <= 1:
            raise ValidationError("gamma must lie in [0, 1]")
        if not self.epsilon_min <= self.epsilon_init <= 1:
            raise ValidationError("need epsilon_min <= epsilon_init <= 1")


def q_learning_train(make_period: Callable[[int], DownlinkPeriod], hyper: QHyper, episodes: int,
                     seed: int, reward: RewardParams | None = None):
    """One-step Q-learning with multiplicative per-step epsilon decay.

    Returns the table and the list of per-episode returns.
    """
    q = QTable.empty(hyper.bins)
    env = DownlinkEnv(reward)
    rng = policy_rng(seed)
    eps = hyper.epsilon_init
    returns = []
    for ep in range(episodes):
        ep_seed = derive_seed(seed, TRAIN_STREAM, ep)
        obs = env.reset(make_period(ep_seed), ep_seed)
        s = q.index(obs)
        while not env.done:
            if rng.random() < eps:
                a = int(rng.integers(2))
            else:
                row = q.table[s]
                a = int(row[1] > row[0])
            obs, r, done = env.step(a)
            s2 = q.index(obs)
            target = r if done else r + hyper.gamma * q.table[s2].max()
            q.table[s + (a,)] += hyper.alpha * (target - q.table[s + (a,)])
            s = s2
            eps = max(hyper.epsilon_min, eps * (1.0 - hyper.epsilon_decay))
        returns.append(env.episode_return)
    return q, returns
