"""Episode environment for the learning agents.

One step per contact in time order. Action 1 attempts the contact with its
true cloud cover, action 0 lets it pass. The episode ends after the last
contact or as soon as the buffer is empty. The terminal reward is folded
into the final step's reward.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..channel import attempt_contact
from ..core import DownlinkPeriod, EpisodeResult, ValidationError, channel_rng, remaining_capacity

DONE_TOL = 1e-9


@dataclass(frozen=True)
class RewardParams:
    c: float = 100.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValidationError("reward scaling factor c must be positive")


@dataclass(frozen=True)
class Observation:
    cc_next: float
    dv: float
    cvr: float
    sgc: np.ndarray  # (N, 2): forecast cc, volume / V; expired rows have cc = 1

    def vector(self) -> np.ndarray:
        return np.concatenate(([self.cc_next, self.dv, self.cvr], self.sgc[:, 0], self.sgc[:, 1]))


def step_reward(d: float, e: float, v: float, action: int, dv_init: float, c: float) -> float:
    """Per-contact reward: efficiency-weighted delivery, or a penalty for a wasted contact."""
    if action == 0 or dv_init <= 0:
        return 0.0
    scale = c / dv_init
    if d > 0:
        f1 = scale * d
        f2 = scale * d * e / (e + v) if e + v > 0 else 0.0
        return f1 - f2
    return -e * c / (2.0 * dv_init)


def terminal_reward(dr: float, ct: float, c: float, dv_init: float = 1.0) -> float:
    """End-of-episode bonus; full delivery is scaled by how little contact volume it used."""
    if dv_init <= 0:
        return c
    if dr >= 1.0 - DONE_TOL:
        assert ct > 0, "full delivery without using any contact"
        return 2.0 * c * dr / ct
    return c * dr


class DownlinkEnv:
    def __init__(self, reward: RewardParams | None = None):
        self.reward = reward or RewardParams()
        self.period: DownlinkPeriod | None = None
        self.done = True

    @property
    def n_contacts(self) -> int:
        return self.period.n_contacts

    def reset(self, period: DownlinkPeriod, seed: int) -> Observation:
        self.period = period
        self.seed = int(seed)
        n = period.n_contacts
        self.V = period.total_volume
        self.dv = float(period.dv_init)
        self.k = 0
        self.energy = 0.0
        self.delivered_total = 0.0
        self.decisions = [0] * n
        self.delivered = [0.0] * n
        self.excess = [0.0] * n
        self.step_rewards: list[float] = []
        self.terminal = 0.0
        self._sgc = np.column_stack([period.forecasts,
                                     period.volumes / self.V if self.V > 0 else np.zeros(n)]).astype(float)
        self.done = period.dv_init <= 0 or n == 0
        if self.done:
            self._finish()
        return self.observe()

    def observe(self) -> Observation:
        p = self.period
        n = p.n_contacts
        cc_next = float(p.contacts[self.k].forecast_cloud_cover) if self.k < n else 1.0
        dv = self.dv / p.dv_init if p.dv_init > 0 else 0.0
        cvr = remaining_capacity(p, min(self.k, n)) / self.V if self.V > 0 else 0.0
        return Observation(cc_next=cc_next, dv=dv, cvr=cvr, sgc=self._sgc.copy())

    def step(self, action: int) -> tuple[Observation, float, bool]:
        if self.done:
            raise RuntimeError("episode finished; call reset()")
        p = self.period
        k = self.k
        contact = p.contacts[k]
        if action == 1:
            out = attempt_contact(contact, self.dv, p, channel_rng(self.seed, contact.index))
            self.decisions[k] = 1
            self.delivered[k] = out.delivered
            self.excess[k] = out.excess_energy
            self.dv = out.dv_after
            self.delivered_total += out.delivered
            self.energy += out.excess_energy
            r = step_reward(out.delivered, out.excess_energy, contact.volume, 1, p.dv_init, self.reward.c)
        else:
            r = 0.0
        self.step_rewards.append(r)
        self._sgc[k, 0] = 1.0
        self.k += 1
        if self.k >= p.n_contacts or self.dv <= DONE_TOL:
            self.done = True
            self._finish()
            r += self.terminal
        return self.observe(), r, self.done

    def _finish(self):
        p = self.period
        if p.dv_init <= 0:
            self.terminal = self.reward.c
            return
        dr = min(1.0, self.delivered_total / p.dv_init)
        used = sum(c.volume for x, c in zip(self.decisions, p.contacts) if x)
        ct = used / self.V if self.V > 0 else 0.0
        self.terminal = terminal_reward(dr, ct, self.reward.c, p.dv_init)

    @property
    def episode_return(self) -> float:
        return math.fsum(self.step_rewards) + self.terminal

    def result(self, scheme: str = "") -> EpisodeResult:
        return EpisodeResult.from_run(self.period, self.decisions, self.delivered, self.excess, self.seed,
                                      rl_return=self.episode_return, scheme=scheme)
