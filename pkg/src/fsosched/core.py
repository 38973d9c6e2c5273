"""Domain types, seeding discipline and shared bookkeeping quantities.

Cloud cover is always a fraction in [0, 1] inside the package. Percent
values only appear at I/O boundaries (weather CSVs) and are converted there.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

# Stream tags mixed into the seed sequence so that scenario generation,
# channel realisation and agent exploration never share draws.
SCENARIO_STREAM = 0x5C3E
CHANNEL_STREAM = 0xC4A1
POLICY_STREAM = 0xA6E7

CONTACT_PLAN_HEADER = (
    "index",
    "start_utc",
    "end_utc",
    "volume_packets",
    "cloud_cover",
    "forecast_cloud_cover",
)


class ValidationError(ValueError):
    """Raised when user-supplied data or configuration is malformed."""


@dataclass(frozen=True)
class Contact:
    cloud_cover: float
    forecast_cloud_cover: float
    volume: int
    index: int
    start_utc: str = ""
    end_utc: str = ""

    def __post_init__(self):
        for name in ("cloud_cover", "forecast_cloud_cover"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0) or math.isnan(value):
                raise ValidationError(f"{name}={value!r} outside [0, 1] (contact {self.index})")
        if self.volume < 0 or int(self.volume) != self.volume:
            raise ValidationError(f"volume must be a non-negative integer, got {self.volume!r}")


@dataclass(frozen=True)
class DownlinkPeriod:
    """One episode's world: an ordered contact sequence plus the data to send.

    ``data_rate_packets_per_sample`` is dr/(lr*pl). Left as ``None`` it
    defaults to ``1/link_sample_rate`` so a fully available contact delivers
    exactly its volume.
    """

    contacts: tuple[Contact, ...]
    dv_init: int
    link_sample_rate: int = 1
    data_rate_packets_per_sample: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "contacts", tuple(self.contacts))
        if self.dv_init < 0:
            raise ValidationError(f"dv_init must be >= 0, got {self.dv_init}")
        if self.link_sample_rate < 1 or int(self.link_sample_rate) != self.link_sample_rate:
            raise ValidationError("link_sample_rate must be an integer >= 1")
        if self.data_rate_packets_per_sample is None:
            object.__setattr__(self, "data_rate_packets_per_sample", 1.0 / self.link_sample_rate)
        elif self.data_rate_packets_per_sample <= 0:
            raise ValidationError("data_rate_packets_per_sample must be positive")
        seen = set()
        for c in self.contacts:
            if c.index in seen:
                raise ValidationError(f"duplicate contact index {c.index}")
            seen.add(c.index)

    @property
    def n_contacts(self) -> int:
        return len(self.contacts)

    @property
    def total_volume(self) -> int:
        return total_volume(self)

    @property
    def volumes(self) -> np.ndarray:
        return np.array([c.volume for c in self.contacts], dtype=float)

    @property
    def forecasts(self) -> np.ndarray:
        return np.array([c.forecast_cloud_cover for c in self.contacts], dtype=float)


@dataclass(frozen=True)
class EpisodeResult:
    decisions: tuple[int, ...]
    delivered_per_contact: tuple[float, ...]
    excess_per_contact: tuple[float, ...]
    volumes: tuple[int, ...]
    dv_init: int
    dv_remaining: float
    delivery_ratio: float
    total_excess_energy: float
    mean_contact_efficiency: float
    seed: int
    rl_return: float | None = None
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def total_volume(self) -> int:
        return int(sum(self.volumes))

    @classmethod
    def from_run(cls, period: DownlinkPeriod, decisions, delivered, excess, seed: int,
                 rl_return: float | None = None, **meta) -> "EpisodeResult":
        decisions = tuple(int(x) for x in decisions)
        delivered = tuple(float(d) for d in delivered)
        excess = tuple(float(e) for e in excess)
        total_d = math.fsum(delivered)
        dv_init = period.dv_init
        used_eff = [d / c.volume for x, d, c in zip(decisions, delivered, period.contacts)
                    if x == 1 and c.volume > 0]
        return cls(
            decisions=decisions,
            delivered_per_contact=delivered,
            excess_per_contact=excess,
            volumes=tuple(c.volume for c in period.contacts),
            dv_init=dv_init,
            dv_remaining=max(0.0, dv_init - total_d),
            delivery_ratio=1.0 if dv_init == 0 else min(1.0, total_d / dv_init),
            total_excess_energy=math.fsum(e for x, e in zip(decisions, excess) if x == 1),
            mean_contact_efficiency=float(np.mean(used_eff)) if used_eff else 1.0,
            seed=int(seed),
            rl_return=rl_return,
            meta=dict(meta),
        )


def total_volume(period: DownlinkPeriod) -> int:
    """V: summed volume of every contact in the period."""
    return int(sum(c.volume for c in period.contacts))


def remaining_capacity(period: DownlinkPeriod, current_contact: int) -> int:
    """CVR after the first ``current_contact`` contacts have gone by."""
    n = period.n_contacts
    if not 0 <= current_contact <= n:
        raise IndexError(f"contact ordinal {current_contact} outside [0, {n}]")
    return total_volume(period) - int(sum(c.volume for c in period.contacts[:current_contact]))


# -- seeding ---------------------------------------------------------------

def derive_seed(master: int, *keys: int) -> int:
    """Split ``master`` into an independent 64-bit seed keyed by ``keys``."""
    seq = np.random.SeedSequence([int(master) & 0xFFFFFFFFFFFFFFFF, *(int(k) for k in keys)])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def episode_seed(master: int, set_index: int, trial_index: int) -> int:
    return derive_seed(master, set_index, trial_index)


def scenario_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([seed, SCENARIO_STREAM])


def channel_rng(seed: int, contact_index: int) -> np.random.Generator:
    """Channel stream for one contact. Keyed by contact index, not call order."""
    return np.random.default_rng([seed, CHANNEL_STREAM, contact_index])


def policy_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([seed, POLICY_STREAM])


# -- contact-plan CSV ------------------------------------------------------

def write_contact_plan(path: str | Path, contacts: Iterable[Contact]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CONTACT_PLAN_HEADER)
        for c in contacts:
            w.writerow([c.index, c.start_utc, c.end_utc, c.volume,
                        repr(float(c.cloud_cover)), repr(float(c.forecast_cloud_cover))])


def read_contact_plan(path: str | Path) -> list[Contact]:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CONTACT_PLAN_HEADER:
            raise ValidationError(f"{path}: expected header {','.join(CONTACT_PLAN_HEADER)}")
        contacts = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CONTACT_PLAN_HEADER):
                raise ValidationError(f"{path}:{lineno}: expected 6 fields, got {len(row)}")
            try:
                idx, start, end, vol, cc, fcc = row
                forecast = float(fcc) if fcc.strip() else float(cc)
                contacts.append(Contact(cloud_cover=float(cc), forecast_cloud_cover=forecast,
                                        volume=int(vol), index=int(idx),
                                        start_utc=start.strip(), end_utc=end.strip()))
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
    if not contacts:
        raise ValidationError(f"{path}: no contacts")
    return contacts


def period_from_plan(contacts: Sequence[Contact], dv_init: int, link_sample_rate: int = 1) -> DownlinkPeriod:
    return DownlinkPeriod(contacts=tuple(contacts), dv_init=dv_init, link_sample_rate=link_sample_rate)
