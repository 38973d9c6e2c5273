"""On-off optical channel: link availability sampling and packet transfer.

All randomness lives in :func:`sample_link_availability`; :func:`transfer`
is a deterministic function of the availability count.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Contact, DownlinkPeriod


@dataclass(frozen=True)
class TransferOutcome:
    delivered: float
    excess_energy: float
    dv_after: float
    availability: int = 0


def sample_link_availability(cc: float, volume: int, lr: int, rng: np.random.Generator) -> int:
    """Count samples whose Uniform(0,1) draw strictly exceeds the cloud cover."""
    n = int(volume) * int(lr)
    if n <= 0:
        return 0
    return int(np.count_nonzero(cc < rng.random(n)))


def transfer(ca: int, dv: float, volume: int, lr: int, rate: float) -> TransferOutcome:
    """Deliver ``rate`` packets per available sample until the buffer empties.

    Each of the ``ca`` samples moves ``rate`` packets while at least that much
    remains; the sample that finds less than ``rate`` flushes the remainder.
    That loop sums to ``min(dv, ca*rate)``. Every unsent packet slot of the
    contact, available or not, is counted as excess energy.
    """
    if not 0 <= ca <= volume * lr:
        raise ValueError(f"availability {ca} outside [0, {volume * lr}]")
    if dv < 0:
        raise ValueError("dv must be non-negative")
    full = ca * rate
    if dv >= full:
        d = full
        dv_after = dv - full
    else:
        d = dv
        dv_after = 0.0
    return TransferOutcome(delivered=d, excess_energy=volume - d, dv_after=dv_after, availability=ca)


def attempt_contact(contact: Contact, dv: float, period: DownlinkPeriod,
                    rng: np.random.Generator) -> TransferOutcome:
    """Use a contact: realise its availability from the TRUE cloud cover, then transfer."""
    lr = period.link_sample_rate
    ca = sample_link_availability(contact.cloud_cover, contact.volume, lr, rng)
    return transfer(ca, dv, contact.volume, lr, period.data_rate_packets_per_sample)
