"""Small builders shared by the test modules."""
from __future__ import annotations

from fsosched.core import Contact, DownlinkPeriod


def make_period(cc, volumes=10, dv_init=0, forecasts=None, lr=1) -> DownlinkPeriod:
    n = len(cc)
    vols = [volumes] * n if isinstance(volumes, int) else list(volumes)
    fc = list(cc) if forecasts is None else list(forecasts)
    contacts = tuple(Contact(cloud_cover=float(c), forecast_cloud_cover=float(f), volume=int(v), index=i)
                     for i, (c, f, v) in enumerate(zip(cc, fc, vols)))
    return DownlinkPeriod(contacts=contacts, dv_init=dv_init, link_sample_rate=lr)
