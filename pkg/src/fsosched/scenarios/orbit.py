"""Two-body circular orbit propagation and ground-station access windows.

No J2, no drag, spherical Earth with uniform rotation. Good to about a
minute on pass timing over a day, which is plenty for building contact
sequences.
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta

import numpy as np

from ..core import ValidationError

MU_EARTH = 398600.4418  # km^3 / s^2
R_EARTH = 6378.137  # km
OMEGA_EARTH = 7.2921159e-5  # rad / s


@dataclass(frozen=True)
class OrbitSpec:
    altitude_km: float = 500.0
    eccentricity: float = 0.0
    inclination_deg: float = 99.5
    raan_deg: float = 0.0
    true_anomaly_deg: float = 0.0
    arg_periapsis_deg: float = 0.0

    def __post_init__(self):
        if self.eccentricity != 0:
            raise ValidationError("only circular orbits (eccentricity 0) are supported")
        if self.altitude_km <= 0:
            raise ValidationError("altitude must be positive")

    @property
    def semi_major_axis(self) -> float:
        return R_EARTH + self.altitude_km

    @property
    def mean_motion(self) -> float:
        return float(np.sqrt(MU_EARTH / self.semi_major_axis ** 3))

    @property
    def period_s(self) -> float:
        return 2.0 * np.pi / self.mean_motion


@dataclass(frozen=True)
class GroundStation:
    name: str
    latitude_deg: float
    longitude_deg: float
    altitude_m: float = 0.0
    min_elevation_deg: float = 20.0

    def __post_init__(self):
        if abs(self.latitude_deg) > 90:
            raise ValidationError(f"{self.name}: latitude out of range")
        if not 0 < self.min_elevation_deg < 90:
            raise ValidationError(f"{self.name}: minimum elevation must lie in (0, 90)")

    def ecef(self) -> np.ndarray:
        lat, lon = np.radians(self.latitude_deg), np.radians(self.longitude_deg)
        r = R_EARTH + self.altitude_m / 1000.0
        return r * np.array([np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)])


@dataclass(frozen=True)
class ContactWindow:
    station: str
    start: datetime
    end: datetime
    max_elevation_deg: float

    @property
    def duration_s(self) -> float:
        return (self.end - self.start).total_seconds()

    @property
    def midpoint(self) -> datetime:
        return self.start + (self.end - self.start) / 2


def gmst(when: datetime) -> float:
    """Greenwich mean sidereal angle (radians) for a naive UTC datetime."""
    days = (when - datetime(2000, 1, 1, 12)).total_seconds() / 86400.0
    t = days / 36525.0
    theta = 67310.54841 + t * (876600 * 3600 + 8640184.812866 + t * (0.093104 - t * 6.2e-6))
    return float(np.radians(theta / 240.0) % (2 * np.pi))


def propagate_ecef(orbit: OrbitSpec, epoch: datetime, t: np.ndarray) -> np.ndarray:
    """Earth-fixed satellite positions (km) at ``t`` seconds after ``epoch``; shape (len(t), 3)."""
    t = np.asarray(t, dtype=float)
    inc = np.radians(orbit.inclination_deg)
    raan = np.radians(orbit.raan_deg)
    u = np.radians(orbit.arg_periapsis_deg + orbit.true_anomaly_deg) + orbit.mean_motion * t
    a = orbit.semi_major_axis
    cu, su = np.cos(u), np.sin(u)
    x = a * (np.cos(raan) * cu - np.sin(raan) * su * np.cos(inc))
    y = a * (np.sin(raan) * cu + np.cos(raan) * su * np.cos(inc))
    z = a * su * np.sin(inc)
    theta = gmst(epoch) + OMEGA_EARTH * t
    ct, st = np.cos(theta), np.sin(theta)
    return np.column_stack([ct * x + st * y, -st * x + ct * y, z])


def subpoint(orbit: OrbitSpec, epoch: datetime, t: float = 0.0) -> tuple[float, float]:
    """Geocentric latitude/longitude (degrees) directly below the satellite."""
    x, y, z = propagate_ecef(orbit, epoch, np.array([t]))[0]
    return float(np.degrees(np.arcsin(z / np.sqrt(x * x + y * y + z * z)))), float(np.degrees(np.arctan2(y, x)))


def elevation_deg(sat_ecef: np.ndarray, station: GroundStation) -> np.ndarray:
    site = station.ecef()
    up = site / np.linalg.norm(site)
    rho = sat_ecef - site
    return np.degrees(np.arcsin((rho @ up) / np.linalg.norm(rho, axis=1)))


def _crossing(t0: float, t1: float, e0: float, e1: float, level: float) -> float:
    if e1 == e0:
        return t1
    return t0 + (level - e0) * (t1 - t0) / (e1 - e0)


def compute_contacts(orbit: OrbitSpec, stations: list[GroundStation], start: datetime, end: datetime,
                     step_s: float = 20.0) -> list[ContactWindow]:
    """Access windows with at most one station in view at a time.

    When two stations see the satellite together the one with the higher
    elevation takes the sample. Window edges at the elevation mask are
    linearly interpolated between samples.
    """
    if end <= start:
        raise ValidationError("empty propagation window")
    if not 0 < step_s <= 30:
        raise ValidationError("step must lie in (0, 30] seconds")
    if not stations:
        return []
    t = np.arange(0.0, (end - start).total_seconds() + step_s / 2, step_s)
    sat = propagate_ecef(orbit, start, t)
    el = np.stack([elevation_deg(sat, s) for s in stations], axis=1)
    masks = np.array([s.min_elevation_deg for s in stations])
    margin = np.where(el >= masks, el, -np.inf)
    best = np.argmax(margin, axis=1)
    visible = np.isfinite(margin[np.arange(len(t)), best])
    owner = np.where(visible, best, -1)

    windows = []
    change = np.flatnonzero(np.diff(owner) != 0) + 1
    bounds = np.concatenate(([0], change, [len(t)]))
    for a, b in zip(bounds[:-1], bounds[1:]):
        k = owner[a]
        if k < 0:
            continue
        s = stations[k]
        e = el[:, k]
        if a > 0 and owner[a - 1] == -1:
            t_start = _crossing(t[a - 1], t[a], e[a - 1], e[a], s.min_elevation_deg)
        elif a > 0:
            t_start = 0.5 * (t[a - 1] + t[a])
        else:
            t_start = t[a]
        last = b - 1
        if b < len(t) and owner[b] == -1:
            t_end = _crossing(t[last], t[b], e[last], e[b], s.min_elevation_deg)
        elif b < len(t):
            t_end = 0.5 * (t[last] + t[b])
        else:
            t_end = t[last]
        windows.append(ContactWindow(station=s.name, start=start + timedelta(seconds=float(t_start)),
                                     end=start + timedelta(seconds=float(t_end)),
                                     max_elevation_deg=float(e[a:b].max())))
    return windows
