"""Case-study pipeline: access windows + hourly weather + forecast noise -> periods."""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from functools import lru_cache
from pathlib import Path

import numpy as np

from ..core import Contact, DownlinkPeriod, ValidationError, derive_seed
from .generators import perturb_forecast
from .orbit import ContactWindow, GroundStation, OrbitSpec, compute_contacts
from .weather import WeatherSeries, load_weather_csv, synthetic_weather

CASE_STUDY_ORBIT = OrbitSpec(altitude_km=500.0, eccentricity=0.0, inclination_deg=99.5)
CONTACTS_PER_PERIOD = 10
FORECAST_SD = 0.2

# City-centre coordinates.
STATIONS = {
    "Inuvik": GroundStation("Inuvik", 68.3607, -133.7230, 15.0),
    "Calgary": GroundStation("Calgary", 51.0447, -114.0719, 1045.0),
    "Ottawa": GroundStation("Ottawa", 45.4215, -75.6972, 70.0),
}


@dataclass(frozen=True)
class CaseStudyProfile:
    name: str
    stations: tuple[str, ...]
    year: int


PROFILES = {
    "train": CaseStudyProfile("train", ("Inuvik", "Calgary"), 2023),
    "test": CaseStudyProfile("test", ("Ottawa", "Calgary"), 2024),
}

DV_MODES = ("uniform", "0.1V", "0.5V")


@dataclass(frozen=True)
class PlannedContact:
    window: ContactWindow
    volume: int
    cloud_cover: float


def attach_weather(windows: list[ContactWindow], series: dict[str, WeatherSeries]) -> list[float]:
    """True cloud cover of each window: the hourly value at the hour containing its midpoint."""
    out = []
    for w in windows:
        if w.station not in series:
            raise ValidationError(f"no weather series for station {w.station}")
        out.append(series[w.station].at_hour(w.midpoint))
    return out


@lru_cache(maxsize=8)
def _year_windows(profile: CaseStudyProfile, step_s: float, orbit: OrbitSpec) -> tuple[ContactWindow, ...]:
    stations = [STATIONS[s] for s in profile.stations]
    return tuple(compute_contacts(orbit, stations, datetime(profile.year, 1, 1),
                                  datetime(profile.year + 1, 1, 1), step_s))


def year_weather(profile: CaseStudyProfile, weather_seed: int = 2023,
                 csv_paths: dict[str, str] | None = None) -> dict[str, WeatherSeries]:
    """Weather for every station in the profile; CSVs when given, synthetic otherwise."""
    out = {}
    start = datetime(profile.year, 1, 1)
    hours = int((datetime(profile.year + 1, 1, 1) - start).total_seconds() // 3600)
    for k, name in enumerate(profile.stations):
        if csv_paths and name in csv_paths:
            out[name] = load_weather_csv(Path(csv_paths[name]), station=name)
        else:
            rng = np.random.default_rng([derive_seed(weather_seed, profile.year), k])
            out[name] = synthetic_weather(name, start, hours, rng)
    return out


@dataclass
class CaseStudyScenario:
    profile: str = "test"
    dv_mode: str = "uniform"
    forecast_sd: float = FORECAST_SD
    packet_rate: float = 1.0
    step_s: float = 20.0
    min_duration_s: float = 60.0
    weather_seed: int = 2023
    weather_csv: dict = field(default_factory=dict)
    n_contacts: int = CONTACTS_PER_PERIOD

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ValidationError(f"unknown case-study profile {self.profile!r}")
        if self.dv_mode not in DV_MODES:
            raise ValidationError(f"unknown dv mode {self.dv_mode!r}; expected one of {DV_MODES}")
        prof = PROFILES[self.profile]
        windows = [w for w in _year_windows(prof, self.step_s, CASE_STUDY_ORBIT)
                   if w.duration_s >= self.min_duration_s]
        cc = attach_weather(windows, year_weather(prof, self.weather_seed, self.weather_csv or None))
        self.contacts = [PlannedContact(w, int(round(w.duration_s * self.packet_rate)), c)
                         for w, c in zip(windows, cc)]
        if len(self.contacts) < self.n_contacts:
            raise ValidationError(f"profile {self.profile} has only {len(self.contacts)} contacts")

    def make_period(self, seed: int, rng: np.random.Generator | None = None) -> DownlinkPeriod:
        rng = rng if rng is not None else np.random.default_rng([seed, 0x5C3E])
        return build_case_study_episode(self.contacts, rng, self.dv_mode, self.forecast_sd, self.n_contacts)


def build_case_study_episode(contacts: list[PlannedContact], rng: np.random.Generator, dv_mode: str = "uniform",
                             forecast_sd: float = FORECAST_SD, n: int = CONTACTS_PER_PERIOD) -> DownlinkPeriod:
    """A random run of ``n`` consecutive contacts with noisy forecasts."""
    if len(contacts) < n:
        raise ValidationError(f"need {n} contacts, have {len(contacts)}")
    start = int(rng.integers(0, len(contacts) - n + 1))
    run = contacts[start:start + n]
    V = sum(c.volume for c in run)
    if dv_mode == "uniform":
        dv_init = int(rng.integers(int(np.ceil(0.05 * V)), V + 1))
    else:
        dv_init = int(round(float(dv_mode[:-1]) * V))
    true_cc = np.array([c.cloud_cover for c in run])
    forecast = perturb_forecast(true_cc, forecast_sd, rng)
    period_contacts = tuple(
        Contact(cloud_cover=float(c.cloud_cover), forecast_cloud_cover=float(f), volume=c.volume, index=i,
                start_utc=c.window.start.strftime("%Y-%m-%dT%H:%M:%SZ"),
                end_utc=c.window.end.strftime("%Y-%m-%dT%H:%M:%SZ"))
        for i, (c, f) in enumerate(zip(run, forecast)))
    return DownlinkPeriod(contacts=period_contacts, dv_init=dv_init)
