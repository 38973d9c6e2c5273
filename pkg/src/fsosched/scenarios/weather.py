"""Hourly cloud-cover series: CSV ingestion and a synthetic stand-in generator."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from ..core import ValidationError

WEATHER_HEADER = ("timestamp_utc", "cloud_cover_percent")


@dataclass(frozen=True)
class WeatherSeries:
    station: str
    timestamps: tuple[datetime, ...]
    cloud_cover: np.ndarray

    def __post_init__(self):
        if len(self.timestamps) != len(self.cloud_cover):
            raise ValidationError("timestamps and values differ in length")
        if any(b <= a for a, b in zip(self.timestamps, self.timestamps[1:])):
            raise ValidationError(f"{self.station}: timestamps must be strictly increasing")
        cc = np.asarray(self.cloud_cover, dtype=float)
        if cc.size and (cc.min() < 0 or cc.max() > 1):
            raise ValidationError(f"{self.station}: cloud cover outside [0, 1]")
        object.__setattr__(self, "cloud_cover", cc)
        object.__setattr__(self, "_lookup", {t: i for i, t in enumerate(self.timestamps)})

    def at_hour(self, when: datetime) -> float:
        """Value of the hourly sample whose hour contains ``when``."""
        hour = when.replace(minute=0, second=0, microsecond=0)
        i = self._lookup.get(hour)
        if i is None:
            raise ValidationError(f"{self.station}: no weather sample covering {when.isoformat()}")
        return float(self.cloud_cover[i])


def parse_utc(text: str) -> datetime:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is not None:
        dt = dt.astimezone(timezone.utc).replace(tzinfo=None)
    return dt


def load_weather_csv(path: str | Path, station: str | None = None) -> WeatherSeries:
    path = Path(path)
    station = station or path.stem
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValidationError(f"{path}: empty weather file")
    if tuple(h.strip() for h in rows[0]) != WEATHER_HEADER:
        raise ValidationError(f"{path}:1: expected header {','.join(WEATHER_HEADER)}")
    times, values = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or not "".join(row).strip():
            continue
        if len(row) != 2:
            raise ValidationError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
        try:
            t = parse_utc(row[0])
            pct = float(row[1])
        except ValueError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from None
        if not 0.0 <= pct <= 100.0:
            raise ValidationError(f"{path}:{lineno}: cloud cover {pct} outside [0, 100]")
        if times and t <= times[-1]:
            raise ValidationError(f"{path}:{lineno}: timestamp {row[0]} is not after the previous row")
        times.append(t)
        values.append(pct / 100.0)
    if not times:
        raise ValidationError(f"{path}: no data rows")
    return WeatherSeries(station=station, timestamps=tuple(times), cloud_cover=np.array(values))


def write_weather_csv(path: str | Path, series: WeatherSeries) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(WEATHER_HEADER)
        for t, cc in zip(series.timestamps, series.cloud_cover):
            w.writerow([t.strftime("%Y-%m-%dT%H:%MZ"), f"{100.0 * cc:.1f}"])


@dataclass(frozen=True)
class SyntheticWeatherParams:
    """Seasonal sinusoid plus hourly AR(1) anomaly, clipped to [0, 1]."""

    mean: float = 0.6
    seasonal_amplitude: float = 0.1
    peak_day: int = 350
    ar_coefficient: float = 0.97
    anomaly_sd: float = 0.45
    clear_sky_floor: float = 0.0


# Not climatology; rough cloudiness ordering for the three case-study sites.
SYNTHETIC_SITES = {
    "Inuvik": SyntheticWeatherParams(mean=0.70, seasonal_amplitude=0.10, peak_day=280),
    "Calgary": SyntheticWeatherParams(mean=0.50, seasonal_amplitude=0.08, peak_day=150),
    "Ottawa": SyntheticWeatherParams(mean=0.60, seasonal_amplitude=0.10, peak_day=340),
}


def synthetic_weather(station: str, start: datetime, hours: int, rng: np.random.Generator,
                      params: SyntheticWeatherParams | None = None) -> WeatherSeries:
    params = params or SYNTHETIC_SITES.get(station, SyntheticWeatherParams())
    times = tuple(start + timedelta(hours=h) for h in range(hours))
    doy = np.array([t.timetuple().tm_yday + t.hour / 24.0 for t in times])
    seasonal = params.mean + params.seasonal_amplitude * np.cos(2 * np.pi * (doy - params.peak_day) / 365.25)
    phi = params.ar_coefficient
    shocks = rng.normal(0.0, params.anomaly_sd * np.sqrt(1 - phi * phi), size=hours)
    anomaly = np.empty(hours)
    prev = rng.normal(0.0, params.anomaly_sd)
    for h in range(hours):
        prev = phi * prev + shocks[h]
        anomaly[h] = prev
    cc = np.clip(seasonal + anomaly, params.clear_sky_floor, 1.0)
    return WeatherSeries(station=station, timestamps=times, cloud_cover=cc)
