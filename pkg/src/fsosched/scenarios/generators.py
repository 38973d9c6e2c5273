"""Synthetic downlink periods for the general simulations."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Contact, DownlinkPeriod, ValidationError

VARIABLE_DV_FRACTIONS = (0.1, 0.5)
VARIABLE_CC_MEANS = (0.8, 0.5, 0.3)
VARIABLE_CC_SD = 0.2


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str = "uniform"
    n_contacts: int = 10
    contact_volume: int = 10
    dv_min_fraction: float = 0.05
    dv_max_fraction: float = 1.0
    dv_fraction: float = 0.5
    cc_mean: float = 0.5
    cc_sd: float = VARIABLE_CC_SD
    forecast_noise_sd: float = 0.0
    profile: str = "test"
    path: str = ""
    link_sample_rate: int = 1
    dv_mode: str = "uniform"
    weather_csv: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if self.kind not in ("uniform", "variable", "case_study", "file"):
            raise ValidationError(f"unknown scenario kind {self.kind!r}")
        if self.n_contacts < 0 or self.contact_volume < 0:
            raise ValidationError("n_contacts and contact_volume must be non-negative")
        if not 0.0 <= self.dv_min_fraction <= self.dv_max_fraction:
            raise ValidationError("need 0 <= dv_min_fraction <= dv_max_fraction")
        if self.forecast_noise_sd < 0 or self.cc_sd < 0:
            raise ValidationError("standard deviations must be non-negative")
        if self.kind == "file" and not self.path:
            raise ValidationError("file scenarios need a contact-plan path")
        object.__setattr__(self, "weather_csv", tuple(tuple(p) for p in dict(self.weather_csv).items()))


def perturb_forecast(true_cc, sd: float, rng: np.random.Generator):
    """Clamped Gaussian forecast error around the true cloud cover."""
    true_cc = np.asarray(true_cc, dtype=float)
    if sd == 0:
        return true_cc.copy()
    return np.clip(true_cc + rng.normal(0.0, sd, size=true_cc.shape), 0.0, 1.0)


def _period(cc: np.ndarray, forecast: np.ndarray, volume: int, dv_init: int, lr: int) -> DownlinkPeriod:
    contacts = tuple(Contact(cloud_cover=float(c), forecast_cloud_cover=float(f), volume=volume, index=i)
                     for i, (c, f) in enumerate(zip(cc, forecast)))
    return DownlinkPeriod(contacts=contacts, dv_init=int(dv_init), link_sample_rate=lr)


def gen_uniform_scenario(config: ScenarioConfig, rng: np.random.Generator) -> DownlinkPeriod:
    """Equal contacts, cloud cover ~ U(0,1), dv_init uniform over [5%, 100%] of V."""
    V = config.n_contacts * config.contact_volume
    lo = int(round(config.dv_min_fraction * V))
    hi = int(round(config.dv_max_fraction * V))
    dv_init = int(rng.integers(lo, hi + 1))
    cc = rng.random(config.n_contacts)
    forecast = perturb_forecast(cc, config.forecast_noise_sd, rng)
    return _period(cc, forecast, config.contact_volume, dv_init, config.link_sample_rate)


def gen_variable_scenario(dv_fraction: float, cc_mean: float, rng: np.random.Generator,
                          n_contacts: int = 10, contact_volume: int = 10, cc_sd: float = VARIABLE_CC_SD,
                          link_sample_rate: int = 1) -> DownlinkPeriod:
    """Fixed data volume, cloud cover ~ N(cc_mean, cc_sd) clamped to [0, 1]."""
    V = n_contacts * contact_volume
    dv_init = int(round(dv_fraction * V))
    cc = np.clip(rng.normal(cc_mean, cc_sd, size=n_contacts), 0.0, 1.0)
    return _period(cc, cc.copy(), contact_volume, dv_init, link_sample_rate)
