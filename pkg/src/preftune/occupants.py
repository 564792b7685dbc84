"""Synthetic occupants: latent day utilities and preference answers.

Two occupant kinds score a finished day: the energy occupant by the
negated heating bill, the comfort occupant by a negated discomfort
index combining the classic steady-state thermal-sensation model (PMV
with fixed personal defaults, PPD averaged over the occupied hours)
with an adaptive penalty tying the preferred indoor mean to the
outdoor level.  Feedback compares today's utility with yesterday's,
either exactly or through a logistic link.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .plant import STEP_SECONDS, TrajectoryLog, WeatherDay, step_hours

PPD_FLOOR = 5.0


@dataclass(frozen=True)
class OccupantConfig:
    kind: str = "energy"
    feedback_mode: str = "deterministic"
    utility_scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("energy", "comfort"):
            raise ValueError(f"unknown occupant kind: {self.kind}")
        if self.feedback_mode not in ("deterministic", "logistic"):
            raise ValueError(f"unknown feedback mode: {self.feedback_mode}")
        if self.utility_scale <= 0:
            raise ValueError("utility_scale must be positive")


def default_occupant(kind: str, feedback_mode: str = "deterministic"
                     ) -> OccupantConfig:
    """Defaults: 1 EUR scale for energy, 10 discomfort units for comfort."""
    scale = 1.0 if kind == "energy" else 10.0
    return OccupantConfig(kind, feedback_mode, scale)


@dataclass(frozen=True)
class DayResult:
    """Scored day: bill, discomfort, the temperatures behind them, J."""

    c_t: float
    d_t: float
    t_ave: float
    t_env: float
    utility: float


def energy_cost(logd: TrajectoryLog) -> float:
    """Heating bill in EUR: sum of Q_k p_k over the day at 0.25 h/step."""
    return float(np.sum(logd.q_kw * logd.price) * (STEP_SECONDS / 3600.0))


def pmv(air_temp: float, met: float = 1.2, clo: float = 1.0,
        air_speed: float = 0.1, rel_humidity: float = 50.0,
        mean_radiant: float | None = None) -> float:
    """Steady-state thermal sensation index on the -3..+3 scale.

    Standard heat-balance form: the clothing surface temperature is
    found by damped fixed-point iteration (to 1e-4 degC), then the six
    heat-loss terms set the vote.  Defaults: 1.2 met, 1.0 clo, 0.1 m/s
    air speed, 50% relative humidity, mean radiant = air temperature.
    """
    tr = air_temp if mean_radiant is None else mean_radiant
    pa = rel_humidity * 10.0 * math.exp(16.6536 - 4030.183 / (air_temp + 235.0))
    icl = 0.155 * clo
    m = met * 58.15
    fcl = 1.05 + 0.645 * icl if icl > 0.078 else 1.0 + 1.29 * icl
    hcf = 12.1 * math.sqrt(air_speed)
    taa = air_temp + 273.0
    tra = tr + 273.0

    p1 = icl * fcl
    p2 = p1 * 3.96
    p3 = p1 * 100.0
    p4 = p1 * taa
    p5 = 308.7 - 0.028 * m + p2 * (tra / 100.0) ** 4
    xn = (taa + (35.5 - air_temp) / (3.5 * icl + 0.1)) / 100.0
    xf = xn
    hc = hcf
    eps = 1e-6
    for it in range(150):
        xf = (xf + xn) / 2.0
        hcn = 2.38 * abs(100.0 * xf - taa) ** 0.25
        hc = max(hcf, hcn)
        xn = (p5 + p4 * hc - p2 * xf**4) / (100.0 + p3 * hc)
        if abs(xn - xf) <= eps:
            break
    else:
        raise RuntimeError(f"clothing-surface iteration stalled at {air_temp} C")
    tcl = 100.0 * xn - 273.0

    hl1 = 3.05e-3 * (5733.0 - 6.99 * m - pa)
    hl2 = 0.42 * (m - 58.15) if m > 58.15 else 0.0
    hl3 = 1.7e-5 * m * (5867.0 - pa)
    hl4 = 0.0014 * m * (34.0 - air_temp)
    hl5 = 3.96 * fcl * (xn**4 - (tra / 100.0) ** 4)
    hl6 = fcl * hc * (tcl - tr)
    ts = 0.303 * math.exp(-0.036 * m) + 0.028
    return ts * (m - hl1 - hl2 - hl3 - hl4 - hl5 - hl6)


def ppd(pmv_value: float) -> float:
    """Predicted percentage dissatisfied; even in PMV with floor 5."""
    v = float(pmv_value)
    return 100.0 - 95.0 * math.exp(-0.03353 * v**4 - 0.2179 * v**2)


def discomfort(logd: TrajectoryLog, weather: WeatherDay,
               day_start_hour: float = 8.0, day_end_hour: float = 18.0
               ) -> tuple[float, float, float]:
    """Daily discomfort d_t and the (T_ave, T_env) pair behind it.

    d_t is the daytime mean of ppd(pmv(y_k)) plus the adaptive penalty
    100 * (T_ave - (T_env + 20))^2, with T_ave the daytime mean indoor
    temperature and T_env the full-day mean outdoor temperature.
    """
    hours = step_hours()
    mask = (hours >= day_start_hour) & (hours < day_end_hour)
    if not np.any(mask):
        raise ValueError("empty daytime window")
    ppd_mean = float(np.mean([ppd(pmv(t)) for t in logd.y[mask]]))
    t_ave = float(np.mean(logd.y[mask]))
    t_env = float(np.mean(weather.outdoor))
    d_t = ppd_mean + 100.0 * (t_ave - (t_env + 20.0)) ** 2
    return d_t, t_ave, t_env


def evaluate_day(logd: TrajectoryLog, weather: WeatherDay,
                 cfg: OccupantConfig, day_start_hour: float = 8.0,
                 day_end_hour: float = 18.0) -> DayResult:
    """Score one finished day under the configured occupant."""
    c_t = energy_cost(logd)
    d_t, t_ave, t_env = discomfort(logd, weather, day_start_hour, day_end_hour)
    utility = -c_t if cfg.kind == "energy" else -d_t
    return DayResult(c_t, d_t, t_ave, t_env, utility)


def preference_feedback(j_now: float, j_prev: float, cfg: OccupantConfig,
                        rng: np.random.Generator | None = None) -> int:
    """Answer "was today at least as good as yesterday?".

    Deterministic mode returns the indicator of J_now >= J_prev (ties
    prefer today).  Logistic mode draws Bernoulli of the scaled utility
    difference through the logistic function.
    """
    if cfg.feedback_mode == "deterministic":
        return int(j_now >= j_prev)
    if rng is None:
        raise ValueError("logistic feedback needs an rng")
    p = 1.0 / (1.0 + math.exp(-(j_now - j_prev) / cfg.utility_scale))
    return int(rng.random() < p)
