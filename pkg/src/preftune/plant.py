"""Surrogate single-zone building, weather/price generation, baseline.

The thermal model is a two-capacity RC network (zone air + wall mass):

    C_z dT_z/dt = (T_w - T_z)/R_zw + valve*Q_max + g*solar
    C_w dT_w/dt = (T_out - T_w)/R_wo + (T_z - T_w)/R_zw

integrated with 60 s forward-Euler substeps inside each 900 s control
step, with inputs held constant across the step.  That makes the
sampled dynamics exactly linear time-invariant, so a lag-10 linear
predictor can represent them exactly.

Constants target the documented behavior rather than any real building:
slow cooling time constant around 8-9 hours, full heating able to hold
the zone about 35 K above outdoor, solar worth up to ~1 kW.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .seeding import STREAM_WEATHER, substream

log = logging.getLogger(__name__)

STEP_SECONDS = 900.0
STEPS_PER_DAY = 96
PRICE_RANGE = (0.0889, 0.1019)


@dataclass(frozen=True)
class PlantParams:
    """RC constants; overridable through the run config."""

    c_zone: float = 2.0e6
    c_wall: float = 4.0e6
    r_zone_wall: float = 0.002
    r_wall_out: float = 0.005
    q_max_w: float = 5000.0
    solar_gain_m2: float = 2.0
    substep_seconds: float = 60.0


DEFAULT_PLANT = PlantParams()


@dataclass(frozen=True)
class PlantState:
    zone_temp: float
    wall_temp: float
    clock_s: float = 0.0

    def __post_init__(self):
        for name in ("zone_temp", "wall_temp", "clock_s"):
            object.__setattr__(self, name, float(getattr(self, name)))


@dataclass(frozen=True)
class WeatherDay:
    """Per-step traces for one day (96 samples at 900 s)."""

    outdoor: np.ndarray
    solar: np.ndarray
    price: np.ndarray
    day_index: int = 0

    def __post_init__(self):
        for name in ("outdoor", "solar", "price"):
            if getattr(self, name).shape != (STEPS_PER_DAY,):
                raise ValueError(f"{name} trace must have {STEPS_PER_DAY} steps")

    @property
    def mean_outdoor(self) -> float:
        return float(self.outdoor.mean())


def step_hours() -> np.ndarray:
    """Hour-of-day at the start of each step."""
    return np.arange(STEPS_PER_DAY) * (STEP_SECONDS / 3600.0)


def hour_of_day(time_s: float) -> float:
    return (time_s / 3600.0) % 24.0


def generate_weather(seed: int, day_index: int) -> WeatherDay:
    """Deterministic weather and price traces for one day.

    Outdoor: a winter-to-spring ramp anchored at -5 degC on day 35
    rising 0.15 degC/day, a 3 degC diurnal sinusoid, and AR(1) noise;
    the daily mean is shifted into [-10, 10] if the noise pushes it out.
    Solar: half-sine daylight profile scaled by a daily cloud factor and
    per-step flicker.  Price: off-peak floor with morning and evening
    on-peak excursions plus jitter, clipped to the market interval.
    """
    if day_index < 0:
        raise ValueError("day_index must be nonnegative")
    rng = substream(seed, STREAM_WEATHER, day_index)
    hours = step_hours()

    base = -5.0 + 0.15 * (day_index - 35)
    diurnal = 3.0 * np.sin(2.0 * np.pi * (hours - 9.0) / 24.0)
    ar = np.empty(STEPS_PER_DAY)
    ar[0] = rng.normal(0.0, 0.9)
    innov = rng.normal(0.0, 0.4, STEPS_PER_DAY - 1)
    for k in range(1, STEPS_PER_DAY):
        ar[k] = 0.9 * ar[k - 1] + innov[k - 1]
    outdoor = base + diurnal + ar
    mean = outdoor.mean()
    if mean > 10.0:
        outdoor = outdoor - (mean - 10.0)
    elif mean < -10.0:
        outdoor = outdoor + (-10.0 - mean)

    daylight = np.clip(np.sin(np.pi * (hours - 7.0) / 12.0), 0.0, None)
    cloud = rng.uniform(0.3, 1.0)
    flicker = rng.uniform(0.85, 1.0, STEPS_PER_DAY)
    solar = 500.0 * daylight * cloud * flicker

    lo, hi = PRICE_RANGE
    span = hi - lo
    peak = np.zeros(STEPS_PER_DAY)
    morning = (hours >= 7.0) & (hours < 10.0)
    evening = (hours >= 17.0) & (hours < 20.0)
    peak[morning] = np.sin(np.pi * (hours[morning] - 7.0) / 3.0)
    peak[evening] = np.sin(np.pi * (hours[evening] - 17.0) / 3.0)
    levels = rng.uniform(0.75, 1.0, 2)
    shape = np.where(morning, peak * levels[0], peak * levels[1])
    jitter = np.empty(STEPS_PER_DAY)
    jitter[0] = rng.normal(0.0, 0.001)
    jinn = rng.normal(0.0, 0.0006, STEPS_PER_DAY - 1)
    for k in range(1, STEPS_PER_DAY):
        jitter[k] = 0.8 * jitter[k - 1] + jinn[k - 1]
    price = np.clip(lo + span * shape + jitter, lo, hi)

    return WeatherDay(outdoor, solar, price, day_index)


def plant_step(s: PlantState, valve: float, outdoor: float, solar: float,
               params: PlantParams = DEFAULT_PLANT) -> PlantState:
    """Advance one 900 s control step with inputs held constant."""
    if not 0.0 <= valve <= 1.0 + 1e-9:
        raise ValueError(f"valve {valve} outside [0, 1]")
    tz, tw = s.zone_temp, s.wall_temp
    dt = params.substep_seconds
    n_sub = int(round(STEP_SECONDS / dt))
    heat = valve * params.q_max_w + params.solar_gain_m2 * solar
    for _ in range(n_sub):
        dz = ((tw - tz) / params.r_zone_wall + heat) / params.c_zone
        dw = ((outdoor - tw) / params.r_wall_out
              + (tz - tw) / params.r_zone_wall) / params.c_wall
        tz += dt * dz
        tw += dt * dw
    if not -30.0 <= tz <= 50.0:
        log.warning("zone temperature %.1f clamped to sanity range", tz)
        tz = min(max(tz, -30.0), 50.0)
    if not -30.0 <= tw <= 50.0:
        log.warning("wall temperature %.1f clamped to sanity range", tw)
        tw = min(max(tw, -30.0), 50.0)
    return PlantState(tz, tw, s.clock_s + STEP_SECONDS)


class BaselineController:
    """Hysteresis thermostat: 22 degC in working hours, 19 otherwise.

    Heat switches on half a degree below the setpoint, off half a
    degree above, and holds its previous command inside the band.
    """

    def __init__(self, day_start_hour: float = 8.0, day_end_hour: float = 18.0,
                 day_setpoint: float = 22.0, night_setpoint: float = 19.0,
                 band: float = 0.5):
        self.day_start_hour = day_start_hour
        self.day_end_hour = day_end_hour
        self.day_setpoint = day_setpoint
        self.night_setpoint = night_setpoint
        self.band = band
        self.prev = 0

    def command(self, clock_s: float, y: float) -> int:
        h = hour_of_day(clock_s)
        sp = (self.day_setpoint
              if self.day_start_hour <= h < self.day_end_hour
              else self.night_setpoint)
        if y < sp - self.band:
            self.prev = 1
        elif y > sp + self.band:
            self.prev = 0
        return self.prev

    def __call__(self, step: int, time_s: float, y: float,
                 outdoor: float, solar: float, price: float) -> float:
        return float(self.command(time_s, y))


@dataclass
class TrajectoryLog:
    """One day of closed-loop records, one row per 900 s step.

    ``y`` holds the measured zone temperature at the start of the step,
    i.e. what the controller saw when choosing ``valve``.
    """

    day_index: int
    y: np.ndarray
    valve: np.ndarray
    q_kw: np.ndarray
    price: np.ndarray
    outdoor: np.ndarray
    solar: np.ndarray

    def __post_init__(self):
        n = self.y.shape[0]
        for name in ("valve", "q_kw", "price", "outdoor", "solar"):
            if getattr(self, name).shape != (n,):
                raise ValueError("log arrays must have equal length")

    def energy_kwh(self) -> float:
        return float(np.sum(self.q_kw) * (STEP_SECONDS / 3600.0))


def simulate_day(controller, state: PlantState, weather: WeatherDay,
                 params: PlantParams = DEFAULT_PLANT
                 ) -> tuple[TrajectoryLog, PlantState]:
    """Run 96 control steps; returns the log and the carry-over state.

    ``controller(step, time_s, y, outdoor, solar, price) -> valve``.
    Controller exceptions are re-raised with the failing step index.
    """
    n = STEPS_PER_DAY
    y = np.empty(n)
    valve = np.empty(n)
    for k in range(n):
        y[k] = state.zone_temp
        try:
            v = float(controller(k, state.clock_s, y[k],
                                 float(weather.outdoor[k]),
                                 float(weather.solar[k]),
                                 float(weather.price[k])))
        except Exception as exc:
            raise RuntimeError(
                f"controller failed at step {k} of day "
                f"{weather.day_index}: {exc}") from exc
        valve[k] = min(max(v, 0.0), 1.0)
        if abs(valve[k] - v) > 1e-9:
            raise ValueError(f"controller returned valve {v} at step {k}")
        state = plant_step(state, valve[k], float(weather.outdoor[k]),
                           float(weather.solar[k]), params)
    q_kw = valve * (params.q_max_w / 1000.0)
    logd = TrajectoryLog(weather.day_index, y, valve, q_kw,
                         weather.price.copy(), weather.outdoor.copy(),
                         weather.solar.copy())
    return logd, state


def save_log(logd: TrajectoryLog, path) -> None:
    """Tabular text: step, time_s, y, valve, Q_kW, price, T_out, solar."""
    with open(path, "w") as fh:
        fh.write(f"# trajectory day {logd.day_index}\n")
        fh.write("step time_s y valve q_kw price t_out solar\n")
        for k in range(logd.y.shape[0]):
            row = [float(logd.y[k]), float(logd.valve[k]), float(logd.q_kw[k]),
                   float(logd.price[k]), float(logd.outdoor[k]),
                   float(logd.solar[k])]
            fh.write(f"{k} {k * STEP_SECONDS!r} "
                     + " ".join(repr(v) for v in row) + "\n")


def load_log(path) -> TrajectoryLog:
    day_index = 0
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                day_index = int(line.split()[-1])
                continue
            if not line or line.startswith("step"):
                continue
            rows.append([float(v) for v in line.split()[2:]])
    arr = np.array(rows)
    return TrajectoryLog(day_index, arr[:, 0], arr[:, 1], arr[:, 2],
                         arr[:, 3], arr[:, 4], arr[:, 5])
