"""Generators shared by the module and acceptance tests."""

from __future__ import annotations

import numpy as np

from preftune.arx import N_ARX, N_INPUTS, ArxModel, IoWindow, NormStats
from preftune.kernels import ParamPoint
from preftune.mpc import (
    BoundsSchedule,
    HorizonForecasts,
    MpcConfig,
    build_bounds_schedule,
)


def recoverable_arx_truth(rng: np.random.Generator
                          ) -> tuple[np.ndarray, np.ndarray]:
    """Raw-coefficient ground truth the regression can match exactly.

    Output lags are positive and sum to one, so any constant level is a
    fixed point and mean-centering the data costs nothing; paired with
    exactly centered inputs the regression residual is zero and the
    coefficients are identified without bias.
    """
    a = rng.uniform(0.05, 1.0, N_ARX)
    a = a / a.sum()
    b = rng.normal(0.0, 0.05, (N_INPUTS, N_ARX))
    return a, b


def simulate_arx_series(a: np.ndarray, b: np.ndarray, n: int,
                        rng: np.random.Generator, noise: float = 0.0
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Self-generated (y, u) series from raw coefficients, intercept zero."""
    u = rng.normal(0.0, 1.0, (N_INPUTS, n))
    u -= u.mean(axis=1, keepdims=True)
    y = np.empty(n)
    y[:N_ARX] = 20.0 + rng.normal(0.0, 0.1, N_ARX)
    for k in range(N_ARX, n):
        lags_y = y[k - N_ARX:k][::-1]
        lags_u = u[:, k - N_ARX:k][:, ::-1]
        y[k] = float(a @ lags_y + np.sum(b * lags_u))
        if noise > 0.0:
            y[k] += float(rng.normal(0.0, noise))
    return y, u


def random_mpc_instance(rng: np.random.Generator, horizon: int = 8,
                        ) -> tuple[ArxModel, IoWindow, HorizonForecasts,
                                   BoundsSchedule, MpcConfig]:
    """A solvable random horizon problem around a plausible thermal model."""
    a = rng.uniform(0.0, 1.0, N_ARX)
    a = 0.92 * a / a.sum()
    a[0] += 0.05
    b = np.zeros((N_INPUTS, N_ARX))
    b[0] = np.abs(rng.normal(0.15, 0.05, N_ARX)) / N_ARX * 3.0
    b[1] = np.abs(rng.normal(0.02, 0.01, N_ARX)) / N_ARX * 3.0
    b[2] = np.abs(rng.normal(0.001, 0.0005, N_ARX)) / N_ARX * 3.0
    stats = NormStats(np.array([21.0, 0.4, 2.0, 120.0]),
                      np.array([2.0, 0.3, 4.0, 150.0]))
    model = ArxModel(a, b, stats)

    y_hist = 21.0 + rng.normal(0.0, 0.8, N_ARX)
    u_hist = np.vstack([rng.uniform(0.0, 1.0, N_ARX),
                        rng.uniform(-5.0, 10.0, N_ARX),
                        rng.uniform(0.0, 300.0, N_ARX)])
    window = IoWindow(y_hist, u_hist)

    cfg = MpcConfig(horizon=horizon)
    price = rng.uniform(0.0889, 0.1019, horizon + 1)
    forecasts = HorizonForecasts(
        price=price,
        outdoor=rng.uniform(-5.0, 10.0, horizon),
        solar=rng.uniform(0.0, 300.0, horizon),
        hours=(np.arange(1, horizon + 1) * 0.25 + rng.uniform(0, 24)) % 24.0,
    )
    theta = ParamPoint(rng.uniform(0.0889, 0.1019), rng.uniform(20.0, 26.0))
    sched = build_bounds_schedule(forecasts.price[1:], forecasts.hours,
                                  theta, cfg)
    return model, window, forecasts, sched, cfg
