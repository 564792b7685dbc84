"""ARX identification for the indoor-temperature prediction model.

The model predicts the next indoor temperature from the last 10 samples
of the output and of each of 3 inputs (valve position, outdoor
temperature, solar irradiance).  Fitting runs ridge regression in
per-channel normalized coordinates; predictions de-normalize on output.

Window convention: histories are stored oldest-first and aligned, so
``y_hist[-1]`` and ``u_hist[:, -1]`` both refer to the current sample
time k.  Predicting y_{k+1} therefore consumes the whole window.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

N_ARX = 10
N_INPUTS = 3
CHANNEL_NAMES = ("y", "valve", "outdoor", "solar")


class IdentificationError(ValueError):
    """Raised when the training data cannot support the regression."""


@dataclass(frozen=True)
class NormStats:
    """Per-channel mean/scale; order (y, valve, outdoor, solar)."""

    mean: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        if self.mean.shape != (1 + N_INPUTS,) or self.scale.shape != (1 + N_INPUTS,):
            raise ValueError("norm stats need one entry per channel")


@dataclass(frozen=True)
class ArxModel:
    """Identified predictor: y_{k+1} = a . y-lags + sum_i b_i . u_i-lags.

    Coefficients live in normalized coordinates; ``a[j-1]`` multiplies
    the lag-j output sample (a[0] the most recent).
    """

    a: np.ndarray
    b: np.ndarray
    norm_stats: NormStats

    def __post_init__(self):
        if self.a.shape != (N_ARX,):
            raise ValueError(f"a must have length {N_ARX}")
        if self.b.shape != (N_INPUTS, N_ARX):
            raise ValueError(f"b must be {N_INPUTS}x{N_ARX}")

    def raw_coefficients(self) -> tuple[np.ndarray, np.ndarray, float]:
        """Equivalent recursion on raw units: (a_raw, b_raw, intercept).

        y_{k+1} = intercept + a_raw . y-lags + sum b_raw[i] . u_i-lags,
        all in physical units.  The output-lag coefficients are shared
        with the normalized model because target and lags use the same
        scale.
        """
        st = self.norm_stats
        a_raw = self.a.copy()
        b_raw = self.b * (st.scale[0] / st.scale[1:])[:, None]
        intercept = float(st.mean[0] * (1.0 - self.a.sum())
                          - np.sum(b_raw * st.mean[1:, None]))
        return a_raw, b_raw, intercept


@dataclass
class IoWindow:
    """Aligned 10-sample histories, oldest first."""

    y_hist: np.ndarray
    u_hist: np.ndarray

    def __post_init__(self):
        self.y_hist = np.asarray(self.y_hist, dtype=float)
        self.u_hist = np.asarray(self.u_hist, dtype=float)
        if self.y_hist.shape != (N_ARX,):
            raise ValueError(f"y_hist must have length {N_ARX}")
        if self.u_hist.shape != (N_INPUTS, N_ARX):
            raise ValueError(f"u_hist must be {N_INPUTS}x{N_ARX}")
        if not (np.all(np.isfinite(self.y_hist))
                and np.all(np.isfinite(self.u_hist))):
            raise ValueError("window contains non-finite samples")

    @classmethod
    def from_series(cls, y: np.ndarray, u: np.ndarray) -> "IoWindow":
        """Window holding the most recent 10 samples of each series."""
        y = np.asarray(y, dtype=float)
        u = np.asarray(u, dtype=float)
        if y.shape[0] < N_ARX:
            raise ValueError("series shorter than the window")
        return cls(y[-N_ARX:].copy(), u[:, -N_ARX:].copy())

    def advance(self, y_next: float, u_now: np.ndarray) -> "IoWindow":
        """Shifted window after measuring y_next with inputs u at time k+1."""
        return IoWindow(np.append(self.y_hist[1:], y_next),
                        np.column_stack([self.u_hist[:, 1:], u_now]))


def excitation_control(y: float, lower: float, upper: float,
                       rng: np.random.Generator) -> int:
    """Randomized bang-bang valve command for identification days.

    Above the band the valve switches off, below it switches on, inside
    it is toggled by a fair coin from ``rng``.
    """
    if not lower < upper:
        raise ValueError(f"need lower < upper, got ({lower}, {upper})")
    if y > upper:
        return 0
    if y < lower:
        return 1
    return int(rng.integers(0, 2))


@dataclass(frozen=True)
class FitReport:
    """Training-fit quality, logged alongside the returned model."""

    train_mae: float
    train_rmse: float
    n_rows: int
    ridge: float


def _regression_rows(y_n: np.ndarray, u_n: np.ndarray):
    """Design matrix/targets over all complete windows (normalized data)."""
    n = y_n.shape[0]
    rows = n - N_ARX
    yw = np.lib.stride_tricks.sliding_window_view(y_n[:-1], N_ARX)[:rows]
    cols = [yw[:, ::-1]]
    for i in range(N_INPUTS):
        uw = np.lib.stride_tricks.sliding_window_view(u_n[i, :-1], N_ARX)[:rows]
        cols.append(uw[:, ::-1])
    X = np.hstack(cols)
    t = y_n[N_ARX:]
    return X, t


def fit_arx(y: np.ndarray, u: np.ndarray, ridge: float = 1e-3
            ) -> tuple[ArxModel, FitReport]:
    """Ridge regression of the next output on 10 lags of every channel.

    ``y`` is the indoor temperature series, ``u`` the aligned 3xn input
    series.  Normalization statistics come from this data; a channel
    with zero variance cannot be normalized and aborts the fit.
    """
    y = np.asarray(y, dtype=float)
    u = np.asarray(u, dtype=float)
    if u.shape != (N_INPUTS, y.shape[0]):
        raise ValueError(f"u must be {N_INPUTS}x{y.shape[0]}, got {u.shape}")
    if y.shape[0] < N_ARX + 40:
        raise IdentificationError(
            f"need at least {N_ARX + 40} samples, got {y.shape[0]}")
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")

    channels = np.vstack([y[None, :], u])
    mean = channels.mean(axis=1)
    scale = channels.std(axis=1)
    for name, s in zip(CHANNEL_NAMES, scale):
        if s == 0.0:
            raise IdentificationError(f"constant channel: {name}")
    norm = (channels - mean[:, None]) / scale[:, None]

    X, t = _regression_rows(norm[0], norm[1:])
    coeffs = np.linalg.solve(X.T @ X + ridge * np.eye(X.shape[1]), X.T @ t)
    model = ArxModel(coeffs[:N_ARX].copy(),
                     coeffs[N_ARX:].reshape(N_INPUTS, N_ARX).copy(),
                     NormStats(mean, scale))
    resid = (t - X @ coeffs) * scale[0]
    report = FitReport(float(np.mean(np.abs(resid))),
                       float(np.sqrt(np.mean(resid**2))),
                       t.shape[0], ridge)
    log.info("arx fit: %d rows, train MAE %.4f C, RMSE %.4f C",
             report.n_rows, report.train_mae, report.train_rmse)
    return model, report


def predict_one_step(m: ArxModel, w: IoWindow) -> float:
    """Next-sample prediction in deg C from a complete window."""
    st = m.norm_stats
    y_n = (w.y_hist - st.mean[0]) / st.scale[0]
    u_n = (w.u_hist - st.mean[1:, None]) / st.scale[1:, None]
    acc = float(m.a @ y_n[::-1]) + float(np.sum(m.b * u_n[:, ::-1]))
    return st.mean[0] + st.scale[0] * acc


def rollout_open_loop(m: ArxModel, w0: IoWindow,
                      future_inputs: np.ndarray) -> np.ndarray:
    """Self-fed multi-step prediction.

    ``future_inputs`` column h holds the inputs at time k+1+h; the
    horizon equals its column count.  Prediction h feeds on earlier
    predictions, so only columns before the last can influence the
    result (the step-H output depends on inputs through time k+H-1).
    """
    future_inputs = np.atleast_2d(np.asarray(future_inputs, dtype=float))
    if future_inputs.shape[0] != N_INPUTS:
        raise ValueError(f"future_inputs must have {N_INPUTS} rows")
    horizon = future_inputs.shape[1]
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    w = IoWindow(w0.y_hist.copy(), w0.u_hist.copy())
    out = np.empty(horizon)
    for h in range(horizon):
        out[h] = predict_one_step(m, w)
        if h + 1 < horizon:
            w = w.advance(out[h], future_inputs[:, h])
    return out


def save_model(m: ArxModel, report: FitReport | None, path) -> None:
    """Plain-text coefficient file (channel names, norm stats, 40 coeffs)."""
    def fmt(vec):
        return " ".join(repr(float(v)) for v in vec)

    lines = [
        "# arx model v1",
        f"n_arx {N_ARX}",
        "channels " + " ".join(CHANNEL_NAMES),
        "mean " + fmt(m.norm_stats.mean),
        "scale " + fmt(m.norm_stats.scale),
        "a " + fmt(m.a),
    ]
    for i, name in enumerate(CHANNEL_NAMES[1:]):
        lines.append(f"b_{name} " + fmt(m.b[i]))
    if report is not None:
        lines.append(f"train_mae {report.train_mae!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> ArxModel:
    """Read a ``save_model`` file back into an ArxModel."""
    fields: dict[str, list[str]] = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, *rest = line.split()
            fields[key] = rest
    if int(fields["n_arx"][0]) != N_ARX:
        raise ValueError(f"unsupported model order {fields['n_arx'][0]}")
    if tuple(fields["channels"]) != CHANNEL_NAMES:
        raise ValueError(f"unexpected channels {fields['channels']}")
    stats = NormStats(np.array([float(v) for v in fields["mean"]]),
                      np.array([float(v) for v in fields["scale"]]))
    a = np.array([float(v) for v in fields["a"]])
    b = np.vstack([[float(v) for v in fields[f"b_{name}"]]
                   for name in CHANNEL_NAMES[1:]])
    return ArxModel(a, b, stats)
