"""Economic MPC as a linear program with softened temperature bounds.

Decision vector x = [valve_0..valve_{N-1}, slack_1..slack_N,
y_1..y_N]: valve commands for the next N steps, one shared slack per
predicted sample softening both temperature bounds, and the predicted
indoor temperatures themselves.  The N equality rows encode the ARX
recursion (in raw units, via the model's raw-coefficient form) with the
measured 10-sample history threaded into the right-hand side.  The
objective charges each valve-hour at the forecast price times the
nominal radiator energy per step, plus a large per-degree slack weight.

Time alignment: the window ends at the current sample k.  Valve
decision s applies at time k+s; predicted temperature r and its bounds,
prices, and clock refer to time k+r.  The valve slot of the window at
time k is ignored here (it is the quantity being decided).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .arx import ArxModel, IoWindow, N_ARX
from .kernels import ParamPoint

log = logging.getLogger(__name__)


class MpcSolveError(RuntimeError):
    """LP solve did not reach a verified optimum."""


@dataclass(frozen=True)
class MpcConfig:
    """Horizon, sampling, bound levels, and pricing of the controller."""

    horizon: int = 64
    step_seconds: float = 900.0
    slack_weight: float = 1000.0
    upper: float = 26.0
    high_price_lower: float = 20.0
    night_lower: float = 15.0
    day_start_hour: float = 8.0
    day_end_hour: float = 18.0
    energy_per_step_kwh: float = 1.25

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.slack_weight <= 0:
            raise ValueError("slack weight must be positive")
        if not self.day_start_hour < self.day_end_hour:
            raise ValueError("daytime window is empty")

    def is_daytime(self, hour_of_day) -> np.ndarray:
        h = np.asarray(hour_of_day, dtype=float) % 24.0
        return (h >= self.day_start_hour) & (h < self.day_end_hour)


@dataclass(frozen=True)
class BoundsSchedule:
    """Per-step (lower, upper) temperature bounds over the horizon."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        if self.lower.shape != self.upper.shape:
            raise ValueError("bound arrays must align")
        # Equality happens when the tuned setpoint reaches the fixed
        # ceiling; the band degenerates to a soft tracking target.
        if not np.all(self.lower <= self.upper):
            raise ValueError("need lower <= upper at every step")


def build_bounds_schedule(prices: np.ndarray, hours: np.ndarray,
                          theta: ParamPoint, cfg: MpcConfig) -> BoundsSchedule:
    """Price- and clock-dependent bounds for the predicted samples.

    ``prices[r]`` and ``hours[r]`` describe the time of predicted sample
    r+1.  Daytime with price at or below theta1 uses the tuned lower
    setpoint theta2; expensive daytime falls back to the conservative
    level; night relaxes further.  The upper bound is constant.
    """
    prices = np.asarray(prices, dtype=float)
    hours = np.asarray(hours, dtype=float)
    if prices.shape[0] < cfg.horizon or hours.shape[0] < cfg.horizon:
        raise ValueError("forecast shorter than the horizon")
    prices = prices[: cfg.horizon]
    day = cfg.is_daytime(hours[: cfg.horizon])
    lower = np.where(day,
                     np.where(prices <= theta.theta1, theta.theta2,
                              cfg.high_price_lower),
                     cfg.night_lower)
    return BoundsSchedule(lower, np.full(cfg.horizon, cfg.upper))


@dataclass(frozen=True)
class HorizonForecasts:
    """Exogenous signals read ahead for one receding-horizon solve.

    ``price`` covers times k..k+N (N+1 values: element 0 prices the
    first valve command, the rest price the predicted samples); the
    other arrays cover predicted-sample times k+1..k+N.
    """

    price: np.ndarray
    outdoor: np.ndarray
    solar: np.ndarray
    hours: np.ndarray

    def validate(self, n: int) -> None:
        if self.price.shape[0] < n + 1:
            raise ValueError(f"price forecast needs {n + 1} values")
        for name in ("outdoor", "solar", "hours"):
            if getattr(self, name).shape[0] < n:
                raise ValueError(f"{name} forecast needs {n} values")


@dataclass
class LpInstance:
    """One standard-form LP plus the context needed to verify/dump it."""

    c: np.ndarray
    A_eq: sparse.csc_matrix
    b_eq: np.ndarray
    A_ub: sparse.csc_matrix
    b_ub: np.ndarray
    bounds: list[tuple[float | None, float | None]]
    n_steps: int
    sched: BoundsSchedule
    a_coeffs: np.ndarray
    min_price: float


@dataclass
class LpSolution:
    """Solved trajectory with verification residuals."""

    valve: np.ndarray
    slack: np.ndarray
    y_pred: np.ndarray
    objective: float
    status: str
    feas_residual: float
    kkt_residual: float


def _slide(seq: np.ndarray, coeffs: np.ndarray, n: int) -> np.ndarray:
    """Row r of the lag convolution: dot of coeffs (lag order) with the
    10 samples preceding predicted time r+1, oldest first in ``seq``."""
    win = np.lib.stride_tricks.sliding_window_view(seq, N_ARX)[:n]
    return win @ coeffs[::-1]


def build_lp(model: ArxModel, window: IoWindow, forecasts: HorizonForecasts,
             sched: BoundsSchedule, cfg: MpcConfig) -> LpInstance:
    """Assemble the horizon LP around the current window."""
    n = cfg.horizon
    forecasts.validate(n)
    if sched.lower.shape[0] != n:
        raise ValueError("bounds schedule length mismatch")
    valve_price = forecasts.price[:n]
    if cfg.slack_weight <= float(np.max(valve_price)) * cfg.energy_per_step_kwh:
        raise ValueError("slack weight must dominate the energy price")

    a_raw, b_raw, intercept = model.raw_coefficients()

    yseq = np.concatenate([window.y_hist, np.zeros(n - 1)])
    vseq = np.concatenate([window.u_hist[0, : N_ARX - 1], np.zeros(n)])
    oseq = np.concatenate([window.u_hist[1], forecasts.outdoor[: n - 1]])
    sseq = np.concatenate([window.u_hist[2], forecasts.solar[: n - 1]])
    b_eq = (intercept
            + _slide(yseq, a_raw, n)
            + _slide(vseq, b_raw[0], n)
            + _slide(oseq, b_raw[1], n)
            + _slide(sseq, b_raw[2], n))

    rr, jj = np.meshgrid(np.arange(1, n + 1), np.arange(1, N_ARX + 1),
                         indexing="ij")
    lag = rr - jj
    rows = [np.arange(n)]
    cols = [2 * n + np.arange(n)]
    data = [np.ones(n)]
    m_y = lag >= 1
    rows.append(rr[m_y] - 1)
    cols.append(2 * n + lag[m_y] - 1)
    data.append(-np.broadcast_to(a_raw, lag.shape)[m_y])
    m_v = lag >= 0
    rows.append(rr[m_v] - 1)
    cols.append(lag[m_v])
    data.append(-np.broadcast_to(b_raw[0], lag.shape)[m_v])
    A_eq = sparse.csc_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, 3 * n))

    r_idx = np.arange(n)
    ub_rows = np.concatenate([2 * r_idx, 2 * r_idx, 2 * r_idx + 1, 2 * r_idx + 1])
    ub_cols = np.concatenate([2 * n + r_idx, n + r_idx, 2 * n + r_idx, n + r_idx])
    ub_data = np.concatenate([-np.ones(n), -np.ones(n),
                              np.ones(n), -np.ones(n)])
    A_ub = sparse.csc_matrix((ub_data, (ub_rows, ub_cols)), shape=(2 * n, 3 * n))
    b_ub = np.empty(2 * n)
    b_ub[0::2] = -sched.lower
    b_ub[1::2] = sched.upper

    c = np.concatenate([valve_price * cfg.energy_per_step_kwh,
                        np.full(n, cfg.slack_weight), np.zeros(n)])
    bounds = ([(0.0, 1.0)] * n + [(0.0, None)] * n + [(None, None)] * n)
    return LpInstance(c, A_eq, b_eq, A_ub, b_ub, bounds, n, sched, a_raw,
                      float(np.min(valve_price)))


def _freefloat_trajectory(lp: LpInstance) -> np.ndarray:
    """Predicted temperatures with the valve shut the whole horizon."""
    n = lp.n_steps
    y = np.zeros(n)
    a = lp.a_coeffs
    for r in range(1, n + 1):
        acc = lp.b_eq[r - 1]
        jmax = min(N_ARX, r - 1)
        for j in range(1, jmax + 1):
            acc += a[j - 1] * y[r - j - 1]
        y[r - 1] = acc
    return y


def _primal_residual(lp: LpInstance, x: np.ndarray) -> float:
    r_eq = np.max(np.abs(lp.A_eq @ x - lp.b_eq)) if lp.b_eq.size else 0.0
    r_ub = max(0.0, float(np.max(lp.A_ub @ x - lp.b_ub)))
    lo = np.array([b[0] if b[0] is not None else -np.inf for b in lp.bounds])
    hi = np.array([b[1] if b[1] is not None else np.inf for b in lp.bounds])
    r_box = max(0.0, float(np.max(lo - x)), float(np.max(x - hi)))
    return max(float(r_eq), r_ub, r_box)


def _kkt_residual(lp: LpInstance, res) -> float:
    """Stationarity, dual-sign and complementarity residual (inf norm).

    Convention verified against this scipy/HiGHS pairing:
    c - A_eq^T lam - A_ub^T mu - z_lower - z_upper = 0 with mu <= 0,
    z_lower >= 0, z_upper <= 0.
    """
    x = res.x
    lam = res.eqlin.marginals
    mu = res.ineqlin.marginals
    zl = res.lower.marginals
    zu = res.upper.marginals
    stat = lp.c - lp.A_eq.T @ lam - lp.A_ub.T @ mu - zl - zu
    r = float(np.max(np.abs(stat)))
    r = max(r, float(np.max(mu, initial=0.0)),
            float(np.max(-zl, initial=0.0)),
            float(np.max(zu, initial=0.0)))
    slack_ub = lp.b_ub - lp.A_ub @ x
    r = max(r, float(np.max(np.abs(mu * slack_ub), initial=0.0)))
    lo = np.array([b[0] if b[0] is not None else -np.inf for b in lp.bounds])
    hi = np.array([b[1] if b[1] is not None else np.inf for b in lp.bounds])
    gap_lo = np.where(np.isfinite(lo), x - lo, 0.0)
    gap_hi = np.where(np.isfinite(hi), hi - x, 0.0)
    r = max(r, float(np.max(np.abs(zl * gap_lo))),
            float(np.max(np.abs(zu * gap_hi))))
    return r


def dump_lp(lp: LpInstance, path) -> None:
    """Plain-text standard-form listing for offline replay."""
    with open(path, "w") as fh:
        fh.write(f"# lp dump v1: n_steps {lp.n_steps}, vars {lp.c.size}\n")
        fh.write("c " + " ".join(repr(float(v)) for v in lp.c) + "\n")
        for name, mat, rhs in (("eq", lp.A_eq, lp.b_eq), ("ub", lp.A_ub, lp.b_ub)):
            coo = mat.tocoo()
            fh.write(f"A_{name} {mat.shape[0]} {mat.shape[1]} {coo.nnz}\n")
            for i, j, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{i} {j} {float(v)!r}\n")
            fh.write(f"b_{name} " + " ".join(repr(float(v)) for v in rhs) + "\n")
        fh.write("bounds " + " ".join(
            f"{lo if lo is not None else '-inf'}:{hi if hi is not None else 'inf'}"
            for lo, hi in lp.bounds) + "\n")


def solve_lp(lp: LpInstance, dump_path=None) -> LpSolution:
    """Solve and verify one horizon LP.

    A zero-valve rollout that already satisfies every bound is returned
    directly (with nonnegative prices nothing can cost less than zero).
    Otherwise the LP runs through HiGHS; the result only earns status
    ``optimal`` after primal and KKT residuals pass.  The soft
    formulation is feasible by construction, so any other status is
    surfaced, with a dump for replay.
    """
    n = lp.n_steps
    y0 = _freefloat_trajectory(lp)
    if (lp.min_price >= 0.0
            and np.all(y0 >= lp.sched.lower) and np.all(y0 <= lp.sched.upper)):
        return LpSolution(np.zeros(n), np.zeros(n), y0, 0.0, "optimal",
                          0.0, 0.0)

    last = None
    # Presolve costs more than it saves at this size; the retry keeps it.
    for method, opts in (("highs-ds", {"presolve": False}), ("highs", {})):
        res = linprog(lp.c, lp.A_ub, lp.b_ub, lp.A_eq, lp.b_eq,
                      bounds=lp.bounds, method=method, options=opts)
        last = res
        if res.status == 2:
            return LpSolution(np.zeros(n), np.zeros(n), y0, np.inf,
                              "infeasible", np.inf, np.inf)
        if res.status != 0:
            continue
        feas = _primal_residual(lp, res.x)
        kkt = _kkt_residual(lp, res)
        if feas <= 1e-7 and kkt <= 1e-6:
            x = res.x
            return LpSolution(x[:n].copy(), x[n:2 * n].copy(),
                              x[2 * n:].copy(), float(res.fun), "optimal",
                              feas, kkt)
    if dump_path is None:
        dump_path = "lp_failure_dump.txt"
    dump_lp(lp, dump_path)
    detail = f"status {last.status}" if last is not None else "no result"
    log.error("LP solve failed (%s); instance dumped to %s", detail, dump_path)
    return LpSolution(np.zeros(n), np.zeros(n), y0, np.inf,
                      "numerical-failure", np.inf, np.inf)


def mpc_step(model: ArxModel, window: IoWindow, forecasts: HorizonForecasts,
             theta: ParamPoint, cfg: MpcConfig, dump_path=None) -> float:
    """One receding-horizon step: solve and return the first valve command."""
    forecasts.validate(cfg.horizon)
    sched = build_bounds_schedule(forecasts.price[1:], forecasts.hours,
                                  theta, cfg)
    lp = build_lp(model, window, forecasts, sched, cfg)
    sol = solve_lp(lp, dump_path=dump_path)
    if sol.status != "optimal":
        raise MpcSolveError(f"LP ended with status {sol.status}")
    return float(sol.valve[0])
