"""Daily tuning loop: optimistic proposal over a parameter grid.

Each day the tuner proposes the grid parameter maximizing the optimistic
improvement over the previous day: the largest value of
J(theta, z_t) - J(theta_prev, z_prev) attainable by any utility function
that (a) lives in the RKHS ball of radius ``bound`` and (b) keeps the
preference log-likelihood within ``beta`` of the constrained MLE.

Through the representer theorem the search runs over extended
coefficient vectors x with ||x|| <= bound, where the extended Cholesky
factor appends one row [w_c, s_c] for the candidate: w_c = L^-1 k_* and
s_c = sqrt(1 + jitter - ||w_c||^2).  The candidate coordinate never
enters the likelihood, so the norm constraint is active at every
optimum; with no comparisons yet the value is exactly
bound * ||[w_c - l_prev, s_c]||, which doubles as a sound upper bound
for pruning the grid when comparisons do exist.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import minimize, nnls

from .kernels import (
    DEFAULT_DOMAIN,
    THETA1_RANGE,
    THETA2_RANGE,
    Context,
    DomainBounds,
    EvalPoint,
    KernelConfig,
    ParamPoint,
    normalize_point,
    normalize_points,
)
from .preference import (
    ConfidenceState,
    PreferenceDataset,
    log_likelihood,
    log_likelihood_grad,
    solve_mle,
)

log = logging.getLogger(__name__)

_TIE_TOL = 1e-9


def make_theta_grid(
    n_theta1: int = 14,
    n_theta2: int = 25,
    theta1_range: tuple[float, float] = THETA1_RANGE,
    theta2_range: tuple[float, float] = THETA2_RANGE,
) -> list[ParamPoint]:
    """Uniform parameter grid, theta1-major order.

    Defaults give steps of 0.001 EUR/kWh and 0.25 degC.
    """
    t1 = np.linspace(theta1_range[0], theta1_range[1], n_theta1)
    t2 = np.linspace(theta2_range[0], theta2_range[1], n_theta2)
    return [ParamPoint(float(a), float(b)) for a in t1 for b in t2]


@dataclass
class TunerState:
    """Everything the daily loop carries between days."""

    dataset: PreferenceDataset
    kernel_cfg: KernelConfig
    cs: ConfidenceState
    theta_grid: list[ParamPoint]
    previous: EvalPoint
    bound: float = 5.0
    beta: float = 1.0
    domain: DomainBounds = field(default_factory=lambda: DEFAULT_DOMAIN)
    beta_schedule: Callable[[int], float] | None = None

    def effective_beta(self) -> float:
        if self.beta_schedule is not None:
            return float(self.beta_schedule(self.dataset.n_comparisons))
        return self.beta


def create_tuner(
    seed_point: EvalPoint,
    kernel_cfg: KernelConfig | None = None,
    theta_grid: list[ParamPoint] | None = None,
    bound: float = 5.0,
    beta: float = 1.0,
    domain: DomainBounds = DEFAULT_DOMAIN,
    beta_schedule: Callable[[int], float] | None = None,
) -> TunerState:
    """Fresh tuner seeded with the one day executed before tuning starts."""
    cfg = kernel_cfg or KernelConfig()
    grid = theta_grid if theta_grid is not None else make_theta_grid()
    ds = PreferenceDataset()
    ds.add_day(seed_point)
    cs = solve_mle(ds, cfg, bound, beta, domain)
    return TunerState(ds, cfg, cs, grid, seed_point, bound, beta, domain,
                      beta_schedule)


@dataclass
class AcquisitionResult:
    """Outcome of one candidate's convex program."""

    value: float
    x: np.ndarray
    cand_utility: float
    prev_utility: float
    converged: bool


def _candidate_geometry(state: TunerState, cand_coords: np.ndarray):
    """Per-candidate Cholesky extension over a batch of candidates.

    Returns (W, s, D, upper) where column c holds w_c = L^-1 k_*c,
    s[c] the Schur slack, D[:, c] = w_c - l_prev, and
    upper[c] = bound * ||[D[:, c], s[c]]|| the norm-ball-only value.
    """
    cs = state.cs
    cfg = state.kernel_cfg
    d = cfg.ndim
    pts = cs.coords[:, :d] / cfg.active_lengthscales()
    cands = np.atleast_2d(cand_coords)[:, :d] / cfg.active_lengthscales()
    d2 = (np.sum(pts**2, axis=1)[:, None] + np.sum(cands**2, axis=1)[None, :]
          - 2.0 * pts @ cands.T)
    Kstar = np.exp(-0.5 * np.maximum(d2, 0.0))
    W = solve_triangular(cs.chol, Kstar, lower=True)
    s2 = np.maximum(1.0 + cfg.jitter - np.sum(W**2, axis=0), 1e-18)
    s = np.sqrt(s2)
    l_prev = cs.chol[cs.alpha.size - 1]
    D = W - l_prev[:, None]
    upper = state.bound * np.sqrt(np.sum(D**2, axis=0) + s2)
    return W, s, D, upper


def _solve_candidate(
    state: TunerState,
    b: np.ndarray,
    x0: np.ndarray,
    kkt_tol: float = 1e-6,
) -> tuple[float, np.ndarray, bool]:
    """Maximize b @ x over the ball intersected with the likelihood set.

    The program is convex (linear objective, ball, concave likelihood
    floor), so a KKT point is globally optimal.  Stationarity is checked
    by nonnegative least squares over the active constraint gradients.
    """
    cs = state.cs
    m = cs.alpha.size
    bound = state.bound
    tau = cs.threshold
    L = cs.chol

    def ll_margin(x):
        return log_likelihood(L @ x[:m], cs.later, cs.earlier, cs.signs) - tau

    def ll_margin_grad(x):
        g = L.T @ log_likelihood_grad(L @ x[:m], cs.later, cs.earlier, cs.signs)
        return np.append(g, 0.0)

    constraints = [
        {"type": "ineq", "fun": lambda x: bound**2 - x @ x,
         "jac": lambda x: -2.0 * x},
        {"type": "ineq", "fun": ll_margin, "jac": ll_margin_grad},
    ]

    def check(x):
        nrm = np.linalg.norm(x)
        if nrm > bound:
            x = x * (bound / nrm)
        ok = ll_margin(x) >= -1e-6 and nrm <= bound + 1e-6
        if not ok:
            return x, np.inf
        cols = [2.0 * x]
        if ll_margin(x) < 1e-6 * max(1.0, abs(tau)):
            cols.append(-ll_margin_grad(x))
        _, resid = nnls(np.column_stack(cols), b)
        return x, resid

    def run(method):
        if method == "SLSQP":
            return minimize(lambda x: -b @ x, x0, jac=lambda x: -b,
                            method="SLSQP", constraints=constraints,
                            options={"maxiter": 400, "ftol": 1e-14}).x
        from scipy.optimize import NonlinearConstraint
        return minimize(
            lambda x: -b @ x, x0, jac=lambda x: -b, method="trust-constr",
            constraints=[
                NonlinearConstraint(lambda x: float(x @ x), -np.inf, bound**2,
                                    jac=lambda x: 2.0 * x.reshape(1, -1)),
                NonlinearConstraint(lambda x: ll_margin(x), 0.0, np.inf,
                                    jac=lambda x: ll_margin_grad(x).reshape(1, -1)),
            ],
            options={"maxiter": 2000, "gtol": 1e-12, "xtol": 1e-14}).x

    scale = max(1.0, float(np.linalg.norm(b)))
    best = (None, np.inf)
    for method, tol in (("SLSQP", kkt_tol), ("trust-constr", kkt_tol),
                        ("SLSQP", 10.0 * kkt_tol)):
        x, resid = check(run(method))
        if resid < best[1]:
            best = (x, resid)
        if resid <= tol * scale:
            return float(b @ x), x, True
    x, resid = best
    if x is None:
        x = x0
    return float(b @ x), x, False


def acquisition_solve(
    state: TunerState,
    theta: ParamPoint,
    z: Context,
    x0: np.ndarray | None = None,
) -> AcquisitionResult:
    """Solve the optimistic-improvement program for one candidate."""
    cs = state.cs
    m = cs.alpha.size
    coord = normalize_point(EvalPoint(theta, z), state.domain,
                            state.kernel_cfg.contextual)
    W, s, D, upper = _candidate_geometry(state, coord[None, :])
    b = np.append(D[:, 0], s[0])

    if cs.later.size == 0:
        nb = float(np.linalg.norm(b))
        x = state.bound * b / nb if nb > 0 else np.zeros(m + 1)
        val = state.bound * nb
        return AcquisitionResult(val, x, float(np.append(W[:, 0], s[0]) @ x),
                                 float(cs.chol[m - 1] @ x[:m]), True)

    if x0 is None:
        r = np.sqrt(max(state.bound**2 - cs.alpha @ cs.alpha, 0.0))
        x0 = np.append(cs.alpha, r)
    val, x, ok = _solve_candidate(state, b, x0)
    return AcquisitionResult(val, x, float(np.append(W[:, 0], s[0]) @ x),
                             float(cs.chol[m - 1] @ x[:m]), ok)


def acquisition_value(theta: ParamPoint, z: Context, state: TunerState) -> float:
    """Optimal value of the candidate's convex program."""
    res = acquisition_solve(state, theta, z)
    if not res.converged:
        res = acquisition_solve(state, theta, z)
        if not res.converged:
            raise RuntimeError(
                f"acquisition solver failed for theta={theta} at "
                f"day {state.dataset.n_days}")
    return res.value


def _cut_bound(D: np.ndarray, s: np.ndarray, dn2: np.ndarray, bound: float,
               a: np.ndarray, beta: float) -> np.ndarray:
    """Upper bounds under one supporting halfspace of the likelihood set.

    For each candidate the relaxed program max d@y + s*sqrt(B^2-|y|^2)
    subject to a@y >= beta has a closed form: the ball optimum if it
    already satisfies the cut, otherwise the optimum on the cut's
    hyperplane, found by splitting y along and orthogonal to a.
    """
    an2 = float(a @ a)
    da = a @ D
    ball = bound * np.sqrt(dn2 + s**2)
    free = bound * da >= beta * np.sqrt(dn2 + s**2)
    perp2 = np.maximum(dn2 - da**2 / an2, 0.0)
    rad2 = max(bound**2 - beta**2 / an2, 0.0)
    clipped = beta * da / an2 + np.sqrt(rad2 * (perp2 + s**2))
    return np.where(free, ball, clipped)


def propose(state: TunerState, z_t: Context) -> ParamPoint:
    """Argmax of the acquisition over the parameter grid.

    Candidates are screened by upper bounds and solved exactly in
    best-bound-first order; the scan stops once no remaining bound can
    beat the best exact value.  Bounds start from the norm-ball-only
    closed form and tighten with supporting-hyperplane cuts of the
    likelihood set collected at each optimizer (valid by concavity).
    Ties break to the lowest grid index.  Solutions found along the way
    seed later warm starts (any optimizer's leading block stays
    likelihood-feasible for every candidate).
    """
    cs = state.cs
    m = cs.alpha.size
    bound = state.bound
    cand_pts = [EvalPoint(th, z_t) for th in state.theta_grid]
    coords = normalize_points(cand_pts, state.domain, state.kernel_cfg.contextual)
    W, s, D, upper = _candidate_geometry(state, coords)

    if cs.later.size == 0:
        best = int(np.argmax(upper > upper.max() - _TIE_TOL))
        return state.theta_grid[best]

    tau = cs.threshold
    L = cs.chol
    dn2 = np.sum(D * D, axis=0)
    eff_upper = upper.copy()
    bank_y = [cs.alpha]
    bank_r = [float(np.sqrt(max(bound**2 - cs.alpha @ cs.alpha, 0.0)))]
    best_val = -np.inf
    best_idx = -1
    n_solved = 0
    while True:
        idx = int(np.argmax(eff_upper))
        if eff_upper[idx] < best_val - _TIE_TOL or np.isneginf(eff_upper[idx]):
            break
        Y = np.stack(bank_y)
        r = np.asarray(bank_r)
        scores = Y @ D[:, idx] + s[idx] * r
        j = int(np.argmax(scores))
        x0 = np.append(bank_y[j], bank_r[j])
        b = np.append(D[:, idx], s[idx])
        val, x, ok = _solve_candidate(state, b, x0)
        if not ok:
            val, x, ok = _solve_candidate(state, b, x0, kkt_tol=1e-5)
        if not ok:
            raise RuntimeError(
                f"acquisition solver failed on grid candidate {idx} at "
                f"day {state.dataset.n_days}")
        n_solved += 1
        y = x[:m]
        bank_y.append(y)
        bank_r.append(float(np.sqrt(max(bound**2 - y @ y, 0.0))))
        margin = log_likelihood(L @ y, cs.later, cs.earlier, cs.signs) - tau
        a = L.T @ log_likelihood_grad(L @ y, cs.later, cs.earlier, cs.signs)
        if a @ a > 1e-20:
            beta = float(a @ y) - float(margin)
            beta -= 1e-9 * max(1.0, abs(beta))
            eff_upper = np.minimum(eff_upper,
                                   _cut_bound(D, s, dn2, bound, a, beta))
        if val > best_val + _TIE_TOL or (abs(val - best_val) <= _TIE_TOL
                                         and idx < best_idx):
            best_val = val
            best_idx = idx
        eff_upper[idx] = -np.inf
    log.debug("propose: %d/%d exact solves, best value %.6f",
              n_solved, upper.size, best_val)
    return state.theta_grid[best_idx]


def update(state: TunerState, theta_t: ParamPoint, z_t: Context,
           q_t: bool) -> TunerState:
    """Absorb one executed day and its preference answer.

    Appends the evaluation point, records q_t against the previous day,
    and refreshes the constrained MLE.  The solve always starts from
    zero coefficients so a reloaded checkpoint reproduces the in-run
    state exactly.
    """
    pt = EvalPoint(theta_t, z_t)
    day = state.dataset.add_day(pt)
    state.dataset.add_comparison(day, bool(q_t))
    state.cs = solve_mle(state.dataset, state.kernel_cfg, state.bound,
                         state.effective_beta(), state.domain)
    state.previous = pt
    return state


def predict_optimal_theta2(state: TunerState, z_values: list[Context]) -> list[float]:
    """Model-optimal lower setpoint per context, theta1 profiled out.

    Interpolates the MLE utilities through the kernel (weights K^-1 J,
    i.e. L^-T alpha) and returns the theta2 of the grid argmax at each
    context.  Requires at least 5 comparisons.
    """
    if state.dataset.n_comparisons < 5:
        raise ValueError(
            f"need at least 5 comparisons, have {state.dataset.n_comparisons}")
    cs = state.cs
    out = []
    for z in z_values:
        cand_pts = [EvalPoint(th, z) for th in state.theta_grid]
        coords = normalize_points(cand_pts, state.domain,
                                  state.kernel_cfg.contextual)
        W, _, _, _ = _candidate_geometry(state, coords)
        utilities = W.T @ cs.alpha
        out.append(state.theta_grid[int(np.argmax(utilities))].theta2)
    return out


def save_checkpoint(state: TunerState, path) -> None:
    """One-file text checkpoint: config echo plus dataset records."""
    lines = [
        "# tuner checkpoint v1",
        f"kernel {state.kernel_cfg.lengthscales[0]!r} "
        f"{state.kernel_cfg.lengthscales[1]!r} "
        f"{state.kernel_cfg.lengthscales[2]!r} "
        f"{state.kernel_cfg.jitter!r} {int(state.kernel_cfg.contextual)}",
        f"bound {state.bound!r}",
        f"beta {state.beta!r}",
        f"domain {state.domain.theta1[0]!r} {state.domain.theta1[1]!r} "
        f"{state.domain.theta2[0]!r} {state.domain.theta2[1]!r} "
        f"{state.domain.context[0]!r} {state.domain.context[1]!r}",
        f"grid {len({p.theta1 for p in state.theta_grid})} "
        f"{len({p.theta2 for p in state.theta_grid})}",
    ]
    for i, p in enumerate(state.dataset.points):
        lines.append(f"point {i} {p.theta.theta1!r} {p.theta.theta2!r} "
                     f"{p.context.mean_outdoor_temp!r}")
    for day, q in state.dataset.comparisons:
        lines.append(f"cmp {day} {int(q)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_checkpoint(path, beta_schedule: Callable[[int], float] | None = None
                    ) -> TunerState:
    """Rebuild a tuner from ``save_checkpoint`` output.

    The MLE is re-solved from zero coefficients, matching what ``update``
    would have produced at the same dataset.
    """
    kernel_cfg = None
    bound = beta = None
    domain = DEFAULT_DOMAIN
    grid_shape = (14, 25)
    points: dict[int, EvalPoint] = {}
    comparisons: list[tuple[int, bool]] = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            t = line.split()
            if t[0] == "kernel":
                kernel_cfg = KernelConfig(
                    (float(t[1]), float(t[2]), float(t[3])),
                    float(t[4]), bool(int(t[5])))
            elif t[0] == "bound":
                bound = float(t[1])
            elif t[0] == "beta":
                beta = float(t[1])
            elif t[0] == "domain":
                domain = DomainBounds((float(t[1]), float(t[2])),
                                      (float(t[3]), float(t[4])),
                                      (float(t[5]), float(t[6])))
            elif t[0] == "grid":
                grid_shape = (int(t[1]), int(t[2]))
            elif t[0] == "point":
                points[int(t[1])] = EvalPoint(
                    ParamPoint(float(t[2]), float(t[3])), Context(float(t[4])))
            elif t[0] == "cmp":
                comparisons.append((int(t[1]), bool(int(t[2]))))
            else:
                raise ValueError(f"unrecognized checkpoint record: {line}")
    if kernel_cfg is None or bound is None or beta is None or not points:
        raise ValueError(f"incomplete checkpoint: {path}")
    ds = PreferenceDataset(points=[points[i] for i in sorted(points)])
    for day, q in sorted(comparisons):
        ds.add_comparison(day, q)
    grid = make_theta_grid(grid_shape[0], grid_shape[1],
                           domain.theta1, domain.theta2)
    state = TunerState(ds, kernel_cfg, None, grid, ds.points[-1], bound, beta,
                       domain, beta_schedule)
    state.cs = solve_mle(ds, kernel_cfg, bound, state.effective_beta(), domain)
    return state
