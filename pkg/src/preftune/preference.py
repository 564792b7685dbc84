"""Preference likelihood model over day-by-day comparisons.

Each tuning day contributes one evaluation point; the occupant compares
consecutive days, answering whether the most recent day felt at least as
good as the one before.  Utilities live in an RKHS ball of radius
``bound``; through the representer theorem the day utilities are
``J = L @ alpha`` with ``L`` the Cholesky factor of the kernel matrix and
``||alpha|| <= bound``.  The confidence set keeps every utility vector
whose log-likelihood is within ``beta`` of the constrained maximum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky
from scipy.optimize import NonlinearConstraint, minimize
from scipy.special import expit

from .kernels import (
    DEFAULT_DOMAIN,
    Context,
    DomainBounds,
    EvalPoint,
    KernelConfig,
    ParamPoint,
    gram_matrix,
    normalize_points,
)


def sigmoid(x):
    """Logistic function, vectorized and overflow-safe."""
    return expit(x)


def log_sigmoid(x):
    """log(sigmoid(x)) computed without overflow for large |x|."""
    return -np.logaddexp(0.0, -np.asarray(x, dtype=float))


@dataclass
class PreferenceDataset:
    """Evaluation points plus consecutive-day preference labels.

    ``comparisons[k] = (i, q)`` records the answer for day ``i`` against
    day ``i - 1``: q is True when day i was preferred (utility at least
    as high).  Only consecutive pairs are allowed and each day can be
    labeled at most once.
    """

    points: list[EvalPoint] = field(default_factory=list)
    comparisons: list[tuple[int, bool]] = field(default_factory=list)

    @property
    def n_days(self) -> int:
        return len(self.points)

    @property
    def n_comparisons(self) -> int:
        return len(self.comparisons)

    def add_day(self, point: EvalPoint) -> int:
        self.points.append(point)
        return len(self.points) - 1

    def add_comparison(self, day: int, preferred: bool) -> None:
        if not 1 <= day < len(self.points):
            raise ValueError(f"comparison day {day} needs points for days {day - 1} and {day}")
        if any(d == day for d, _ in self.comparisons):
            raise ValueError(f"day {day} already has a comparison")
        self.comparisons.append((int(day), bool(preferred)))

    def comparison_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Index/sign arrays (later, earlier, signs) for the likelihood."""
        if not self.comparisons:
            empty = np.empty(0, dtype=int)
            return empty, empty.copy(), np.empty(0)
        later = np.array([d for d, _ in self.comparisons], dtype=int)
        signs = np.array([1.0 if q else -1.0 for _, q in self.comparisons])
        return later, later - 1, signs


def log_likelihood(
    utilities: np.ndarray,
    later: np.ndarray,
    earlier: np.ndarray,
    signs: np.ndarray,
) -> float:
    """Preference log-likelihood of a utility vector.

    Each comparison contributes log sigmoid(s * (J_later - J_earlier)),
    with s = +1 when the later day was preferred and -1 otherwise.
    """
    if later.size == 0:
        return 0.0
    delta = utilities[later] - utilities[earlier]
    return float(np.sum(log_sigmoid(signs * delta)))


def log_likelihood_grad(
    utilities: np.ndarray,
    later: np.ndarray,
    earlier: np.ndarray,
    signs: np.ndarray,
) -> np.ndarray:
    """Gradient of ``log_likelihood`` with respect to the utility vector."""
    g = np.zeros_like(utilities)
    if later.size == 0:
        return g
    delta = utilities[later] - utilities[earlier]
    w = signs * expit(-signs * delta)
    np.add.at(g, later, w)
    np.add.at(g, earlier, -w)
    return g


@dataclass
class ConfidenceState:
    """Frozen result of one MLE solve over the current dataset.

    Holds everything needed to test membership in the likelihood-ratio
    confidence set without re-reading the dataset: normalized day
    coordinates, Cholesky factor of their kernel matrix, the constrained
    MLE in both alpha- and utility-space, and the comparison index
    arrays.
    """

    coords: np.ndarray
    chol: np.ndarray
    alpha: np.ndarray
    utilities: np.ndarray
    loglik: float
    bound: float
    beta: float
    later: np.ndarray
    earlier: np.ndarray
    signs: np.ndarray

    @property
    def threshold(self) -> float:
        """Log-likelihood floor defining the confidence set."""
        return self.loglik - self.beta

    def loglik_of(self, utilities: np.ndarray) -> float:
        return log_likelihood(utilities, self.later, self.earlier, self.signs)


def confidence_margin(state: ConfidenceState, utilities: np.ndarray) -> float:
    """loglik(utilities) minus the confidence threshold; >= 0 means member."""
    return state.loglik_of(np.asarray(utilities, dtype=float)) - state.threshold


def _kkt_residual(alpha: np.ndarray, grad: np.ndarray, bound: float) -> float:
    """Stationarity residual for max loglik subject to ||alpha|| <= bound.

    Interior: the gradient itself.  On the boundary the gradient must
    point radially outward, so measure the tangential component plus any
    inward-pointing radial part.
    """
    nrm = float(np.linalg.norm(alpha))
    if nrm < bound - 1e-7:
        return float(np.linalg.norm(grad))
    unit = alpha / max(nrm, 1e-300)
    radial = float(np.dot(grad, unit))
    tangential = grad - radial * unit
    return float(np.linalg.norm(tangential) + max(0.0, -radial))


def solve_mle(
    dataset: PreferenceDataset,
    cfg: KernelConfig,
    bound: float = 5.0,
    beta: float = 1.0,
    domain: DomainBounds = DEFAULT_DOMAIN,
    x0: np.ndarray | None = None,
    kkt_tol: float = 1e-5,
) -> ConfidenceState:
    """Constrained MLE of day utilities over the preference dataset.

    Maximizes the comparison log-likelihood over utilities J = L @ alpha
    with ||alpha|| <= bound.  The objective is concave and the feasible
    set a ball, so any KKT point is the global optimum; the solve is
    rejected (and retried with a second solver, then once with a 10x
    looser residual tolerance) unless the KKT residual passes.
    """
    if dataset.n_days == 0:
        raise ValueError("dataset has no evaluation points")
    coords = normalize_points(dataset.points, domain, cfg.contextual)
    K = gram_matrix(coords, cfg)
    L = cholesky(K, lower=True)
    later, earlier, signs = dataset.comparison_arrays()
    m = dataset.n_days

    if later.size == 0:
        alpha = np.zeros(m)
        return ConfidenceState(coords, L, alpha, np.zeros(m), 0.0, bound, beta,
                               later, earlier, signs)

    def neg_ll(alpha):
        return -log_likelihood(L @ alpha, later, earlier, signs)

    def neg_ll_grad(alpha):
        return -(L.T @ log_likelihood_grad(L @ alpha, later, earlier, signs))

    start = np.zeros(m) if x0 is None else np.asarray(x0, dtype=float).copy()
    if np.linalg.norm(start) > bound:
        start *= (bound - 1e-9) / np.linalg.norm(start)

    def attempt(method, tol):
        if method == "SLSQP":
            res = minimize(
                neg_ll, start, jac=neg_ll_grad, method="SLSQP",
                constraints=[{"type": "ineq",
                              "fun": lambda a: bound**2 - a @ a,
                              "jac": lambda a: -2.0 * a}],
                options={"maxiter": 1000, "ftol": 1e-14},
            )
        else:
            res = minimize(
                neg_ll, start, jac=neg_ll_grad, method="trust-constr",
                constraints=[NonlinearConstraint(
                    lambda a: float(a @ a), -np.inf, bound**2,
                    jac=lambda a: 2.0 * a.reshape(1, -1))],
                options={"maxiter": 3000, "gtol": 1e-12, "xtol": 1e-14},
            )
        a = res.x
        nrm = np.linalg.norm(a)
        if nrm > bound:
            a = a * (bound / nrm)
        resid = _kkt_residual(a, -neg_ll_grad(a), bound)
        return a, resid

    for method, tol in (("SLSQP", kkt_tol), ("trust-constr", kkt_tol),
                        ("SLSQP", 10.0 * kkt_tol)):
        alpha, resid = attempt(method, tol)
        if resid <= tol * max(1.0, float(later.size)):
            J = L @ alpha
            ll = log_likelihood(J, later, earlier, signs)
            return ConfidenceState(coords, L, alpha, J, ll, bound, beta,
                                   later, earlier, signs)
    raise RuntimeError(
        f"MLE solve failed KKT check: residual {resid:.3e} with "
        f"{later.size} comparisons over {m} days")


def save_dataset(dataset: PreferenceDataset, path) -> None:
    """Write the dataset as plain text, one record per line."""
    lines = ["# preference dataset v1"]
    for i, p in enumerate(dataset.points):
        lines.append(
            f"point {i} {p.theta.theta1!r} {p.theta.theta2!r} "
            f"{p.context.mean_outdoor_temp!r}")
    for day, q in dataset.comparisons:
        lines.append(f"cmp {day} {int(q)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_dataset(path) -> PreferenceDataset:
    """Inverse of ``save_dataset``; point order is restored by index."""
    points: dict[int, EvalPoint] = {}
    comparisons: list[tuple[int, bool]] = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if tokens[0] == "point":
                idx = int(tokens[1])
                t1, t2, z = (float(t) for t in tokens[2:5])
                points[idx] = EvalPoint(ParamPoint(t1, t2), Context(z))
            elif tokens[0] == "cmp":
                comparisons.append((int(tokens[1]), bool(int(tokens[2]))))
            else:
                raise ValueError(f"unrecognized record: {line}")
    ds = PreferenceDataset(points=[points[i] for i in sorted(points)])
    for day, q in sorted(comparisons):
        ds.add_comparison(day, q)
    return ds
