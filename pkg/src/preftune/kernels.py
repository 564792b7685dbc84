"""Kernel machinery over normalized (tuning parameter, context) points.

Tuning parameters live in a fixed box: theta1 is the price threshold in
EUR/kWh, theta2 the daytime lower temperature setpoint in deg C.  The
context is the daily mean outdoor temperature.  All kernel evaluations
happen on unit-cube coordinates so one set of lengthscales serves every
dimension; a squared-exponential kernel keeps values in (0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

THETA1_RANGE = (0.0889, 0.1019)
THETA2_RANGE = (20.0, 26.0)
CONTEXT_RANGE = (-10.0, 10.0)


class ConfigurationError(ValueError):
    """Raised for invalid kernel/domain configuration."""


@dataclass(frozen=True)
class ParamPoint:
    """Controller tuning parameters (price threshold, lower setpoint)."""

    theta1: float
    theta2: float

    def __post_init__(self):
        object.__setattr__(self, "theta1", float(self.theta1))
        object.__setattr__(self, "theta2", float(self.theta2))
        if not (THETA1_RANGE[0] - 1e-12 <= self.theta1 <= THETA1_RANGE[1] + 1e-12):
            raise ValueError(f"theta1={self.theta1} outside {THETA1_RANGE}")
        if not (THETA2_RANGE[0] - 1e-9 <= self.theta2 <= THETA2_RANGE[1] + 1e-9):
            raise ValueError(f"theta2={self.theta2} outside {THETA2_RANGE}")


@dataclass(frozen=True)
class Context:
    """Daily context: mean outdoor temperature, clamped into the context range."""

    mean_outdoor_temp: float

    def __post_init__(self):
        lo, hi = CONTEXT_RANGE
        clamped = min(max(float(self.mean_outdoor_temp), lo), hi)
        object.__setattr__(self, "mean_outdoor_temp", clamped)


@dataclass(frozen=True)
class EvalPoint:
    """A (parameter, context) pair as seen by the utility model."""

    theta: ParamPoint
    context: Context


@dataclass(frozen=True)
class DomainBounds:
    """Axis-aligned bounds used for unit-cube normalization."""

    theta1: tuple[float, float] = THETA1_RANGE
    theta2: tuple[float, float] = THETA2_RANGE
    context: tuple[float, float] = CONTEXT_RANGE

    def __post_init__(self):
        for name in ("theta1", "theta2", "context"):
            lo, hi = getattr(self, name)
            if not hi > lo:
                raise ConfigurationError(f"zero-width domain dimension: {name}")


DEFAULT_DOMAIN = DomainBounds()


@dataclass(frozen=True)
class KernelConfig:
    """Squared-exponential kernel on normalized coordinates.

    With ``contextual=False`` the context coordinate is ignored entirely,
    which turns the whole pipeline into its static (context-free) variant.
    """

    lengthscales: tuple[float, ...] = (0.25, 0.25, 0.3)
    jitter: float = 1e-6
    contextual: bool = True

    def __post_init__(self):
        if any(l <= 0 for l in self.lengthscales):
            raise ConfigurationError("lengthscales must be positive")
        if self.jitter < 0:
            raise ConfigurationError("jitter must be nonnegative")

    @property
    def ndim(self) -> int:
        return 3 if self.contextual else 2

    def active_lengthscales(self) -> np.ndarray:
        return np.asarray(self.lengthscales[: self.ndim], dtype=float)


def normalize_point(
    p: EvalPoint,
    domain: DomainBounds = DEFAULT_DOMAIN,
    contextual: bool = True,
) -> np.ndarray:
    """Map an evaluation point onto the unit cube.

    Returns 3 coordinates (theta1, theta2, context), or just the two
    parameter coordinates when ``contextual`` is false.
    """
    raw = [
        (p.theta.theta1, domain.theta1),
        (p.theta.theta2, domain.theta2),
        (p.context.mean_outdoor_temp, domain.context),
    ]
    if not contextual:
        raw = raw[:2]
    return np.array([(v - lo) / (hi - lo) for v, (lo, hi) in raw])


def normalize_points(
    points: list[EvalPoint],
    domain: DomainBounds = DEFAULT_DOMAIN,
    contextual: bool = True,
) -> np.ndarray:
    """Stack ``normalize_point`` over a list into an (n, d) array."""
    if not points:
        return np.empty((0, 3 if contextual else 2))
    return np.stack([normalize_point(p, domain, contextual) for p in points])


def kernel_eval(x: np.ndarray, x2: np.ndarray, cfg: KernelConfig) -> float:
    """Squared-exponential kernel between two normalized coordinate vectors."""
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x.shape != x2.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {x2.shape}")
    d = cfg.ndim
    if x.shape[0] < d:
        raise ValueError(f"need {d} coordinates, got {x.shape[0]}")
    ell = cfg.active_lengthscales()
    diff = (x[:d] - x2[:d]) / ell
    return float(np.exp(-0.5 * np.dot(diff, diff)))


def gram_matrix(points: np.ndarray, cfg: KernelConfig) -> np.ndarray:
    """Kernel matrix over a point set, with jitter on the diagonal.

    ``points`` is an (n, d) array of normalized coordinates.  The jitter
    keeps the Cholesky factorization valid when daily evaluation points
    repeat exactly.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] == 0:
        raise ValueError("empty point list")
    d = cfg.ndim
    if pts.shape[1] < d:
        raise ValueError(f"need {d} coordinates, got {pts.shape[1]}")
    scaled = pts[:, :d] / cfg.active_lengthscales()
    sq = np.sum(scaled**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * scaled @ scaled.T
    np.maximum(d2, 0.0, out=d2)
    # Self-distance is zero by definition; the two summation routes above
    # can disagree by one ulp, which would put k(x, x) a hair below 1.
    np.fill_diagonal(d2, 0.0)
    K = np.exp(-0.5 * d2)
    K[np.diag_indices_from(K)] += cfg.jitter
    return K


def kernel_vector(points: np.ndarray, x: np.ndarray, cfg: KernelConfig) -> np.ndarray:
    """Cross-kernel k(points_i, x) for one candidate against a point set."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x = np.asarray(x, dtype=float)
    d = cfg.ndim
    diff = (pts[:, :d] - x[None, :d]) / cfg.active_lengthscales()
    return np.exp(-0.5 * np.sum(diff**2, axis=1))
