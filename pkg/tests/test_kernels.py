"""Kernel and normalization properties."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from preftune.kernels import (
    CONTEXT_RANGE,
    DEFAULT_DOMAIN,
    THETA1_RANGE,
    THETA2_RANGE,
    ConfigurationError,
    Context,
    DomainBounds,
    EvalPoint,
    KernelConfig,
    ParamPoint,
    gram_matrix,
    kernel_eval,
    kernel_vector,
    normalize_point,
    normalize_points,
)

unit = st.floats(0.0, 1.0, allow_nan=False)
coords = st.tuples(unit, unit, unit).map(np.array)


@given(coords)
def test_self_similarity_is_one(x):
    assert kernel_eval(x, x, KernelConfig()) == 1.0


@given(coords, coords)
def test_symmetry_and_range(x, y):
    cfg = KernelConfig()
    k = kernel_eval(x, y, cfg)
    assert kernel_eval(y, x, cfg) == k
    assert 0.0 < k <= 1.0


@given(coords, coords)
def test_matches_independent_formula(x, y):
    # Recompute exp(-sum((dx/l)^2)/2) with scalar math, no numpy.
    cfg = KernelConfig(lengthscales=(0.3, 0.15, 0.7))
    expected = math.exp(
        -0.5 * sum(((a - b) / l) ** 2
                   for a, b, l in zip(x, y, cfg.lengthscales)))
    assert kernel_eval(x, y, cfg) == pytest.approx(expected, abs=1e-14)


def test_single_point_gram():
    K = gram_matrix(np.array([[0.3, 0.4, 0.5]]), KernelConfig())
    assert K.shape == (1, 1)
    assert K[0, 0] == pytest.approx(1.0 + 1e-6, abs=0.0)


def test_duplicate_points_eigenvalues():
    cfg = KernelConfig()
    pts = np.array([[0.2, 0.8, 0.5], [0.2, 0.8, 0.5]])
    eig = np.linalg.eigvalsh(gram_matrix(pts, cfg))
    assert eig == pytest.approx([cfg.jitter, 2.0 + cfg.jitter], abs=1e-12)
    np.linalg.cholesky(gram_matrix(pts, cfg))


def test_min_eigenvalue_floor(rng):
    cfg = KernelConfig()
    pts = rng.uniform(0.0, 1.0, (5, 3))
    eig = np.linalg.eigvalsh(gram_matrix(pts, cfg))
    assert eig.min() >= cfg.jitter * (1.0 - 1e-9) - 1e-15


def test_cholesky_succeeds_200_points(rng):
    cfg = KernelConfig(jitter=1e-8)
    pts = rng.uniform(0.0, 1.0, (200, 3))
    np.linalg.cholesky(gram_matrix(pts, cfg))


def test_static_config_ignores_context():
    cfg = KernelConfig(contextual=False)
    p1 = EvalPoint(ParamPoint(0.095, 23.0), Context(-8.0))
    p2 = EvalPoint(ParamPoint(0.095, 23.0), Context(9.0))
    x1 = normalize_point(p1, contextual=False)
    x2 = normalize_point(p2, contextual=False)
    assert x1.shape == (2,)
    assert np.array_equal(x1, x2)
    assert kernel_eval(x1, x2, cfg) == 1.0


def test_normalization_hits_unit_cube_corners():
    lo = EvalPoint(ParamPoint(*[THETA1_RANGE[0], THETA2_RANGE[0]]),
                   Context(CONTEXT_RANGE[0]))
    hi = EvalPoint(ParamPoint(*[THETA1_RANGE[1], THETA2_RANGE[1]]),
                   Context(CONTEXT_RANGE[1]))
    assert normalize_point(lo) == pytest.approx([0.0, 0.0, 0.0], abs=1e-12)
    assert normalize_point(hi) == pytest.approx([1.0, 1.0, 1.0], abs=1e-12)


def test_normalize_points_stacks(rng):
    pts = [EvalPoint(ParamPoint(0.09, 21.0), Context(float(z)))
           for z in rng.uniform(-10, 10, 4)]
    X = normalize_points(pts)
    assert X.shape == (4, 3)
    assert np.array_equal(X[2], normalize_point(pts[2]))


def test_kernel_vector_matches_pairwise(rng):
    cfg = KernelConfig()
    pts = rng.uniform(0.0, 1.0, (6, 3))
    x = rng.uniform(0.0, 1.0, 3)
    kv = kernel_vector(pts, x, cfg)
    assert kv == pytest.approx([kernel_eval(p, x, cfg) for p in pts],
                               abs=1e-14)


def test_param_point_validation():
    with pytest.raises(ValueError):
        ParamPoint(0.2, 22.0)
    with pytest.raises(ValueError):
        ParamPoint(0.095, 19.0)
    with pytest.raises(ValueError):
        ParamPoint(0.095, 27.0)


def test_context_clamps_to_range():
    assert Context(55.0).mean_outdoor_temp == CONTEXT_RANGE[1]
    assert Context(-55.0).mean_outdoor_temp == CONTEXT_RANGE[0]
    assert Context(3.5).mean_outdoor_temp == 3.5


def test_param_point_repr_round_trips():
    # Constructors cast to builtin float so repr() stays parseable.
    p = ParamPoint(np.float64(0.0954), np.float64(22.0))
    assert type(p.theta1) is float and type(p.theta2) is float
    assert float(repr(p.theta1)) == p.theta1


def test_config_validation():
    with pytest.raises(ConfigurationError):
        KernelConfig(lengthscales=(0.2, -0.1, 0.2))
    with pytest.raises(ConfigurationError):
        KernelConfig(jitter=-1e-9)
    with pytest.raises(ConfigurationError):
        DomainBounds(theta1=(0.1, 0.1))


def test_zero_jitter_allowed():
    cfg = KernelConfig(jitter=0.0)
    K = gram_matrix(np.array([[0.1, 0.2, 0.3]]), cfg)
    assert K[0, 0] == 1.0
