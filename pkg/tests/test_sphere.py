import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad as scipy_quad

from carnot import sphere
from carnot.errors import DimensionMismatch, InternalError
from carnot.sphere import (
    QuadratureGrid,
    SphereChartAtlas,
    ball_volume,
    difference_bound_ratio,
    hadamard_bound,
    oriented_integral,
    sphere_area,
    stokes_sides,
)


def identity(x):
    return np.array(x, dtype=float, copy=True)


def random_poly(seed=7, n=3, m=3, degree=4):
    # sum of monomials up to ``degree`` with random coefficients; not symmetric
    rng = np.random.default_rng(seed)
    exps = [e for e in np.ndindex(*(degree + 1,) * n) if sum(e) <= degree]
    coef = rng.normal(size=(m, len(exps)))
    exps = np.array(exps)

    def f(x):
        mono = np.prod(x[..., None, :] ** exps, axis=-1)
        return mono @ coef.T

    return f


def test_circle_area():
    val = oriented_integral(identity, lambda x: x[..., 0], (2,), (0.0, 0.0), 1.0,
                            quad=QuadratureGrid(10_000))
    assert val == pytest.approx(math.pi, abs=1e-6)


def test_circle_weighted_against_scipy():
    # int x1 dx1 ^ dx2 over B((0.3, 0), 1) via the boundary form x1^2/2 dx2
    center = np.array([0.3, 0.0])
    val = oriented_integral(identity, lambda x: x[..., 0] ** 2 / 2, (2,), center, 1.0,
                            quad=QuadratureGrid(256))

    def integrand(t):
        x1, x2 = 0.3 + math.cos(t), math.sin(t)
        return x1**2 / 2 * math.cos(t)

    ref, _ = scipy_quad(integrand, 0, 2 * math.pi, epsabs=1e-13)
    assert val == pytest.approx(ref, abs=1e-10)
    assert ref == pytest.approx(0.3 * math.pi, abs=1e-10)


@pytest.mark.parametrize("n", [3, 4])
def test_ball_volume(n):
    L = tuple(range(2, n + 1))
    val = oriented_integral(identity, lambda x: x[..., 0], L, np.zeros(n), 1.0, quad=QuadratureGrid(24))
    assert val == pytest.approx(ball_volume(n), rel=1e-8)


def test_volume_scales_with_radius():
    val = oriented_integral(identity, lambda x: x[..., 0], (2, 3), (0.5, -1.0, 2.0), 0.5)
    assert val == pytest.approx(ball_volume(3, 0.5), rel=1e-8)


def test_weights_sum():
    q = QuadratureGrid(16)
    for k in (2, 3, 4):
        _, w = q.ball(k)
        assert w.sum() == pytest.approx(ball_volume(k), rel=1e-10)
    _, w = q.sphere(2)
    assert w.sum() == pytest.approx(sphere_area(3), rel=1e-10)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_partition_of_unity(n):
    atlas = SphereChartAtlas(n)
    rng = np.random.default_rng(n)
    x = rng.normal(size=(500, n))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    total = atlas.partition(0, x) + atlas.partition(1, x)
    np.testing.assert_allclose(total, 1.0, atol=1e-14)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_charts_outward_oriented(n):
    atlas = SphereChartAtlas(n)
    rng = np.random.default_rng(0)
    p = rng.uniform(-0.7, 0.7, size=(200, n - 1)) / math.sqrt(n)
    for i in (0, 1):
        x, jac = atlas.chart(i, p)
        np.testing.assert_allclose(np.linalg.norm(x, axis=-1), 1.0, atol=1e-14)
        det = np.linalg.det(np.concatenate([x[..., :, None], jac], axis=-1))
        assert np.all(det > 0)


def test_chart_parameter_dimension():
    with pytest.raises(DimensionMismatch):
        SphereChartAtlas(3).chart(0, np.zeros((2, 3)))


def test_bad_L():
    with pytest.raises(DimensionMismatch):
        oriented_integral(identity, None, (1, 1), np.zeros(3), 1.0)


def test_partition_swap_invariance():
    f = random_poly(seed=3)
    g = lambda x: np.cos(x[..., 0]) + x[..., 1] * x[..., 2]
    a = oriented_integral(f, g, (1, 3), (0.1, 0.2, -0.1), 0.8, atlas=SphereChartAtlas(3, band=0.2))
    b = oriented_integral(f, g, (1, 3), (0.1, 0.2, -0.1), 0.8,
                          atlas=SphereChartAtlas(3, theta_max=math.pi / 2 + 0.4, band=0.35))
    assert abs(a - b) < 1e-6


def _closedness(N, seed=11):
    f = random_poly(seed=seed)
    return oriented_integral(f, None, (1, 2), (0.13, -0.2, 0.3), 0.9, quad=QuadratureGrid(N, "midpoint"))


def test_closedness_second_order():
    Ns = [8, 16, 32, 64]
    res = [abs(_closedness(N)) for N in Ns]
    slope = np.polyfit(np.log(Ns), np.log(res), 1)[0]
    assert slope <= -1.9


def test_closedness_gauss_is_tiny():
    f = random_poly(seed=11)
    val = oriented_integral(f, None, (1, 2), (0.13, -0.2, 0.3), 0.9, quad=QuadratureGrid(32))
    assert abs(val) < 1e-8


def test_stokes():
    f = random_poly(seed=5, degree=3)
    g = lambda x: x[..., 0] * x[..., 1] + x[..., 2] ** 2
    a, b = stokes_sides(f, g, (2, 3), (0.0, 0.1, 0.2), 0.7, quad=QuadratureGrid(24))
    assert a == pytest.approx(b, abs=1e-7)


@settings(max_examples=10)
@given(st.integers(0, 500))
def test_hadamard_bound_dominates(seed):
    f = random_poly(seed=seed, degree=2)
    g = lambda x: np.sin(x[..., 0])
    q = QuadratureGrid(16)
    bound = hadamard_bound(f, g, (0.0, 0.0, 0.0), 0.5, quad=q)
    for L in [(1, 2), (1, 3), (2, 3)]:
        assert abs(oriented_integral(f, g, L, (0.0, 0.0, 0.0), 0.5, quad=q)) <= bound * (1 + 1e-9)


def test_difference_ratio():
    f = random_poly(seed=1, degree=2)
    assert difference_bound_ratio(f, f, 1.0, (1, 2), (0, 0, 0), 0.5, quad=QuadratureGrid(12)) == 0.0
    h = lambda x: f(x) + 0.05 * np.sin(3 * x)
    ratio = difference_bound_ratio(f, h, lambda x: 1 + x[..., 0], (1, 2), (0, 0, 0), 0.5,
                                   quad=QuadratureGrid(12))
    assert 0 < ratio <= 1.0


def test_difference_ratio_zero_rhs_is_internal_error(monkeypatch):
    f = random_poly(seed=1, degree=2)
    h = lambda x: f(x) + x
    monkeypatch.setattr(sphere, "surface_integral", lambda *a, **k: 0.0)
    with pytest.raises(InternalError):
        difference_bound_ratio(f, h, lambda x: 1 + x[..., 0], (1, 2), (0, 0, 0), 0.5,
                               quad=QuadratureGrid(8))


def test_quadrature_validation():
    with pytest.raises(ValueError):
        QuadratureGrid(0)
    with pytest.raises(ValueError):
        QuadratureGrid(8, "simpson")
    with pytest.raises(ValueError):
        SphereChartAtlas(3, band=0.6)
