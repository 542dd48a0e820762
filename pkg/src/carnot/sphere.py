"""Oriented integrals of pulled-back (n-1)-forms over Euclidean spheres.

``oriented_integral(f, g, L, center, radius)`` computes the integral of
``g df_{l_1} ^ ... ^ df_{l_{n-1}}`` over ``dB(center, radius)`` with the
outward orientation. For ``n >= 3`` the sphere is covered by two polar caps
slightly larger than hemispheres, glued with a partition of unity in the
polar angle; for ``n = 2`` the circle is parameterized directly.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatch, InternalError, QuadratureWarning


# -- quadrature -------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor rules: ``gauss`` (Gauss-Legendre) or ``midpoint`` per panel, trapezoid in azimuth."""

    resolution: int = 32
    rule: str = "gauss"

    def __post_init__(self):
        if self.resolution < 1:
            raise ValueError("resolution must be positive")
        if self.rule not in ("gauss", "midpoint"):
            raise ValueError(f"unknown rule {self.rule!r}")

    def interval(self, a: float, b: float, n: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        n = n or self.resolution
        if self.rule == "gauss":
            x, w = np.polynomial.legendre.leggauss(n)
        else:
            x = -1 + (2 * np.arange(n) + 1) / n
            w = np.full(n, 2.0 / n)
        return a + (b - a) * (x + 1) / 2, w * (b - a) / 2

    def panels(self, breaks: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
        parts = [self.interval(a, b) for a, b in zip(breaks[:-1], breaks[1:]) if b > a]
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])

    def periodic(self, n: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        n = n or 2 * self.resolution
        return 2 * np.pi * np.arange(n) / n, np.full(n, 2 * np.pi / n)

    def sphere(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Nodes on the unit sphere ``S^k`` in ``R^(k+1)`` and surface weights."""
        if k == 0:
            return np.array([[-1.0], [1.0]]), np.ones(2)
        phi, wphi = self.periodic()
        pts = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        wts = wphi
        for j in range(2, k + 1):
            # prepend a polar angle with weight sin^(j-1)
            t, wt = self.interval(0.0, np.pi)
            lead = np.repeat(np.cos(t), len(wts))
            tail = np.sin(t)[:, None, None] * pts[None]
            pts = np.concatenate([lead[:, None], tail.reshape(-1, pts.shape[-1])], axis=-1)
            wts = (wt * np.sin(t) ** (j - 1))[:, None] * wts[None]
            wts = wts.reshape(-1)
        return pts, wts

    def ball(self, k: int, breaks: Sequence[float] = (0.0, 1.0)) -> tuple[np.ndarray, np.ndarray]:
        """Polar tensor rule on the unit ball of ``R^k``; ``breaks`` split the radius into panels."""
        rho, wr = self.panels(breaks)
        omega, wo = self.sphere(k - 1)
        pts = (rho[:, None, None] * omega[None]).reshape(-1, k)
        wts = ((wr * rho ** (k - 1))[:, None] * wo[None]).reshape(-1)
        return pts, wts


def ball_volume(k: int, r: float = 1.0) -> float:
    return math.pi ** (k / 2) / math.gamma(k / 2 + 1) * r**k


def sphere_area(n: int, r: float = 1.0) -> float:
    """``H^(n-1)`` measure of the sphere bounding a ball in ``R^n``."""
    return n * ball_volume(n, r) / r


# -- charts ---------------------------------------------------------------------------

def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t**3 * (10 - 15 * t + 6 * t * t)


@dataclass(frozen=True)
class SphereChartAtlas:
    """Two polar caps around ``+e_n`` and ``-e_n`` reaching ``theta_max`` from their pole.

    The partition of unity switches across the equatorial band of half-width
    ``band`` (in polar angle), which must fit inside the cap overlap.
    """

    n: int
    theta_max: float = math.pi / 2 + 0.5
    band: float = 0.2

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("spheres need n >= 2")
        if not math.pi / 2 < self.theta_max < math.pi:
            raise ValueError("caps must be larger than a hemisphere and smaller than the sphere")
        if not 0 < self.band < self.theta_max - math.pi / 2:
            raise ValueError("partition band must lie inside the cap overlap")

    @property
    def poles(self) -> tuple[int, int]:
        return (1, -1)

    def reflection(self, i: int) -> int:
        """Sign applied to the first parameter so that chart ``i`` is outward oriented."""
        return self.poles[i] * (-1) ** (self.n - 1)

    def chart(self, i: int, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Points on the unit sphere and the ``n x (n-1)`` Jacobian of chart ``i`` at ``p``."""
        p = np.array(p, dtype=float)
        if p.shape[-1] != self.n - 1:
            raise DimensionMismatch(f"chart parameters live in R^{self.n - 1}")
        refl = self.reflection(i)
        p[..., 0] *= refl
        a = self.theta_max
        rho = np.linalg.norm(p, axis=-1)
        small = rho < 1e-6
        safe = np.where(small, 1.0, rho)
        S = np.where(small, a - a**3 * rho**2 / 6, np.sin(a * rho) / safe)
        dS = np.where(small, -(a**3) / 3 + a**5 * rho**2 / 30,
                      (a * rho * np.cos(a * rho) - np.sin(a * rho)) / safe**3)
        pole = self.poles[i]
        x = np.concatenate([S[..., None] * p, (pole * np.cos(a * rho))[..., None]], axis=-1)
        k = self.n - 1
        top = S[..., None, None] * np.eye(k) + dS[..., None, None] * p[..., :, None] * p[..., None, :]
        bottom = (-pole * a * S)[..., None] * p
        jac = np.concatenate([top, bottom[..., None, :]], axis=-2)
        jac[..., 0] *= refl
        return x, jac

    def polar_angle(self, x: np.ndarray) -> np.ndarray:
        return np.arccos(np.clip(x[..., -1] / np.linalg.norm(x, axis=-1), -1.0, 1.0))

    def partition(self, i: int, x: np.ndarray) -> np.ndarray:
        up = _smoothstep((math.pi / 2 + self.band - self.polar_angle(x)) / (2 * self.band))
        return up if i == 0 else 1.0 - up

    def radial_breaks(self) -> tuple[float, ...]:
        """Radii (in parameter space) where the partition switches; used as panel ends."""
        a = self.theta_max
        return (0.0, (math.pi / 2 - self.band) / a, (math.pi / 2 + self.band) / a)


# -- integrands --------------------------------------------------------------------------

def _as_callable(f):
    from .grid import GridMap

    if isinstance(f, GridMap):
        return f.function()
    return f


def numeric_jacobian(f: Callable, x: np.ndarray, h: float = 1e-3) -> np.ndarray:
    """Five-point central differences; exact for polynomials of degree <= 4."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    cols = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        d = (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h)
        cols.append(np.asarray(d, dtype=float).reshape(x.shape[:-1] + (-1,)))
    return np.stack(cols, axis=-1)


def _jacobian(f, x, jacobian, h):
    if jacobian is not None:
        return np.asarray(jacobian(x), dtype=float)
    return numeric_jacobian(_as_callable(f), x, h)


def _weight(g, x):
    if g is None:
        return np.ones(x.shape[:-1])
    if callable(g):
        return np.broadcast_to(np.asarray(g(x), dtype=float), x.shape[:-1])
    return np.full(x.shape[:-1], float(g))


def _check_L(L, m, n):
    L = tuple(int(l) for l in L)
    if len(L) != n - 1 or any(not 1 <= l <= m for l in L) or len(set(L)) != len(L):
        raise DimensionMismatch(f"L must list {n - 1} distinct indices in 1..{m}, got {L}")
    return [l - 1 for l in L]


def chart_density(Df_L: np.ndarray, dpsi: np.ndarray) -> np.ndarray:
    """``sum_I det(Df_L[:, I]) det(dpsi[I, :])`` over increasing ``I`` of size ``n-1``."""
    n = dpsi.shape[-2]
    out = 0.0
    for I in combinations(range(n), n - 1):
        I = list(I)
        out = out + np.linalg.det(Df_L[..., :, I]) * np.linalg.det(dpsi[..., I, :])
    return out


def _circle(center, radius, quad):
    t, w = quad.periodic(quad.resolution)
    x = np.asarray(center)[None] + radius * np.stack([np.cos(t), np.sin(t)], axis=-1)
    tangent = radius * np.stack([-np.sin(t), np.cos(t)], axis=-1)
    return x, tangent[..., None], w


def oriented_integral(f, g, L: Sequence[int], center: Sequence[float], radius: float,
                      atlas: SphereChartAtlas | None = None, quad: QuadratureGrid | None = None,
                      jacobian: Callable | None = None, fd_step: float | None = None,
                      overlap_tol: float = 1e-8) -> float:
    """Outward-oriented ``int_{dB} g df_L``.

    ``f`` maps points ``(..., n)`` to ``(..., m)``; it may also be a
    :class:`~carnot.grid.GridMap`. ``g`` is a callable, a constant or None
    (meaning 1). Without ``jacobian``, ``Df`` comes from five-point
    differences with step ``fd_step`` (default ``1e-3 * radius``).
    """
    center = np.asarray(center, dtype=float)
    n = center.size
    if radius <= 0:
        raise ValueError("radius must be positive")
    quad = quad or QuadratureGrid()
    h = fd_step or 1e-3 * radius
    if n == 2:
        x, tangent, w = _circle(center, radius, quad)
        Df = _jacobian(f, x, jacobian, h)
        idx = _check_L(L, Df.shape[-2], n)
        dens = chart_density(Df[..., idx, :], tangent)
        return float(np.sum(w * _weight(g, x) * dens))
    atlas = atlas or SphereChartAtlas(n)
    if atlas.n != n:
        raise DimensionMismatch(f"atlas is for n = {atlas.n}, ball lives in R^{n}")
    p, w = quad.ball(n - 1, atlas.radial_breaks())
    total, overlap = 0.0, []
    for i in (0, 1):
        y, dpsi = atlas.chart(i, p)
        x = center + radius * y
        Df = _jacobian(f, x, jacobian, h)
        idx = _check_L(L, Df.shape[-2], n)
        dens = _weight(g, x) * chart_density(Df[..., idx, :], radius * dpsi) * w
        u = atlas.partition(i, y)
        total += float(np.sum(u * dens))
        overlap.append((float(np.sum(u * (1 - u) * dens)), float(np.sum(np.abs(dens)))))
    (a, sa), (b, sb) = overlap
    if abs(a - b) > overlap_tol * max(1.0, sa, sb):
        warnings.warn(f"charts disagree on their overlap by {abs(a - b):.3g}; refine the quadrature",
                      QuadratureWarning, stacklevel=2)
    return total


def surface_integral(func: Callable[[np.ndarray], np.ndarray], center, radius: float,
                     quad: QuadratureGrid | None = None) -> float:
    """``int_{dB} func dH^(n-1)`` for a scalar function of the point."""
    center = np.asarray(center, dtype=float)
    quad = quad or QuadratureGrid()
    omega, w = quad.sphere(center.size - 1)
    x = center + radius * omega
    return float(np.sum(w * func(x)) * radius ** (center.size - 1))


def volume_integral(func: Callable[[np.ndarray], np.ndarray], center, radius: float,
                    quad: QuadratureGrid | None = None) -> float:
    center = np.asarray(center, dtype=float)
    quad = quad or QuadratureGrid()
    p, w = quad.ball(center.size)
    return float(np.sum(w * func(center + radius * p)) * radius**center.size)


def _frob_power(f, x, h, power, jacobian=None):
    Df = _jacobian(f, x, jacobian, h)
    return np.sqrt(np.sum(Df**2, axis=(-2, -1))) ** power


def hadamard_bound(f, g, center, radius: float, quad: QuadratureGrid | None = None,
                   jacobian: Callable | None = None) -> float:
    """``sqrt(n) int_{dB} |g| |Df|^(n-1) dH^(n-1)``, an upper bound for every ``|int g df_L|``."""
    n = len(center)
    h = 1e-3 * radius
    return math.sqrt(n) * surface_integral(
        lambda x: np.abs(_weight(g, x)) * _frob_power(f, x, h, n - 1, jacobian), center, radius, quad
    )


def stokes_sides(f, g, J: Sequence[int], center, radius: float, quad: QuadratureGrid | None = None,
                 atlas: SphereChartAtlas | None = None) -> tuple[float, float]:
    """``(int_{dB} g df_J, int_B dg ^ df_J)``."""
    center = np.asarray(center, dtype=float)
    n = center.size
    h = 1e-3 * radius
    fc = _as_callable(f)
    boundary = oriented_integral(fc, g, J, center, radius, atlas, quad)
    idx = _check_L(J, np.asarray(fc(center[None])).shape[-1], n)

    def density(x):
        Df = numeric_jacobian(fc, x, h)[..., idx, :]
        if g is None or not callable(g):
            return np.zeros(x.shape[:-1])
        dg = numeric_jacobian(lambda y: np.asarray(g(y))[..., None], x, h)
        return np.linalg.det(np.concatenate([dg, Df], axis=-2))

    # the volume rule is a tensor product in n dimensions; cap its per-axis size
    quad = quad or QuadratureGrid()
    vol_quad = QuadratureGrid(min(quad.resolution, 96), quad.rule)
    return boundary, volume_integral(density, center, radius, vol_quad)


def stokes_residual(f, g, J: Sequence[int], center, radius: float,
                    quad: QuadratureGrid | None = None) -> float:
    a, b = stokes_sides(f, g, J, center, radius, quad)
    return abs(a - b)


def difference_bound_ratio(f, h, g, J: Sequence[int], center, radius: float,
                           quad: QuadratureGrid | None = None, zero_tol: float = 1e-13) -> float:
    """``|int g df_J - int g dh_J|`` over the right-hand side of the telescoping estimate with ``C = 1``.

    The right-hand side is ``|g|_inf * sum_k A^((k-1)/(n-1)) D^(1/(n-1)) H^((n-1-k)/(n-1))``
    with ``A, D, H`` the surface integrals of ``|Df|^(n-1)``, ``|Df - Dh|^(n-1)``, ``|Dh|^(n-1)``.
    """
    center = np.asarray(center, dtype=float)
    n = center.size
    quad = quad or QuadratureGrid()
    step = 1e-3 * radius
    fc, hc = _as_callable(f), _as_callable(h)
    lhs = abs(oriented_integral(fc, g, J, center, radius, quad=quad)
              - oriented_integral(hc, g, J, center, radius, quad=quad))
    omega, _ = quad.sphere(n - 1)
    g_inf = float(np.max(np.abs(_weight(g, center + radius * omega))))

    def diff_power(x):
        d = numeric_jacobian(fc, x, step) - numeric_jacobian(hc, x, step)
        return np.sqrt(np.sum(d**2, axis=(-2, -1))) ** (n - 1)

    A = surface_integral(lambda x: _frob_power(fc, x, step, n - 1), center, radius, quad)
    H = surface_integral(lambda x: _frob_power(hc, x, step, n - 1), center, radius, quad)
    D = surface_integral(diff_power, center, radius, quad)
    e = 1.0 / (n - 1)
    rhs = g_inf * sum(A ** ((k - 1) * e) * D**e * H ** ((n - 1 - k) * e) for k in range(1, n))
    if rhs == 0:
        if lhs > zero_tol:
            raise InternalError(f"estimate has zero right-hand side but the difference is {lhs:.3g}")
        return 0.0
    return lhs / rhs
