"""Group law, dilations, left-invariant frames and the homogeneous quasi-norm.

Points are given in exponential coordinates with respect to the graded
basis. Sequences of ints/``Fraction`` are handled exactly; numpy arrays
are handled in floating point and may carry leading batch axes.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np

from . import _exact
from .algebra import StratifiedAlgebra, bracket
from .errors import DimensionMismatch, InternalError


def _is_float(*xs) -> bool:
    return any(isinstance(x, np.ndarray) for x in xs)


def _exact_vec(alg: StratifiedAlgebra, x) -> list[Fraction]:
    if len(x) != alg.q:
        raise DimensionMismatch(f"point has {len(x)} coordinates, group has dimension {alg.q}")
    return [_exact.to_fraction(v) for v in x]


def _float_vec(alg: StratifiedAlgebra, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != alg.q:
        raise DimensionMismatch(f"points have {x.shape[-1]} coordinates, group has dimension {alg.q}")
    return x


# -- Baker-Campbell-Hausdorff ----------------------------------------------

def _compositions(budget: int):
    """Sequences of pairs (r, s) with r + s >= 1 and total at most ``budget``."""
    if budget <= 0:
        return
    for total in range(1, budget + 1):
        for r in range(total + 1):
            head = (r, total - r)
            yield (head,)
            for tail in _compositions(budget - total):
                yield (head,) + tail


@lru_cache(maxsize=None)
def dynkin_words(depth: int) -> tuple[tuple[tuple[int, ...], Fraction], ...]:
    """Coefficients of right-nested brackets in Dynkin's series.

    Returns ``((word, coeff), ...)`` where a word is a tuple over
    ``{0: x, 1: y}`` of length at most ``depth`` and stands for
    ``[w_1, [w_2, ..., [w_{N-1}, w_N]]]``. Words whose bracket is trivially
    zero are dropped; coefficients are merged per word.
    """
    acc: dict[tuple[int, ...], Fraction] = {}
    for seq in _compositions(depth):
        n = len(seq)
        total = sum(r + s for r, s in seq)
        denom = total
        word: tuple[int, ...] = ()
        for r, s in seq:
            denom *= factorial(r) * factorial(s)
            word += (0,) * r + (1,) * s
        if len(word) > 1 and word[-1] == word[-2]:
            continue
        coeff = Fraction((-1) ** (n - 1), n * denom)
        acc[word] = acc.get(word, Fraction(0)) + coeff
    return tuple((w, c) for w, c in sorted(acc.items(), key=lambda t: (len(t[0]), t[0])) if c != 0)


def _nested(alg, word, letters, cache):
    if word in cache:
        return cache[word]
    if len(word) == 1:
        out = letters[word[0]]
    else:
        out = bracket(alg, letters[word[0]], _nested(alg, word[1:], letters, cache))
    cache[word] = out
    return out


def bch_product(alg: StratifiedAlgebra, x, y):
    """Group product ``x * y`` through the Dynkin series truncated at the step.

    The truncation is exact since brackets of length above the step vanish.
    """
    if _is_float(x, y):
        letters = (_float_vec(alg, x), _float_vec(alg, y))
        shape = np.broadcast_shapes(letters[0].shape, letters[1].shape)
        letters = tuple(np.broadcast_to(v, shape) for v in letters)
        out = np.zeros(shape)
        cache: dict = {}
        for word, coeff in dynkin_words(alg.step):
            out = out + float(coeff) * _nested(alg, word, letters, cache)
        return out
    letters = (_exact_vec(alg, x), _exact_vec(alg, y))
    out = [Fraction(0)] * alg.q
    cache = {}
    for word, coeff in dynkin_words(alg.step):
        v = _nested(alg, word, letters, cache)
        out = [o + coeff * t for o, t in zip(out, v)]
    return out


def inverse(alg: StratifiedAlgebra, x):
    if _is_float(x):
        return -_float_vec(alg, x)
    return [-v for v in _exact_vec(alg, x)]


def dilation(alg: StratifiedAlgebra, x, r):
    """``delta_r``: coordinate ``i`` scales by ``r ** d_i``."""
    if r <= 0:
        raise ValueError(f"dilation factor must be positive, got {r}")
    if _is_float(x) or isinstance(r, float):
        x = _float_vec(alg, x)
        return x * np.asarray(r, dtype=float) ** np.array(alg.degrees, dtype=float)
    r = _exact.to_fraction(r)
    return [v * r**d for v, d in zip(_exact_vec(alg, x), alg.degrees)]


# -- frames ------------------------------------------------------------------

@lru_cache(maxsize=None)
def _series(depth: int) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    """Taylor coefficients of ``t / (1 - e^{-t})`` and its reciprocal up to ``t^depth``."""
    recip = [Fraction((-1) ** n, factorial(n + 1)) for n in range(depth + 1)]
    frame = [Fraction(0)] * (depth + 1)
    frame[0] = Fraction(1)
    for n in range(1, depth + 1):
        frame[n] = -sum((recip[k] * frame[n - k] for k in range(1, n + 1)), Fraction(0))
    return tuple(frame), tuple(recip)


def ad_matrix(alg: StratifiedAlgebra, z):
    """Matrix of ``ad_z`` acting on coefficient vectors (column ``i`` is ``[z, X_i]``)."""
    if _is_float(z):
        z = _float_vec(alg, z)
        return np.einsum("...j,jik->...ki", z, alg.structure_tensor)
    z = _exact_vec(alg, z)
    q = alg.q
    out = [[Fraction(0)] * q for _ in range(q)]
    for (j, i), row in alg.table.items():
        if z[j] == 0:
            continue
        for k, c in row.items():
            out[k][i] += z[j] * c
    return out


def _matrix_series(alg, z, coeffs):
    ad = ad_matrix(alg, z)
    if isinstance(ad, np.ndarray):
        eye = np.broadcast_to(np.eye(alg.q), ad.shape)
        out = float(coeffs[0]) * eye
        power = eye
        for c in coeffs[1:]:
            power = power @ ad
            if c:
                out = out + float(c) * power
        return out
    out = [[coeffs[0] * v for v in row] for row in _exact.identity(alg.q)]
    power = _exact.identity(alg.q)
    for c in coeffs[1:]:
        power = _exact.matmul(power, ad)
        if c:
            out = [[o + c * p for o, p in zip(ro, rp)] for ro, rp in zip(out, power)]
    return out


def frame(alg: StratifiedAlgebra, z):
    """Left-invariant frame at ``z``: column ``i`` is ``X_i(z) = (dl_z)_0 e_i``.

    This is the linear-in-``y`` part of ``z * y``, i.e. the nilpotent
    matrix series ``ad_z / (1 - exp(-ad_z))``.
    """
    return _matrix_series(alg, z, _series(alg.step)[0])


def coframe(alg: StratifiedAlgebra, z, check: bool = True):
    """Dual coframe at ``z``: row ``r`` holds ``eta_r(z)`` in ``dz`` coordinates.

    Computed from the reciprocal series ``(1 - exp(-ad_z)) / ad_z``; in
    exact mode the product with :func:`frame` is checked to be the identity.
    """
    out = _matrix_series(alg, z, _series(alg.step)[1])
    if check and not isinstance(out, np.ndarray):
        prod = _exact.matmul(out, frame(alg, z))
        if prod != _exact.identity(alg.q):
            raise InternalError(f"coframe is not inverse to frame at {z}")
    return out


def frame_polynomial(alg: StratifiedAlgebra):
    """Frame and coframe as sympy matrices in the symbols ``z1..zq``."""
    import sympy

    zs = sympy.symbols(f"z1:{alg.q + 1}")
    ad = sympy.zeros(alg.q, alg.q)
    for (j, i), row in alg.table.items():
        for k, c in row.items():
            ad[k, i] += zs[j] * sympy.Rational(c.numerator, c.denominator)
    fcoef, ccoef = _series(alg.step)

    def series(coeffs):
        out = sympy.zeros(alg.q, alg.q)
        power = sympy.eye(alg.q)
        for n, c in enumerate(coeffs):
            if n:
                power = power * ad
            out += sympy.Rational(c.numerator, c.denominator) * power
        return out.applyfunc(sympy.expand)

    return zs, series(fcoef), series(ccoef)


# -- homogeneous quasi-norm ------------------------------------------------

@dataclass(frozen=True)
class HomogeneousMetric:
    """``|w| = max_i |w_i| ** (1 / d_i)`` and ``d(x, y) = |x^{-1} y|``."""

    exponents: tuple[float, ...]

    @classmethod
    def for_algebra(cls, alg: StratifiedAlgebra) -> "HomogeneousMetric":
        return cls(tuple(1.0 / d for d in alg.degrees))

    def norm(self, w):
        w = np.abs(np.asarray(w, dtype=float))
        return np.max(w ** np.asarray(self.exponents), axis=-1)


def quasi_norm(alg: StratifiedAlgebra, w, metric: HomogeneousMetric | None = None):
    metric = metric or HomogeneousMetric.for_algebra(alg)
    return metric.norm(w)


def quasi_distance(alg: StratifiedAlgebra, x, y, metric: HomogeneousMetric | None = None):
    if not _is_float(x, y):
        w = [float(v) for v in bch_product(alg, inverse(alg, x), y)]
    else:
        w = bch_product(alg, -_float_vec(alg, x), _float_vec(alg, y))
    return quasi_norm(alg, w, metric)


def triangle_constant(alg: StratifiedAlgebra, n_triples: int = 10_000, seed: int = 0,
                      scale: float = 1.0, metric: HomogeneousMetric | None = None) -> float:
    """Largest observed ``d(x, z) / (d(x, y) + d(y, z))`` over random triples."""
    rng = np.random.default_rng(seed)
    x, y, z = (rng.uniform(-scale, scale, size=(n_triples, alg.q)) for _ in range(3))
    dxz = quasi_distance(alg, x, z, metric)
    denom = quasi_distance(alg, x, y, metric) + quasi_distance(alg, y, z, metric)
    ok = denom > 0
    return float(np.max(dxz[ok] / denom[ok]))
