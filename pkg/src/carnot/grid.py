"""Sampled mappings on boxes, their finite-difference differentials and pullbacks.

A :class:`GridMap` holds samples of ``f: Omega -> R^m`` on a regular
tensor grid over an axis-aligned box ``Omega`` in ``R^n``. Differentials use
central differences in the interior and one-sided differences on the
boundary (``numpy.gradient`` with ``edge_order=1``). Every residual
statistic ignores boundary cells.
"""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .algebra import StratifiedAlgebra
from .errors import DimensionMismatch, PreconditionDefect
from .forms import (
    KForm,
    chain_form,
    d_invariant,
    eta_wedge,
    index_sets,
    omit_one,
    permutation_sign,
    theta_form,
)
from .group import coframe

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib


# -- generators ----------------------------------------------------------------

def _trig_height(u, amplitude=0.0, frequency=1.0, **_):
    return amplitude * np.sum(np.sin(frequency * u), axis=-1)


def _random_trig_coeffs(n, m, seed, terms, amplitude, frequency):
    rng = np.random.default_rng(seed)
    return (
        amplitude * rng.standard_normal((m, terms)),
        frequency * rng.standard_normal((m, terms, n)),
        rng.uniform(0, 2 * np.pi, size=(m, terms)),
    )


def analytic_map(kind: str, params: dict | None = None) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorised ``f(points[..., n]) -> values[..., m]`` for a generator kind.

    Kinds: ``vertical_plane``, ``graph``, ``legendrian_lift``,
    ``random_trig``, ``constant``, ``identity``, ``linear``.
    """
    p = dict(params or {})
    if kind == "vertical_plane":
        # {x_1 = 0}: u -> (0, u)
        return lambda u: np.concatenate([np.zeros(u.shape[:-1] + (1,)), u], axis=-1)
    if kind == "graph":
        axis = p.get("axis")
        height = dict(p.get("height", {"kind": "zero"}))
        hkind = height.pop("kind", "zero")
        if hkind not in ("zero", "trig"):
            raise ValueError(f"unknown height function {hkind!r}")

        def graph(u):
            n = u.shape[-1]
            ax = n + 1 if axis is None else int(axis)
            if not 1 <= ax <= n + 1:
                raise ValueError(f"graph axis {ax} outside 1..{n + 1}")
            h = np.zeros(u.shape[:-1]) if hkind == "zero" else _trig_height(u, **height)
            return np.concatenate([u[..., : ax - 1], h[..., None], u[..., ax - 1:]], axis=-1)

        return graph
    if kind == "legendrian_lift":
        radius = float(p.get("radius", 1.0))

        def lift(u):
            t = u[..., 0]
            return np.stack([radius * np.cos(t), radius * np.sin(t), radius**2 * t / 2], axis=-1)

        return lift
    if kind == "random_trig":
        n, m = int(p["n"]), int(p["m"])
        amp, freq, phase = _random_trig_coeffs(
            n, m, int(p.get("seed", 0)), int(p.get("terms", 3)),
            float(p.get("amplitude", 1.0)), float(p.get("frequency", 1.0)),
        )
        return lambda u: np.einsum(
            "ct,...ct->...c", amp, np.sin(np.einsum("ctn,...n->...ct", freq, u) + phase)
        )
    if kind == "constant":
        value = np.asarray(p.get("value", [0.0]), dtype=float)
        return lambda u: np.broadcast_to(value, u.shape[:-1] + value.shape).copy()
    if kind == "identity":
        return lambda u: np.array(u, dtype=float, copy=True)
    if kind == "linear":
        mat = np.asarray(p["matrix"], dtype=float)
        offset = np.asarray(p.get("offset", np.zeros(mat.shape[0])), dtype=float)
        return lambda u: u @ mat.T + offset
    raise ValueError(f"unknown generator kind {kind!r}")


GENERATOR_KINDS = ("vertical_plane", "graph", "legendrian_lift", "random_trig", "constant",
                   "identity", "linear")


# -- the grid map ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GridMap:
    domain: tuple[tuple[float, float], ...]
    resolution: tuple[int, ...]
    values: np.ndarray = field(repr=False)
    generator: dict | None = None
    sobolev_p: float | None = None

    def __post_init__(self):
        domain = tuple((float(lo), float(hi)) for lo, hi in self.domain)
        resolution = tuple(int(r) for r in self.resolution)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "resolution", resolution)
        if len(domain) != len(resolution):
            raise DimensionMismatch("domain and resolution have different lengths")
        if any(r < 3 for r in resolution):
            raise ValueError("need at least 3 samples per axis for central differences")
        if any(hi <= lo for lo, hi in domain):
            raise ValueError("domain intervals must have lo < hi")
        vals = np.array(self.values, dtype=float)
        if vals.ndim == len(resolution):
            vals = vals[..., None]
        if vals.shape[:-1] != resolution:
            raise DimensionMismatch(f"values shape {vals.shape} does not match resolution {resolution}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, func, domain, resolution, generator=None, sobolev_p=None):
        domain = tuple(tuple(map(float, d)) for d in domain)
        resolution = tuple(int(r) for r in resolution)
        axes = [np.linspace(lo, hi, r) for (lo, hi), r in zip(domain, resolution)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return cls(domain, resolution, func(pts), generator, sobolev_p)

    @property
    def n(self) -> int:
        return len(self.resolution)

    @property
    def m(self) -> int:
        return self.values.shape[-1]

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((hi - lo) / (r - 1) for (lo, hi), r in zip(self.domain, self.resolution))

    @cached_property
    def axes(self) -> list[np.ndarray]:
        return [np.linspace(lo, hi, r) for (lo, hi), r in zip(self.domain, self.resolution)]

    def points(self) -> np.ndarray:
        return np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)

    @cached_property
    def jacobian(self) -> np.ndarray:
        """Finite-difference differential, shape ``resolution + (m, n)``."""
        grads = np.gradient(self.values, *self.spacing, axis=tuple(range(self.n)), edge_order=1)
        if self.n == 1:
            grads = [grads]
        out = np.stack(grads, axis=-1)
        out.setflags(write=False)
        return out

    @cached_property
    def interior(self) -> np.ndarray:
        mask = np.zeros(self.resolution, dtype=bool)
        mask[tuple(slice(1, r - 1) for r in self.resolution)] = True
        return mask

    def function(self) -> Callable[[np.ndarray], np.ndarray]:
        """Analytic generator if recorded, else cubic interpolation of the samples."""
        if self.generator is not None and self.generator.get("kind") in GENERATOR_KINDS:
            return analytic_map(self.generator["kind"], self.generator.get("params"))
        from scipy.interpolate import RegularGridInterpolator

        method = "cubic" if min(self.resolution) >= 4 else "linear"
        interp = RegularGridInterpolator(self.axes, self.values, method=method)

        def f(u):
            u = np.asarray(u, dtype=float)
            return interp(u.reshape(-1, self.n)).reshape(u.shape[:-1] + (self.m,))

        return f

    def resample(self, resolution) -> "GridMap":
        return GridMap.from_function(self.function(), self.domain, resolution, self.generator, self.sobolev_p)


def generate(kind: str, domain=None, resolution=None, h: float | None = None, **params) -> GridMap:
    """Sample a generator on a box. ``h`` picks the resolution from a target step."""
    defaults = {
        "vertical_plane": ((0.0, 1.0),) * int(params.get("q", 3) - 1),
        "graph": ((0.0, 1.0),) * int(params.get("q", 3) - 1),
        "legendrian_lift": ((0.0, 2 * math.pi), (0.0, 0.05)),
        "identity": ((0.0, 1.0),) * int(params.get("n", 3)),
    }
    if domain is None:
        if kind in defaults:
            domain = defaults[kind]
        elif "n" in params:
            domain = ((0.0, 1.0),) * int(params["n"])
        else:
            raise ValueError(f"generator {kind!r} needs an explicit domain")
    domain = tuple(tuple(map(float, d)) for d in domain)
    if resolution is None:
        if h is None:
            resolution = (33,) * len(domain)
        else:
            resolution = tuple(max(3, int(round((hi - lo) / h)) + 1) for lo, hi in domain)
    descriptor = {"kind": kind, "params": {k: v for k, v in params.items() if k != "q"}}
    if kind in ("vertical_plane", "graph"):
        descriptor["params"]["q"] = int(params.get("q", len(domain) + 1))
    return GridMap.from_function(analytic_map(kind, descriptor["params"]), domain, resolution, descriptor)


def differential(gm: GridMap, idx) -> np.ndarray:
    """``m x n`` finite-difference Jacobian at grid index ``idx``."""
    idx = tuple(int(i) for i in idx)
    if len(idx) != gm.n or any(not 0 <= i < r for i, r in zip(idx, gm.resolution)):
        raise IndexError(f"grid index {idx} outside resolution {gm.resolution}")
    return np.array(gm.jacobian[idx])


# -- rescaling and sections ---------------------------------------------------------

class Rescaled:
    """``y -> (phi(z + r y) - phi(z)) / r`` on the unit ball."""

    def __init__(self, phi, z, r, domain=None):
        if r <= 0:
            raise ValueError("rescaling radius must be positive")
        self.z = np.asarray(z, dtype=float)
        self.r = float(r)
        self.base = phi
        if isinstance(phi, GridMap):
            domain = phi.domain
            self._f = phi.function()
        else:
            self._f = phi
        self.domain = domain
        if domain is not None:
            for zi, (lo, hi) in zip(self.z, domain):
                if zi - self.r < lo - 1e-12 or zi + self.r > hi + 1e-12:
                    raise ValueError(f"ball B({self.z.tolist()}, {self.r}) exits the domain")
        self._fz = np.asarray(self._f(self.z[None, :]))[0]

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return (self._f(self.z + self.r * y) - self._fz) / self.r

    def to_grid(self, resolution) -> GridMap:
        """Samples on ``[-1, 1]^n`` (the unit ball's bounding box)."""
        n = self.z.size
        if np.isscalar(resolution):
            resolution = (int(resolution),) * n
        return GridMap.from_function(self, ((-1.0, 1.0),) * n, resolution)


def rescale(phi, z, r, domain=None) -> Rescaled:
    return Rescaled(phi, z, r, domain)


def slice_section(gm: GridMap, gamma: Sequence[int], z: Sequence[float], atol: float = 1e-9) -> GridMap:
    """Section ``u^(z)(y) = u(z + y)`` on the axes in ``gamma`` (1-based).

    ``z`` lists coordinates for the complementary axes in increasing axis
    order and must lie on the grid.
    """
    gamma = sorted(set(int(g) for g in gamma))
    if not gamma or len(gamma) >= gm.n or any(not 1 <= g <= gm.n for g in gamma):
        raise ValueError(f"gamma must be a nonempty proper subset of 1..{gm.n}, got {gamma}")
    rest = [a for a in range(1, gm.n + 1) if a not in gamma]
    z = list(np.atleast_1d(np.asarray(z, dtype=float)))
    if len(z) != len(rest):
        raise DimensionMismatch(f"z needs {len(rest)} coordinates for axes {rest}")
    index: list = [slice(None)] * gm.n
    for a, zc in zip(rest, z):
        ax = gm.axes[a - 1]
        i = int(np.argmin(np.abs(ax - zc)))
        if abs(ax[i] - zc) > atol * max(1.0, abs(zc)):
            raise ValueError(f"z coordinate {zc} is not a grid node on axis {a}")
        index[a - 1] = i
    return GridMap(
        tuple(gm.domain[g - 1] for g in gamma),
        tuple(gm.resolution[g - 1] for g in gamma),
        gm.values[tuple(index)],
    )


# -- pullback fields -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FormField:
    """Cellwise coefficients of a k-form on ``R^n`` in the ``dx_I`` basis."""

    degree: int
    n: int
    coeffs: np.ndarray  # shape grid + (len(keys),)

    @property
    def keys(self) -> list[tuple[int, ...]]:
        return index_sets(self.degree, self.n)

    def norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.coeffs**2, axis=-1))

    def component(self, key) -> np.ndarray:
        return self.coeffs[..., self.keys.index(tuple(key))]

    def wedge(self, other: "FormField") -> "FormField":
        k = self.degree + other.degree
        shape = np.broadcast_shapes(self.coeffs.shape[:-1], other.coeffs.shape[:-1])
        out_keys = index_sets(k, self.n)
        out = np.zeros(shape + (len(out_keys),))
        pos = {key: i for i, key in enumerate(out_keys)}
        for ia, a in enumerate(self.keys):
            for ib, b in enumerate(other.keys):
                sign = permutation_sign(a + b)
                if sign:
                    out[..., pos[tuple(sorted(a + b))]] += sign * self.coeffs[..., ia] * other.coeffs[..., ib]
        return FormField(k, self.n, out)


def eta_components(gm: GridMap, alg: StratifiedAlgebra) -> np.ndarray:
    """``M = coframe(f(y)) @ Df(y)``: column ``j`` is ``df(d_j)`` in the ``X(f(y))`` basis."""
    if gm.m != alg.q:
        raise DimensionMismatch(f"map into R^{gm.m} but the group has dimension {alg.q}")
    return coframe(alg, gm.values) @ gm.jacobian


def _as_eta_form(alg: StratifiedAlgebra, form) -> KForm:
    if isinstance(form, KForm):
        if form.basis != "eta":
            raise ValueError("pullback_field expects an eta-basis form")
        return form
    return eta_wedge(alg, tuple(form))


def pullback_components(M: np.ndarray, form: KForm, n: int) -> FormField:
    """Pull back a constant eta-form through per-cell matrices ``M`` (``q x n``)."""
    k = form.degree
    grid = M.shape[:-2]
    if k > n:
        return FormField(k, n, np.zeros(grid + (0,)))
    keys = index_sets(k, n)
    out = np.zeros(grid + (len(keys),))
    for J, c in form.coeffs.items():
        c = float(c)
        if k == 0:
            out[..., 0] += c
            continue
        rows = [j - 1 for j in J]
        for t, I in enumerate(keys):
            sub = M[..., rows, :][..., [i - 1 for i in I]]
            out[..., t] += c * np.linalg.det(sub)
    return FormField(k, n, out)


def pullback_field(gm: GridMap, alg: StratifiedAlgebra, form) -> FormField:
    """``f^* omega`` on every cell, for an eta-form or a tuple of eta indices."""
    form = _as_eta_form(alg, form)
    return pullback_components(eta_components(gm, alg), form, gm.n)


# -- defects and the chain check ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DefectField:
    values: np.ndarray
    interior: np.ndarray
    tol: float

    def __post_init__(self):
        if np.any(self.values < 0):
            raise ValueError("defects are nonnegative")

    @property
    def interior_values(self) -> np.ndarray:
        return self.values[self.interior]

    @property
    def max(self) -> float:
        v = self.interior_values
        return float(v.max()) if v.size else 0.0

    @property
    def mean(self) -> float:
        v = self.interior_values
        return float(v.mean()) if v.size else 0.0

    @property
    def fraction_above(self) -> float:
        """Share of interior cells above ``tol``; the grid stand-in for positive measure."""
        v = self.interior_values
        return float(np.mean(v > self.tol)) if v.size else 0.0

    def summary(self) -> dict:
        return {"max": self.max, "mean": self.mean, "fraction_above_tol": self.fraction_above,
                "tol": self.tol}


def rank_field(gm: GridMap, rtol: float = 1e-6, atol: float = 1e-12) -> np.ndarray:
    sv = np.linalg.svd(gm.jacobian, compute_uv=False)
    cut = np.maximum(rtol * sv[..., :1], atol)
    return np.sum(sv > cut, axis=-1)


def rank_histogram(gm: GridMap, rtol: float = 1e-6) -> dict[int, int]:
    ranks = rank_field(gm, rtol)[gm.interior]
    values, counts = np.unique(ranks, return_counts=True)
    return {int(v): int(c) for v, c in zip(values, counts)}


def horizontality_defect(gm: GridMap, alg: StratifiedAlgebra, mode: str, tol: float = 1e-6) -> DefectField:
    """Cellwise failure of ``df(R^{q-1}) in H_1`` or ``H_1 in df(R^{q-1})``.

    ``image_in_H1`` (requires ``m_1 = q - 1``): ``max_{s > m_1} |f^* eta_s| / |Df|``.
    ``H1_in_image`` (requires ``m_1 < q - 1``): ``max_{s <= m_1}`` of the
    omit-``s`` form on ``df(d_1) ^ ... ^ df(d_{q-1})``, divided by ``|Df|^{q-1}``.
    A zero value certifies containment only where ``Df`` has full rank.
    """
    q, m1 = alg.q, alg.strata_dims[0]
    if gm.n != q - 1:
        raise DimensionMismatch(f"need a map from R^{q - 1}, got R^{gm.n}")
    M = eta_components(gm, alg)
    frob = np.sqrt(np.sum(gm.jacobian**2, axis=(-2, -1)))
    if mode == "image_in_H1":
        if m1 != q - 1:
            raise ValueError("image_in_H1 applies when the horizontal layer has codimension one")
        raw = np.max(np.sqrt(np.sum(M[..., m1:, :] ** 2, axis=-1)), axis=-1)
        scale = frob
    elif mode == "H1_in_image":
        if m1 >= q - 1:
            raise ValueError("H1_in_image applies when the horizontal layer has codimension > 1")
        vals = []
        for s in range(1, m1 + 1):
            rows = [i for i in range(q) if i != s - 1]
            vals.append(np.abs(np.linalg.det(M[..., rows, :])))
        raw = np.max(np.stack(vals, axis=-1), axis=-1)
        scale = frob ** (q - 1)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(scale > 0, raw / np.where(scale > 0, scale, 1.0), 0.0)
    return DefectField(out, gm.interior, tol)


@dataclass
class ChainReport:
    kappa: int
    tol: float
    step1: dict
    d_xi: dict
    step2_via_theta: dict[int, dict]
    step2_direct: dict[int, dict]
    identity_exact: dict[int, bool]
    rank_histogram: dict[int, int]
    notes: list[str] = field(default_factory=list)

    @property
    def max_rank(self) -> int:
        return max(self.rank_histogram) if self.rank_histogram else 0

    def step2_holds(self) -> bool:
        return all(v["max"] <= self.tol for v in self.step2_via_theta.values())

    def as_dict(self) -> dict:
        return {
            "kappa": self.kappa, "tol": self.tol, "step1": self.step1, "d_xi": self.d_xi,
            "step2_via_theta": {str(k): v for k, v in self.step2_via_theta.items()},
            "step2_direct": {str(k): v for k, v in self.step2_direct.items()},
            "identity_exact": {str(k): v for k, v in self.identity_exact.items()},
            "rank_histogram": {str(k): v for k, v in self.rank_histogram.items()},
            "notes": list(self.notes),
        }


def vanishing_chain_check(gm: GridMap, alg: StratifiedAlgebra, kappa: int = 1, tol: float = 1e-6,
                          rank_rtol: float = 1e-6, step2_tol: float | None = None) -> ChainReport:
    """Check the pulled-back vanishing chain on a sampled map.

    Requires ``f^*(eta_{m_kappa+1} ^ ... ^ eta_q)`` below ``tol`` on at least
    a ``1 - tol`` share of interior cells, otherwise raises
    :class:`PreconditionDefect` carrying the raw residual field. Then
    wedges ``f^* theta_s`` with ``f^* d(eta_{m_kappa+1} ^ ... ^ eta_q)`` for
    every ``s`` of degree ``kappa + 1`` and reports the residuals next to
    the direct pullback of the omit-``s`` form.
    """
    if alg.commutative:
        raise ValueError("the chain check needs a noncommutative group (step >= 2)")
    if not 1 <= kappa < alg.step:
        raise ValueError(f"kappa must lie in 1..{alg.step - 1}")
    step2_tol = tol if step2_tol is None else step2_tol
    off = alg.layer_offsets
    xi = eta_wedge(alg, range(off[kappa] + 1, alg.q + 1))
    M = eta_components(gm, alg)
    step1 = DefectField(pullback_components(M, xi, gm.n).norm(), gm.interior, tol)
    ranks = rank_histogram(gm, rank_rtol)
    if step1.fraction_above > tol:
        partial = ChainReport(kappa, tol, step1.summary(), {}, {}, {}, {}, ranks,
                              ["step-1 vanishing fails; chain not evaluated"])
        raise PreconditionDefect(
            f"f^*(eta_{off[kappa] + 1}..eta_{alg.q}) exceeds {tol} on "
            f"{100 * step1.fraction_above:.2f}% of interior cells (max {step1.max:.3g})",
            defect=step1, report=partial,
        )
    dxi_field = pullback_components(M, d_invariant(alg, xi), gm.n)
    via, direct, exact = {}, {}, {}
    for s in alg.layer(kappa + 1):
        product, target, sign = chain_form(alg, s)
        exact[s] = product == sign * target
        theta_field = pullback_components(M, theta_form(alg, s), gm.n)
        via[s] = DefectField(theta_field.wedge(dxi_field).norm(), gm.interior, step2_tol).summary()
        direct[s] = DefectField(pullback_components(M, omit_one(alg.q, s), gm.n).norm(),
                                gm.interior, step2_tol).summary()
    report = ChainReport(
        kappa, tol, step1.summary(),
        DefectField(dxi_field.norm(), gm.interior, step2_tol).summary(),
        via, direct, exact, ranks,
    )
    return report


# -- serialisation -----------------------------------------------------------------------

def _header(gm: GridMap) -> dict:
    return {"domain": [list(d) for d in gm.domain], "resolution": list(gm.resolution), "m": gm.m,
            "generator": gm.generator}


def save_csv(gm: GridMap, path) -> None:
    """CSV with ``#`` header lines (domain, resolution, m) then one sample per row, C order."""
    h = _header(gm)
    lines = [
        "# domain = " + ",".join(f"{lo!r}:{hi!r}" for lo, hi in gm.domain),
        "# resolution = " + ",".join(str(r) for r in gm.resolution),
        f"# m = {gm.m}",
    ]
    if h["generator"] is not None:
        lines.append("# generator = " + json.dumps(h["generator"], sort_keys=True))
    buf = io.StringIO()
    np.savetxt(buf, gm.values.reshape(-1, gm.m), delimiter=",", fmt="%.17g")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n" + buf.getvalue())


def load_csv(path) -> GridMap:
    meta = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].partition("=")
            meta[key.strip()] = value.strip()
    domain = [tuple(float(x) for x in part.split(":")) for part in meta["domain"].split(",")]
    resolution = tuple(int(x) for x in meta["resolution"].split(","))
    m = int(meta["m"])
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    generator = json.loads(meta["generator"]) if "generator" in meta else None
    return GridMap(domain, resolution, data.reshape(resolution + (m,)), generator)


_MAGIC = b"GRIDMAP1\n"


def save_binary(gm: GridMap, path) -> None:
    """Magic line, one JSON header line, then little-endian float64 samples."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(json.dumps(_header(gm), sort_keys=True).encode() + b"\n")
        fh.write(np.ascontiguousarray(gm.values, dtype="<f8").tobytes())


def load_binary(path) -> GridMap:
    with open(path, "rb") as fh:
        if fh.readline() != _MAGIC:
            raise ValueError(f"{path} is not a grid map file")
        h = json.loads(fh.readline())
        data = np.frombuffer(fh.read(), dtype="<f8")
    shape = tuple(h["resolution"]) + (h["m"],)
    return GridMap(h["domain"], h["resolution"], data.reshape(shape), h.get("generator"))


def dumps_generator(descriptor: dict, domain=None, resolution=None) -> str:
    import tomli_w

    doc = {"kind": descriptor["kind"], "params": descriptor.get("params", {})}
    if domain is not None:
        doc["domain"] = [list(d) for d in domain]
    if resolution is not None:
        doc["resolution"] = list(resolution)
    return tomli_w.dumps(doc)


def loads_generator(text: str) -> GridMap:
    doc = tomllib.loads(text)
    return generate(doc["kind"], domain=doc.get("domain"), resolution=doc.get("resolution"),
                    **doc.get("params", {}))


def load_gridmap(path) -> GridMap:
    """Dispatch on suffix: ``.csv``, ``.toml`` (generator descriptor), anything else binary."""
    path = str(path)
    if path.endswith(".csv"):
        return load_csv(path)
    if path.endswith(".toml"):
        with open(path, encoding="utf-8") as fh:
            return loads_generator(fh.read())
    return load_binary(path)
