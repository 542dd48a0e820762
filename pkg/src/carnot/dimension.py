"""Box-counting dimension with respect to the homogeneous quasi-distance.

Two cell systems are available in homogeneous mode:

``translated`` (default)
    At scale ``eps`` the first-layer coordinates are floored to the grid of
    side ``eps``; every further layer is floored after left-translating the
    point back by the cell corner found so far. Cells are then left
    translates of ``delta_eps`` of a unit box, so they are comparable to
    quasi-metric balls everywhere, not only near the identity.
``coordinate``
    Plain boxes with side ``eps ** d_i`` along coordinate ``i``. These are
    comparable to balls only near the identity and overcount horizontal sets.

Euclidean mode uses cubes of side ``eps``.

Counting is streamed in chunks and, when the samples come from a grid, the
sampling density is checked: neighbouring samples must differ by at most
half a cell side in every coordinate (after left translation in
translated mode). Scales violating this are flagged with
:class:`~carnot.errors.SaturationWarning` and excluded from the fit.
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .algebra import StratifiedAlgebra, resolve_group
from .errors import SaturationWarning
from .grid import GridMap, analytic_map, generate, rank_histogram
from .group import bch_product
from .validation import check_points, check_scales

DEFAULT_SCALES = tuple(2.0**-k for k in range(2, 8))
METRICS = ("homogeneous", "euclidean")
CELLS = ("translated", "coordinate")
CHUNK = 1 << 18

CAVEAT = ("box counting bounds the dimension from below at desk scale; it does not certify "
          "positive Hausdorff measure")


def worker_count() -> int:
    raw = os.environ.get("CARNOT_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValueError(f"CARNOT_THREADS must be a positive integer, got {raw!r}") from None
    return min(8, os.cpu_count() or 1)


# -- point clouds ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PointCloud:
    """Samples in ``R^q``.

    ``grid_shape`` marks the rows as a C-ordered parameter grid, enabling
    the neighbour density check. ``fiber = (lo, hi)`` turns every row into
    the segment ``{x + t e_q : lo <= t <= hi}`` (one-dimensional top layer);
    with ``half_open`` the segment excludes ``hi``.
    """

    points: np.ndarray
    grid_shape: tuple[int, ...] | None = None
    fiber: tuple[float, float] | None = None
    provenance: dict = field(default_factory=dict)
    half_open: bool = False

    def __post_init__(self):
        pts = check_points(self.points)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.grid_shape is not None and math.prod(self.grid_shape) != len(pts):
            raise ValueError("grid_shape does not match the number of points")
        if self.fiber is not None and not self.fiber[0] <= self.fiber[1]:
            raise ValueError("fiber must satisfy lo <= hi")

    @classmethod
    def from_gridmap(cls, gm: GridMap) -> "PointCloud":
        return cls(gm.values.reshape(-1, gm.m), gm.resolution, None,
                   {"source": "gridmap", "generator": gm.generator})

    def __len__(self) -> int:
        return len(self.points)


# -- cells ------------------------------------------------------------------------------

def _layer_slices(alg: StratifiedAlgebra) -> list[slice]:
    off = alg.layer_offsets
    return [slice(off[j], off[j + 1]) for j in range(alg.step)]


def cell_keys(points: np.ndarray, alg: StratifiedAlgebra | None, eps: float,
              metric: str = "homogeneous", cells: str = "translated",
              return_base: bool = False):
    """Integer cell indices, one row per point."""
    points = np.asarray(points, dtype=float)
    if metric == "euclidean" or alg is None:
        keys = np.floor(points / eps).astype(np.int64)
        return (keys, keys * eps) if return_base else keys
    sides = np.asarray(eps, dtype=float) ** np.array(alg.degrees, dtype=float)
    if cells == "coordinate":
        keys = np.floor(points / sides).astype(np.int64)
        return (keys, keys * sides) if return_base else keys
    if cells != "translated":
        raise ValueError(f"unknown cell system {cells!r}")
    keys = np.zeros(points.shape, dtype=np.int64)
    base = np.zeros_like(points)
    for j, sl in enumerate(_layer_slices(alg)):
        w = points if j == 0 else bch_product(alg, -base, points)
        keys[:, sl] = np.floor(w[:, sl] / sides[sl])
        base[:, sl] = keys[:, sl] * sides[sl]
    return (keys, base) if return_base else keys


def _side_lengths(alg, eps, metric, q):
    if metric == "euclidean" or alg is None:
        return np.full(q, float(eps))
    return float(eps) ** np.array(alg.degrees, dtype=float)


def neighbour_ratio(grid_values: np.ndarray, alg: StratifiedAlgebra | None, eps: float,
                    metric: str = "homogeneous", cells: str = "translated") -> float:
    """Largest neighbour difference divided by half the cell side, over all axes and coordinates."""
    q = grid_values.shape[-1]
    half = 0.5 * _side_lengths(alg, eps, metric, q)
    worst = 0.0
    for ax in range(grid_values.ndim - 1):
        if grid_values.shape[ax] < 2:
            continue
        a = np.moveaxis(grid_values, ax, 0)
        x, y = a[:-1].reshape(-1, q), a[1:].reshape(-1, q)
        if metric == "homogeneous" and cells == "translated" and alg is not None:
            d = bch_product(alg, -x, y)
        else:
            d = y - x
        worst = max(worst, float(np.max(np.abs(d) / half)))
    return worst


def _unique_rows(keys: np.ndarray) -> np.ndarray:
    keys = np.ascontiguousarray(keys)
    view = keys.view(np.dtype((np.void, keys.dtype.itemsize * keys.shape[1]))).ravel()
    return np.unique(view)


def _count_fibers(points, fiber, alg, eps, metric, cells, half_open=False) -> int:
    """Cells met by vertical segments: per lower cell, size of the union of index intervals."""
    q = points.shape[1]
    if alg is not None and metric == "homogeneous" and alg.strata_dims[-1] != 1:
        raise ValueError("fiber clouds need a one-dimensional top layer")
    lo, hi = fiber
    side = _side_lengths(alg, eps, metric, q)[-1]
    base_pts = points.copy()
    base_pts[:, -1] = 0.0
    if metric == "homogeneous" and cells == "translated" and alg is not None:
        keys, base = cell_keys(base_pts, alg, eps, metric, cells, return_base=True)
        base[:, -1] = 0.0
        shift = bch_product(alg, -base, base_pts)[:, -1]
    else:
        keys = cell_keys(base_pts, alg, eps, metric, cells)
        shift = np.zeros(len(points))
    klo = np.floor((points[:, -1] + lo + shift) / side).astype(np.int64)
    if half_open:
        khi = np.ceil((points[:, -1] + hi + shift) / side).astype(np.int64) - 1
    else:
        khi = np.floor((points[:, -1] + hi + shift) / side).astype(np.int64)
    lower = keys[:, :-1]
    if lower.shape[1]:
        _, group = np.unique(lower, axis=0, return_inverse=True)
        group = group.ravel()
    else:
        group = np.zeros(len(points), dtype=np.int64)
    order = np.lexsort((klo, group))
    g, a, b = group[order], klo[order], khi[order]
    total = 0
    starts = np.flatnonzero(np.r_[True, g[1:] != g[:-1]])
    ends = np.r_[starts[1:], len(g)]
    for s, e in zip(starts, ends):
        aa, bb = a[s:e], b[s:e]
        reach = np.maximum.accumulate(bb)
        new_run = np.r_[True, aa[1:] > reach[:-1] + 1]
        run_id = np.cumsum(new_run) - 1
        run_lo = aa[new_run]
        run_hi = np.zeros(run_lo.size, dtype=np.int64)
        np.maximum.at(run_hi, run_id, bb)
        total += int(np.sum(run_hi - run_lo + 1))
    return total


def _count_chunks(chunks: Iterable[np.ndarray], alg, eps, metric, cells) -> int:
    def one(pts):
        return _unique_rows(cell_keys(pts, alg, eps, metric, cells))

    workers = worker_count()
    if workers == 1:
        parts = [one(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, chunks))
    if not parts:
        return 0
    return int(np.unique(np.concatenate(parts)).size)


def anisotropic_box_count(cloud: PointCloud | np.ndarray, alg: StratifiedAlgebra | None, eps: float,
                          metric: str = "homogeneous", cells: str = "translated") -> int:
    """Number of cells at scale ``eps`` containing at least one sample.

    Warns with :class:`SaturationWarning` when the grid neighbour check
    fails, or for unstructured clouds when every sample sits in its own cell.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}")
    if not isinstance(cloud, PointCloud):
        cloud = PointCloud(cloud)
    if alg is not None and cloud.points.shape[1] != alg.q:
        raise ValueError(f"points live in R^{cloud.points.shape[1]}, group has dimension {alg.q}")
    if cloud.fiber is not None:
        return _count_fibers(cloud.points, cloud.fiber, alg, eps, metric, cells, cloud.half_open)
    pts = cloud.points
    count = _count_chunks((pts[i:i + CHUNK] for i in range(0, len(pts), CHUNK)), alg, eps, metric, cells)
    if cloud.grid_shape is not None:
        ratio = neighbour_ratio(pts.reshape(cloud.grid_shape + (-1,)), alg, eps, metric, cells)
        if ratio > 1 + 1e-9:
            warnings.warn(f"eps = {eps:g}: neighbouring samples differ by {ratio:.2f} half-cells",
                          SaturationWarning, stacklevel=2)
    elif len(pts) > 1 and count >= len(pts):
        warnings.warn(f"eps = {eps:g}: every sample occupies its own cell", SaturationWarning, stacklevel=2)
    return count


# -- fitting ----------------------------------------------------------------------------

def dimension_fit(counts: Sequence[tuple[float, int]]) -> tuple[float, float]:
    """Least-squares slope of ``log N`` against ``log(1/eps)`` and the RMS residual."""
    counts = [(float(e), float(n)) for e, n in counts]
    if len(counts) < 3:
        raise ValueError(f"need at least 3 unsaturated scales, got {len(counts)}")
    if any(e <= 0 or n < 1 for e, n in counts):
        raise ValueError("scales must be positive and counts at least 1")
    x = np.log([1 / e for e, _ in counts])
    y = np.log([n for _, n in counts])
    if np.ptp(x) == 0:
        raise ValueError("scales must not all coincide")
    slope, icept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + icept)) ** 2)))
    return float(slope), resid


@dataclass
class BoxCountResult:
    metric: str
    scales: list[float]
    counts: list[int]
    saturated: list[bool]
    slope: float
    residual: float
    cells: str = "translated"

    @property
    def table(self) -> list[tuple[float, int]]:
        return list(zip(self.scales, self.counts))

    def is_monotone(self) -> bool:
        """``N`` nonincreasing in ``eps`` over the computed table."""
        pairs = sorted(self.table)
        return all(a[1] >= b[1] for a, b in zip(pairs, pairs[1:]))


def _fit_table(metric, cells, scales, counts, saturated) -> BoxCountResult:
    valid = [(e, n) for e, n, s in zip(scales, counts, saturated) if not s]
    slope, resid = dimension_fit(valid)
    return BoxCountResult(metric, list(scales), list(counts), list(saturated), slope, resid, cells)


def box_count_table(cloud: PointCloud | np.ndarray, alg: StratifiedAlgebra | None,
                    scales: Sequence[float] = DEFAULT_SCALES, metric: str = "homogeneous",
                    cells: str = "translated") -> BoxCountResult:
    scales = check_scales(scales)
    counts, saturated = [], []
    for eps in scales:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", SaturationWarning)
            counts.append(anisotropic_box_count(cloud, alg, eps, metric, cells))
        sat = any(issubclass(w.category, SaturationWarning) for w in caught)
        saturated.append(sat)
        for w in caught:
            warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
    return _fit_table(metric, cells, scales, counts, saturated)


# -- sampling generator maps at the density a scale needs ----------------------------------

def _growth_rates(func, domain, alg, metric, cells, probe=17) -> np.ndarray:
    """``rates[axis, coord]``: neighbour difference per unit parameter step on a probe grid."""
    n = len(domain)
    axes = [np.linspace(lo, hi, probe) for lo, hi in domain]
    pts = func(np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1))
    q = pts.shape[-1]
    rates = np.zeros((n, q))
    for ax in range(n):
        h = (domain[ax][1] - domain[ax][0]) / (probe - 1)
        a = np.moveaxis(pts, ax, 0)
        x, y = a[:-1].reshape(-1, q), a[1:].reshape(-1, q)
        d = bch_product(alg, -x, y) if (metric == "homogeneous" and cells == "translated") else y - x
        rates[ax] = np.max(np.abs(d), axis=0) / h
    return rates


def sampling_resolution(func, domain, alg, eps, metric="homogeneous", cells="translated",
                        safety: float = 0.8, rates: np.ndarray | None = None) -> tuple[int, ...]:
    """Parameter resolution so neighbour differences stay below half a cell side."""
    if rates is None:
        rates = _growth_rates(func, domain, alg, metric, cells)
    half = 0.5 * _side_lengths(alg, eps, metric, rates.shape[1])
    res = []
    for ax, (lo, hi) in enumerate(domain):
        need = np.where(rates[ax] > 0, safety * half / np.where(rates[ax] > 0, rates[ax], 1), np.inf)
        step = float(np.min(need))
        res.append(3 if not np.isfinite(step) else max(3, int(math.ceil((hi - lo) / step)) + 1))
    return tuple(res)


def _grid_chunks(func, domain, resolution, rows_per_chunk):
    """Slabs along the first axis, each with one overlapping row for the neighbour check.

    The parameter box is sampled half-open, so a closed face cannot add a
    spurious layer of cells at coarse scales.
    """
    axes = [np.linspace(lo, hi, r, endpoint=False) for (lo, hi), r in zip(domain, resolution)]
    first = axes[0]
    for start in range(0, len(first), rows_per_chunk):
        stop = min(len(first), start + rows_per_chunk + 1)
        slab = np.stack(np.meshgrid(first[start:stop], *axes[1:], indexing="ij"), axis=-1)
        yield start, stop, func(slab)


def count_generated(func, domain, alg, eps, metric="homogeneous", cells="translated",
                    max_points: int = 40_000_000, rates=None) -> tuple[int, bool, tuple[int, ...]]:
    """Count cells met by ``func(domain)`` sampled at the density ``eps`` needs.

    Returns ``(count, saturated, resolution)``; ``saturated`` is set when the
    neighbour check fails or the required sample budget exceeds ``max_points``.
    """
    res = sampling_resolution(func, domain, alg, eps, metric, cells, rates=rates)
    saturated = False
    if math.prod(res) > max_points:
        # out of budget: a cheap undersampled count, flagged and excluded from fits
        scale = (min(max_points, 1_000_000) / math.prod(res)) ** (1 / len(res))
        res = tuple(max(3, int(r * scale)) for r in res)
        saturated = True
    per_row = math.prod(res[1:])
    rows = max(1, CHUNK // max(per_row, 1))
    parts, worst = [], 0.0
    metric_alg = None if metric == "euclidean" else alg

    def one(job):
        start, stop, vals = job
        body = vals if stop == res[0] else vals[:-1]
        keys = _unique_rows(cell_keys(body.reshape(-1, vals.shape[-1]), metric_alg, eps, metric, cells))
        return keys, neighbour_ratio(vals, metric_alg, eps, metric, cells)

    jobs = _grid_chunks(func, domain, res, rows)
    workers = worker_count()
    if workers == 1:
        results = [one(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, jobs))
    for keys, ratio in results:
        parts.append(keys)
        worst = max(worst, ratio)
    if worst > 1 + 1e-9:
        saturated = True
    count = int(np.unique(np.concatenate(parts)).size)
    if saturated:
        warnings.warn(f"eps = {eps:g}: sampling at resolution {res} is too coarse for this scale",
                      SaturationWarning, stacklevel=2)
    return count, saturated, res


def gridmap_box_count_table(gm: GridMap, alg: StratifiedAlgebra, scales=DEFAULT_SCALES,
                            metric="homogeneous", cells="translated",
                            max_points: int = 40_000_000, refine: float = 1.0) -> BoxCountResult:
    """Box counts of ``f(Omega)``, resampling the generator per scale when one is recorded.

    ``refine`` multiplies the sampling density chosen for each scale.
    """
    scales = check_scales(scales)
    if gm.generator is None:
        return box_count_table(PointCloud.from_gridmap(gm), None if metric == "euclidean" else alg,
                               scales, metric, cells)
    func = analytic_map(gm.generator["kind"], gm.generator.get("params"))
    rates = refine * _growth_rates(func, gm.domain, alg, metric, cells)
    counts, sat = [], []
    for eps in scales:
        c, s, _ = count_generated(func, gm.domain, alg, eps, metric, cells, max_points, rates)
        counts.append(c)
        sat.append(s)
    return _fit_table(metric, cells, scales, counts, sat)


# -- estimator ---------------------------------------------------------------------------

class BoxCountingDimension(BaseEstimator):
    """Box-counting dimension of a point cloud.

    >>> est = BoxCountingDimension(group="heisenberg").fit(points)   # doctest: +SKIP
    >>> est.dimension_                                               # doctest: +SKIP
    """

    def __init__(self, group="heisenberg", metric="homogeneous", scales=DEFAULT_SCALES,
                 cells="translated"):
        self.group = group
        self.metric = metric
        self.scales = scales
        self.cells = cells

    def fit(self, X, y=None):
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")
        if self.cells not in CELLS:
            raise ValueError(f"cells must be one of {CELLS}")
        X = check_points(X)
        alg = resolve_group(self.group) if self.group is not None else None
        result = box_count_table(X, alg, self.scales, self.metric, self.cells)
        self.result_ = result
        self.counts_ = result.table
        self.dimension_ = result.slope
        self.residual_ = result.residual
        self.n_features_in_ = X.shape[1]
        return self


# -- the lower-bound experiment ---------------------------------------------------------------

@dataclass
class GromovReport:
    verdict: str
    Q: int
    target: float
    tol: float
    homogeneous: BoxCountResult
    euclidean: BoxCountResult
    rank_histogram: dict[int, int]
    full_rank_fraction: float
    caveat: str = ""
    seed: int | None = None
    label: str = ""

    def rows(self) -> list[tuple[float, int, int]]:
        return list(zip(self.homogeneous.scales, self.homogeneous.counts, self.euclidean.counts))

    def to_csv(self) -> str:
        lines = [f"# seed = {self.seed}", "eps,N_homogeneous,N_euclidean"]
        lines += [f"{e!r},{a},{b}" for e, a, b in self.rows()]
        return "\n".join(lines) + "\n"

    def to_toml(self) -> str:
        import tomli_w

        doc = {"dimension": {
            "label": self.label, "verdict": self.verdict, "Q": self.Q, "target": self.target,
            "tol": self.tol, "seed": -1 if self.seed is None else self.seed,
            "slope_homogeneous": self.homogeneous.slope, "residual_homogeneous": self.homogeneous.residual,
            "slope_euclidean": self.euclidean.slope, "residual_euclidean": self.euclidean.residual,
            "cells": self.homogeneous.cells, "full_rank_fraction": self.full_rank_fraction,
            "rank_histogram": {str(k): v for k, v in self.rank_histogram.items()},
            "saturated_scales": [e for e, s in zip(self.homogeneous.scales, self.homogeneous.saturated) if s],
            "caveat": self.caveat,
        }}
        return tomli_w.dumps(doc)


def gromov_experiment(gm: GridMap, alg: StratifiedAlgebra, scales=DEFAULT_SCALES, tol: float = 0.25,
                      rank_fraction: float = 0.99, cells: str = "translated", seed: int | None = None,
                      label: str = "") -> GromovReport:
    """Compare the homogeneous box-counting slope of ``f(Omega)`` with ``Q - 1``.

    The verdict is ``INAPPLICABLE`` when fewer than ``rank_fraction`` of the
    interior cells have a full-rank differential, ``PASS`` when the slope
    reaches ``Q - 1 - tol`` and ``FAIL`` otherwise.
    """
    if gm.n != alg.q - 1:
        raise ValueError(f"need a hypersurface parameterized by R^{alg.q - 1}, got R^{gm.n}")
    hist = rank_histogram(gm)
    total = sum(hist.values())
    full = hist.get(alg.q - 1, 0) / total if total else 0.0
    hom = gridmap_box_count_table(gm, alg, scales, "homogeneous", cells)
    euc = gridmap_box_count_table(gm, alg, scales, "euclidean", cells)
    target = alg.Q - 1
    if full < rank_fraction:
        verdict, caveat = "INAPPLICABLE", (f"differential has full rank on {100 * full:.1f}% of cells; "
                                           "the lower bound assumes full rank")
    elif hom.slope >= target - tol:
        verdict, caveat = "PASS", CAVEAT
    else:
        verdict, caveat = "FAIL", ""
    return GromovReport(verdict, alg.Q, float(target), tol, hom, euc, hist, full, caveat, seed, label)


# -- presets ---------------------------------------------------------------------------------

PRESETS = ("cube", "vertical-plane", "legendrian-cylinder", "graph")


def cube_cloud(alg: StratifiedAlgebra, eps_min: float = DEFAULT_SCALES[-1], side: float = 1.0) -> PointCloud:
    """``[-side/2, side/2)^q`` as lower-layer lattice points times the top-layer segment.

    Centering keeps the shear of translated cells small at coarse scales.
    """
    if alg.strata_dims[-1] != 1:
        raise ValueError("the cube preset needs a one-dimensional top layer")
    sides = 0.25 * eps_min ** np.array(alg.degrees[:-1], dtype=float)
    lo = -side / 2
    axes = [lo + np.arange(int(math.ceil(side / s))) * (side / math.ceil(side / s)) for s in sides]
    lower = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, alg.q - 1)
    pts = np.concatenate([lower, np.zeros((len(lower), 1))], axis=1)
    return PointCloud(pts, None, (lo, lo + side), {"preset": "cube", "side": side}, half_open=True)


def preset_gridmap(name: str, alg: StratifiedAlgebra, seed: int = 0) -> GridMap:
    q = alg.q
    if name == "vertical-plane":
        return generate("vertical_plane", resolution=(17,) * (q - 1), q=q)
    if name == "legendrian-cylinder":
        if alg.strata_dims != (2, 1):
            raise ValueError("the Legendrian cylinder preset lives in the first Heisenberg group")
        return generate("legendrian_lift", resolution=(65, 5), radius=1.0)
    if name == "graph":
        height = {"kind": "trig", "amplitude": 0.3, "frequency": 2.0 + (seed % 3)}
        return generate("graph", domain=((0.0, 0.5),) * (q - 1), resolution=(17,) * (q - 1), q=q,
                        axis=1, height=height)
    raise ValueError(f"unknown preset {name!r}; choose from {PRESETS}")


def run_preset(name: str, alg: StratifiedAlgebra, scales=DEFAULT_SCALES, tol: float = 0.25,
               seed: int = 0, cells: str = "translated"):
    """Cube: plain counts in both modes. Other presets: :func:`gromov_experiment`."""
    if name == "cube":
        cloud = cube_cloud(alg, min(scales))
        hom = box_count_table(cloud, alg, scales, "homogeneous", cells)
        euc = box_count_table(cloud, alg, scales, "euclidean", cells)
        return GromovReport("PASS" if hom.slope >= alg.Q - tol else "FAIL", alg.Q, float(alg.Q), tol,
                            hom, euc, {}, 1.0, "solid cube: slope is compared with Q itself", seed, name)
    return gromov_experiment(preset_gridmap(name, alg, seed), alg, scales, tol, cells=cells,
                             seed=seed, label=name)
