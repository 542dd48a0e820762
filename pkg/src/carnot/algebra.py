"""Stratified nilpotent Lie algebras given by structure constants.

Basis labels are 1-based throughout the public API, matching the usual
``X_1, ..., X_q`` notation; arrays are 0-based internally.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import _exact
from .errors import (
    AntisymmetryViolation,
    DimensionMismatch,
    GradingViolation,
    JacobiViolation,
    StratificationError,
)

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib


@dataclass(frozen=True)
class AlgebraSpec:
    """Raw description: strata dimensions plus entries ``(i, j, k, c)``
    meaning ``c`` is the coefficient of ``X_k`` in ``[X_i, X_j]``."""

    name: str
    strata_dims: tuple[int, ...]
    brackets: tuple[tuple[int, int, int, Fraction], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "strata_dims", tuple(int(d) for d in self.strata_dims))
        entries = tuple(
            (int(i), int(j), int(k), _exact.to_fraction(c)) for i, j, k, c in self.brackets
        )
        object.__setattr__(self, "brackets", entries)

    @property
    def q(self) -> int:
        return sum(self.strata_dims)


class InvariantResult(NamedTuple):
    name: str
    passed: bool
    detail: str = ""
    data: object = None


def _degrees(strata_dims: Sequence[int]) -> tuple[int, ...]:
    return tuple(d for d, dim in enumerate(strata_dims, start=1) for _ in range(dim))


def _offsets(strata_dims: Sequence[int]) -> tuple[int, ...]:
    out = [0]
    for dim in strata_dims:
        out.append(out[-1] + dim)
    return tuple(out)


def _structure_table(spec: AlgebraSpec) -> dict[tuple[int, int], dict[int, Fraction]]:
    """Sparse antisymmetric table ``{(i, j): {k: c}}`` with 0-based keys.

    Checks ranges, duplicate entries and consistency of redundant
    ``(j, i)`` partners; raises on the first problem.
    """
    q = spec.q
    given: dict[tuple[int, int, int], Fraction] = {}
    for i, j, k, c in spec.brackets:
        for label in (i, j, k):
            if not 1 <= label <= q:
                raise IndexError(f"bracket entry ({i}, {j}, {k}) has index outside 1..{q}")
        if (i, j, k) in given:
            raise ValueError(f"duplicate bracket entry for (i, j, k) = ({i}, {j}, {k})")
        given[(i, j, k)] = c

    table: dict[tuple[int, int], dict[int, Fraction]] = {}
    for (i, j, k), c in given.items():
        if i == j:
            if c != 0:
                raise AntisymmetryViolation(f"[X_{i}, X_{i}] has nonzero X_{k} coefficient {c}")
            continue
        partner = given.get((j, i, k))
        if partner is not None and partner != -c:
            raise AntisymmetryViolation(
                f"entries ({i}, {j}, {k}) = {c} and ({j}, {i}, {k}) = {partner} are not opposite"
            )
        if c == 0:
            continue
        table.setdefault((i - 1, j - 1), {})[k - 1] = c
        table.setdefault((j - 1, i - 1), {})[k - 1] = -c
    return table


def _sparse_bracket(table, a: dict[int, Fraction], b: dict[int, Fraction]) -> dict[int, Fraction]:
    out: dict[int, Fraction] = {}
    for i, ai in a.items():
        for j, bj in b.items():
            for k, c in table.get((i, j), {}).items():
                out[k] = out.get(k, Fraction(0)) + ai * bj * c
    return {k: v for k, v in out.items() if v != 0}


def check_invariants(spec: AlgebraSpec) -> list[InvariantResult]:
    """Run every structural check without raising on the mathematical ones.

    Malformed input (index out of range, duplicates) still raises since
    nothing further can be checked.
    """
    if not spec.strata_dims or any(d <= 0 for d in spec.strata_dims):
        raise ValueError("strata_dims must be a nonempty list of positive integers")
    results = []
    try:
        table = _structure_table(spec)
    except AntisymmetryViolation as exc:
        return [InvariantResult("antisymmetry", False, str(exc))]
    results.append(InvariantResult("antisymmetry", True))

    q = spec.q
    deg = _degrees(spec.strata_dims)
    step = len(spec.strata_dims)
    off = _offsets(spec.strata_dims)

    jacobi_fail = None
    for i, j, k in combinations(range(q), 3):
        ei, ej, ek = {i: Fraction(1)}, {j: Fraction(1)}, {k: Fraction(1)}
        total: dict[int, Fraction] = {}
        for x, y, z in ((ei, ej, ek), (ej, ek, ei), (ek, ei, ej)):
            for idx, v in _sparse_bracket(table, x, _sparse_bracket(table, y, z)).items():
                total[idx] = total.get(idx, Fraction(0)) + v
        residual = {idx + 1: v for idx, v in total.items() if v != 0}
        if residual:
            jacobi_fail = ((i + 1, j + 1, k + 1), residual)
            break
    if jacobi_fail:
        results.append(
            InvariantResult(
                "jacobi", False, f"triple {jacobi_fail[0]} residual {jacobi_fail[1]}", jacobi_fail
            )
        )
    else:
        results.append(InvariantResult("jacobi", True))

    bad = [
        (i + 1, j + 1, k + 1)
        for (i, j), row in table.items()
        for k in row
        if i < j and deg[i] + deg[j] != deg[k]
    ]
    if bad:
        results.append(InvariantResult("grading", False, f"c[i][j][k] != 0 with d_i + d_j != d_k at {bad[0]}"))
    else:
        results.append(InvariantResult("grading", True))

    missing = []
    for kappa in range(1, step):
        rows = range(off[kappa], off[kappa + 1])
        cols = []
        for i in range(off[0], off[1]):
            for j in range(off[kappa - 1], off[kappa]):
                v = table.get((i, j), {})
                cols.append([v.get(r, Fraction(0)) for r in rows])
        mat = _exact.transpose(cols) if cols else [[] for _ in rows]
        r = _exact.rank(mat) if cols else 0
        if r != spec.strata_dims[kappa]:
            missing.append((kappa + 1, r, spec.strata_dims[kappa]))
    if missing:
        layer, got, want = missing[0]
        results.append(
            InvariantResult(
                "bracket_generation",
                False,
                f"[V_1, V_{layer - 1}] has rank {got} in V_{layer} of dimension {want}",
            )
        )
    else:
        results.append(InvariantResult("bracket_generation", True))
    return results


_ERRORS = {
    "antisymmetry": AntisymmetryViolation,
    "grading": GradingViolation,
    "bracket_generation": StratificationError,
}


@dataclass(frozen=True, eq=False)
class StratifiedAlgebra:
    """Validated stratified algebra. Immutable; build with :func:`build_algebra`."""

    name: str
    strata_dims: tuple[int, ...]
    table: dict = field(repr=False)

    @property
    def q(self) -> int:
        return sum(self.strata_dims)

    @property
    def step(self) -> int:
        return len(self.strata_dims)

    @property
    def commutative(self) -> bool:
        return self.step == 1

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        """``degrees[i - 1]`` is the degree of ``X_i``."""
        return _degrees(self.strata_dims)

    @cached_property
    def layer_offsets(self) -> tuple[int, ...]:
        """``(m_0, m_1, ..., m_step)`` with ``m_0 = 0``."""
        return _offsets(self.strata_dims)

    @property
    def Q(self) -> int:
        return sum(j * dim for j, dim in enumerate(self.strata_dims, start=1))

    def degree(self, i: int) -> int:
        return self.degrees[i - 1]

    def layer(self, j: int) -> range:
        """1-based labels of the basis vectors in ``V_j``."""
        off = self.layer_offsets
        return range(off[j - 1] + 1, off[j] + 1)

    def c(self, i: int, j: int, k: int) -> Fraction:
        """Coefficient of ``X_k`` in ``[X_i, X_j]`` (1-based)."""
        return self.table.get((i - 1, j - 1), {}).get(k - 1, Fraction(0))

    @cached_property
    def structure_tensor(self) -> np.ndarray:
        """Float array ``C[i, j, k]`` (0-based)."""
        out = np.zeros((self.q,) * 3)
        for (i, j), row in self.table.items():
            for k, c in row.items():
                out[i, j, k] = float(c)
        out.setflags(write=False)
        return out

    @cached_property
    def ad_exact(self) -> tuple:
        """``ad_exact[j][k][i]`` is the ``X_k`` coefficient of ``[X_j, X_i]``."""
        q = self.q
        return tuple(
            tuple(tuple(self.table.get((j, i), {}).get(k, Fraction(0)) for i in range(q)) for k in range(q))
            for j in range(q)
        )

    def __repr__(self):
        return f"StratifiedAlgebra({self.name!r}, strata={list(self.strata_dims)}, Q={self.Q})"


def build_algebra(spec: AlgebraSpec) -> StratifiedAlgebra:
    """Validate ``spec`` exactly and return the algebra.

    Raises the matching :class:`~carnot.errors.AlgebraError` subclass for
    the first failed invariant.
    """
    for res in check_invariants(spec):
        if res.passed:
            continue
        if res.name == "jacobi":
            raise JacobiViolation(*res.data)
        raise _ERRORS[res.name](res.detail)
    alg = StratifiedAlgebra(spec.name, spec.strata_dims, _structure_table(spec))
    assert alg.Q == sum(alg.degrees)
    return alg


def _as_vector(alg: StratifiedAlgebra, a):
    if len(a) != alg.q:
        raise DimensionMismatch(f"vector of length {len(a)} for algebra of dimension {alg.q}")
    return a


def bracket(alg: StratifiedAlgebra, a, b):
    """Lie bracket of coefficient vectors.

    Exact (list of ``Fraction``) when both inputs are non-numpy sequences,
    otherwise a float numpy array. Leading batch axes are allowed for
    numpy input.
    """
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if a.shape[-1] != alg.q or b.shape[-1] != alg.q:
            raise DimensionMismatch(f"vectors must have last axis {alg.q}")
        shape = np.broadcast_shapes(a.shape, b.shape)
        out = np.zeros(shape)
        # table holds both (i, j) and (j, i); walk each unordered pair once
        for (i, j), row in alg.table.items():
            if i > j:
                continue
            w = a[..., i] * b[..., j] - a[..., j] * b[..., i]
            for k, c in row.items():
                out[..., k] += float(c) * w
        return out
    a = [_exact.to_fraction(x) for x in _as_vector(alg, a)]
    b = [_exact.to_fraction(x) for x in _as_vector(alg, b)]
    out = [Fraction(0)] * alg.q
    for (i, j), row in alg.table.items():
        if a[i] == 0 or b[j] == 0:
            continue
        w = a[i] * b[j]
        for k, c in row.items():
            out[k] += w * c
    return out


def basis_vector(alg: StratifiedAlgebra, i: int) -> list[Fraction]:
    v = [Fraction(0)] * alg.q
    v[i - 1] = Fraction(1)
    return v


# -- catalog ---------------------------------------------------------------

def _heisenberg(n: int) -> AlgebraSpec:
    entries = [(i, n + i, 2 * n + 1, 1) for i in range(1, n + 1)]
    return AlgebraSpec(f"heisenberg({n})", (2 * n, 1), tuple(entries))


def _free_step2(r: int) -> AlgebraSpec:
    pairs = list(combinations(range(1, r + 1), 2))
    entries = [(i, j, r + t, 1) for t, (i, j) in enumerate(pairs, start=1)]
    return AlgebraSpec(f"free_step2({r})", (r, len(pairs)), tuple(entries))


def _filiform(n: int) -> AlgebraSpec:
    if n < 3:
        raise ValueError("filiform(n) needs n >= 3")
    entries = [(1, i, i + 1, 1) for i in range(2, n)]
    return AlgebraSpec(f"filiform({n})", (2,) + (1,) * (n - 2), tuple(entries))


def _abelian(n: int) -> AlgebraSpec:
    return AlgebraSpec(f"abelian({n})", (n,), ())


_FAMILIES = {
    "heisenberg": _heisenberg,
    "free_step2": _free_step2,
    "filiform": _filiform,
    "abelian": _abelian,
}

CATALOG_NAMES = ("heisenberg(1)", "heisenberg(2)", "engel", "free_step2(3)")


def catalog(name: str) -> AlgebraSpec:
    """Canonical spec for ``heisenberg(n)``, ``engel``, ``free_step2(r)``,
    ``filiform(n)`` or ``abelian(n)``.

    Bare ``heisenberg`` means ``heisenberg(1)``; ``abelian2`` is accepted
    for ``abelian(2)``.
    """
    key = name.strip().lower().replace(" ", "")
    if key == "engel":
        return AlgebraSpec("engel", (2, 1, 1), ((1, 2, 3, 1), (1, 3, 4, 1)))
    if key == "heisenberg":
        return _heisenberg(1)
    m = re.fullmatch(r"([a-z_][a-z0-9_]*?)(?:\((\d+)\)|(\d+))", key)
    if m and m.group(1) in _FAMILIES:
        n = int(m.group(2) or m.group(3))
        if n < 1:
            raise ValueError(f"family parameter must be positive in {name!r}")
        return _FAMILIES[m.group(1)](n)
    raise KeyError(f"unknown algebra {name!r}")


# -- TOML ------------------------------------------------------------------

def parse_spec(data: dict) -> AlgebraSpec:
    """Build a spec from parsed TOML of the form::

        name = "heisenberg"
        strata = [2, 1]
        [[bracket]]
        i = 1
        j = 2
        k = 3
        c = "1"
    """
    try:
        strata = data["strata"]
    except KeyError:
        raise ValueError("group spec needs a 'strata' array") from None
    entries = []
    for entry in data.get("bracket", []):
        try:
            c = entry.get("c", 1)
            entries.append((entry["i"], entry["j"], entry["k"], _exact.to_fraction(c)))
        except KeyError as exc:
            raise ValueError(f"bracket entry {entry} lacks field {exc}") from None
    return AlgebraSpec(str(data.get("name", "unnamed")), tuple(strata), tuple(entries))


def loads_spec(text: str) -> AlgebraSpec:
    return parse_spec(tomllib.loads(text))


def load_spec(path) -> AlgebraSpec:
    with open(path, "rb") as fh:
        return parse_spec(tomllib.load(fh))


def dumps_spec(spec: AlgebraSpec) -> str:
    lines = [f'name = "{spec.name}"', f"strata = {list(spec.strata_dims)}"]
    for i, j, k, c in spec.brackets:
        lines += ["", "[[bracket]]", f"i = {i}", f"j = {j}", f"k = {k}", f'c = "{c}"']
    return "\n".join(lines) + "\n"


def resolve_group(source: str | Path | AlgebraSpec | StratifiedAlgebra) -> StratifiedAlgebra:
    """Accept a catalog name, a TOML path, a spec, or an algebra."""
    if isinstance(source, StratifiedAlgebra):
        return source
    if isinstance(source, AlgebraSpec):
        return build_algebra(source)
    text = str(source)
    if text.endswith(".toml") or Path(text).is_file():
        return build_algebra(load_spec(text))
    return build_algebra(catalog(text))


def spec_of(alg: StratifiedAlgebra) -> AlgebraSpec:
    """Spec listing each bracket ``[X_i, X_j]`` with ``i < j`` once."""
    entries = tuple((i + 1, j + 1, k + 1, c) for (i, j), row in sorted(alg.table.items())
                    if i < j for k, c in sorted(row.items()))
    return AlgebraSpec(alg.name, alg.strata_dims, entries)


def validate(source) -> list[InvariantResult]:
    """Per-invariant report for a spec/name/path, including derived data checks."""
    spec = source if isinstance(source, AlgebraSpec) else None
    if isinstance(source, StratifiedAlgebra):
        spec = spec_of(source)
    if spec is None:
        text = str(source)
        spec = load_spec(text) if (text.endswith(".toml") or Path(text).is_file()) else catalog(text)
    results = check_invariants(spec)
    if all(r.passed for r in results):
        alg = StratifiedAlgebra(spec.name, spec.strata_dims, _structure_table(spec))
        off = alg.layer_offsets
        ok = all(off[alg.degree(i) - 1] < i <= off[alg.degree(i)] for i in range(1, alg.q + 1))
        results.append(InvariantResult("degrees_offsets", ok))
        results.append(
            InvariantResult("homogeneous_dimension", alg.Q == sum(alg.degrees), f"Q = {alg.Q}")
        )
    return results


def iter_pairs(alg: StratifiedAlgebra) -> Iterable[tuple[int, int]]:
    """Admissible ``(s, r)`` pairs: ``d_s >= 2`` and ``d_r > d_s - 1``."""
    for s in range(1, alg.q + 1):
        kappa = alg.degree(s) - 1
        if kappa < 1:
            continue
        for r in range(1, alg.q + 1):
            if alg.degree(r) > kappa:
                yield s, r
