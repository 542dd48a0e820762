"""Exterior algebra of constant-coefficient forms.

Forms are sparse maps from strictly increasing 1-based index tuples to
scalars. Scalars may be ``Fraction`` (exact identities), floats, or
anything else supporting ring arithmetic (sympy expressions work).
The basis tag distinguishes coordinate forms ``dx`` from left-invariant
forms ``eta``; mixing them is an error.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _exact
from .algebra import StratifiedAlgebra
from .errors import DependentInput, DimensionMismatch, InternalError


def permutation_sign(seq: Sequence[int]) -> int:
    """Sign of the permutation sorting ``seq``; 0 if an entry repeats."""
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    items = list(seq)
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            if items[i] > items[j]:
                sign = -sign
    return sign


def index_sets(k: int, n: int) -> list[tuple[int, ...]]:
    """``I_{k,n}``: strictly increasing k-tuples from ``1..n`` in lexicographic order."""
    return list(combinations(range(1, n + 1), k))


def _is_zero(c) -> bool:
    try:
        return c == 0
    except Exception:  # pragma: no cover - exotic scalars
        return False


class _Alternating:
    """Shared storage for :class:`KForm` and :class:`Multivector`."""

    __slots__ = ("dim", "degree", "coeffs", "basis")

    def __init__(self, dim: int, coeffs: Mapping[tuple[int, ...], object] | None = None,
                 degree: int | None = None, basis: str = "dx"):
        self.dim = int(dim)
        self.basis = basis
        acc: dict[tuple[int, ...], object] = {}
        for key, c in (coeffs or {}).items():
            key = tuple(int(i) for i in key)
            if degree is None:
                degree = len(key)
            if len(key) != degree:
                raise ValueError(f"mixed degrees: key {key} in a degree-{degree} element")
            if any(not 1 <= i <= self.dim for i in key):
                raise IndexError(f"index {key} outside 1..{self.dim}")
            sign = permutation_sign(key)
            if sign == 0:
                continue
            skey = tuple(sorted(key))
            acc[skey] = acc.get(skey, 0) + (c if sign > 0 else -c)
        self.degree = 0 if degree is None else int(degree)
        self.coeffs = {k: v for k, v in acc.items() if not _is_zero(v)}

    # construction helpers -------------------------------------------------
    def _new(self, coeffs, degree=None):
        return type(self)(self.dim, coeffs, self.degree if degree is None else degree, self.basis)

    def _check_compatible(self, other):
        if type(other) is not type(self):
            raise TypeError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.basis != self.basis:
            raise ValueError(f"basis mismatch: {self.basis} vs {other.basis}")
        if other.dim != self.dim:
            raise DimensionMismatch(f"ambient dimensions {self.dim} and {other.dim} differ")

    # arithmetic ---------------------------------------------------------------
    def __add__(self, other):
        self._check_compatible(other)
        if other.degree != self.degree and self.coeffs and other.coeffs:
            raise ValueError("cannot add elements of different degree")
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0) + v
        return self._new(out, self.degree if self.coeffs else other.degree)

    def __neg__(self):
        return self._new({k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        if isinstance(scalar, _Alternating):
            return NotImplemented
        return self._new({k: scalar * v for k, v in self.coeffs.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, _Alternating):
            if self.degree == 0 and not isinstance(other, (list, tuple, dict)):
                return self.scalar() == other
            return NotImplemented
        return (type(self) is type(other) and self.basis == other.basis and self.dim == other.dim
                and (self.degree == other.degree or not (self.coeffs or other.coeffs))
                and self.coeffs == other.coeffs)

    def __hash__(self):  # pragma: no cover - mutable-looking values stay unhashable
        raise TypeError("forms are unhashable")

    def allclose(self, other, atol: float = 1e-12) -> bool:
        self._check_compatible(other)
        keys = set(self.coeffs) | set(other.coeffs)
        return all(abs(float(self.coeffs.get(k, 0)) - float(other.coeffs.get(k, 0))) <= atol
                   for k in keys)

    # accessors ------------------------------------------------------------------
    def __getitem__(self, key):
        key = tuple(key)
        sign = permutation_sign(key)
        if sign == 0:
            return 0
        v = self.coeffs.get(tuple(sorted(key)), 0)
        return v if sign > 0 else -v

    def items(self):
        return sorted(self.coeffs.items())

    def is_zero(self) -> bool:
        return not self.coeffs

    def scalar(self):
        if self.degree != 0:
            raise ValueError("only degree-0 elements are scalars")
        return self.coeffs.get((), 0)

    def dense(self, n: int | None = None) -> list:
        """Coefficients in the lexicographic order of ``I_{k,dim}``."""
        return [self.coeffs.get(key, 0) for key in index_sets(self.degree, n or self.dim)]

    def __repr__(self):
        sym = {"dx": "dx", "eta": "eta", "vec": "e", "X": "X"}.get(self.basis, self.basis)
        if not self.coeffs:
            return f"{type(self).__name__}(0, degree={self.degree})"
        terms = []
        for key, c in self.items():
            mono = "^".join(f"{sym}{i}" for i in key) or "1"
            terms.append(f"({c})*{mono}")
        return " + ".join(terms)


class KForm(_Alternating):
    """Element of ``Lambda^k`` of the dual space, on the ``dx`` or ``eta`` basis."""

    __slots__ = ()

    def wedge(self, other: "KForm") -> "KForm":
        return wedge(self, other)


class Multivector(_Alternating):
    """Element of ``Lambda_k`` of a vector space (coefficients on ``e_I`` or ``X_I``)."""

    __slots__ = ()

    @classmethod
    def from_vectors(cls, vectors: Sequence[Sequence], basis: str = "X") -> "Multivector":
        """``v_1 ^ ... ^ v_k``; coefficients are the k x k minors (Pluecker coordinates)."""
        vectors = [list(v) for v in vectors]
        if not vectors:
            raise ValueError("need at least one vector")
        n = len(vectors[0])
        if any(len(v) != n for v in vectors):
            raise DimensionMismatch("vectors have different lengths")
        cols = _columns_to_matrix(vectors)
        k = len(vectors)
        coeffs = {}
        for key in index_sets(k, n):
            coeffs[key] = _det([[cols[i - 1][j] for j in range(k)] for i in key])
        return cls(n, coeffs, k, basis)


def monomial(dim: int, indices: Iterable[int], coeff=1, basis: str = "dx") -> KForm:
    """``coeff * dx_{i_1} ^ ... ^ dx_{i_k}`` (indices in any order)."""
    indices = tuple(indices)
    return KForm(dim, {indices: coeff}, len(indices), basis)


def scalar_form(dim: int, value, basis: str = "dx") -> KForm:
    return KForm(dim, {(): value}, 0, basis)


def wedge(*forms: KForm) -> KForm:
    """Exterior product with permutation-sign bookkeeping."""
    if not forms:
        raise ValueError("wedge of nothing")
    out = forms[0]
    for beta in forms[1:]:
        out._check_compatible(beta)
        acc: dict[tuple[int, ...], object] = {}
        for a_key, a in out.coeffs.items():
            for b_key, b in beta.coeffs.items():
                merged = a_key + b_key
                sign = permutation_sign(merged)
                if sign == 0:
                    continue
                key = tuple(sorted(merged))
                term = a * b
                acc[key] = acc.get(key, 0) + (term if sign > 0 else -term)
        out = KForm(out.dim, acc, out.degree + beta.degree, out.basis)
    return out


def evaluate(alpha: KForm, v: Multivector):
    """Pairing ``alpha(v)``; on decomposable ``v`` this is the determinant
    ``det[eta_{j_a}(xi_b)]`` summed against the coefficients."""
    if alpha.degree != v.degree:
        raise ValueError(f"degree mismatch: {alpha.degree}-form on a {v.degree}-vector")
    if alpha.dim != v.dim:
        raise DimensionMismatch(f"dimensions {alpha.dim} and {v.dim} differ")
    total = 0
    for key, c in alpha.coeffs.items():
        w = v.coeffs.get(key)
        if w is not None:
            total = total + c * w
    return total


# -- minors and linear pullback ------------------------------------------------

def _columns_to_matrix(vectors):
    """Vectors as columns -> row-major matrix ``M[i][j] = vectors[j][i]``."""
    return [list(row) for row in zip(*vectors)]


def _det(rows):
    k = len(rows)
    if k == 0:
        return Fraction(1)
    flat = [x for row in rows for x in row]
    if all(isinstance(x, (int, Fraction)) and not isinstance(x, bool) for x in flat):
        return _exact.det([[Fraction(x) for x in row] for row in rows])
    if all(isinstance(x, (int, float, np.floating, np.integer, Fraction)) for x in flat):
        return float(np.linalg.det(np.array(rows, dtype=float)))
    # generic ring elements: cofactor expansion along the first row
    if k == 1:
        return rows[0][0]
    total = 0
    for j, a in enumerate(rows[0]):
        if _is_zero(a):
            continue
        sub = [row[:j] + row[j + 1:] for row in rows[1:]]
        total = total + (-1) ** j * a * _det(sub)
    return total


def minor(J: Sequence[int], I: Sequence[int], M) -> object:
    """``det[M[J_l, I_s]]`` for 1-based increasing row tuple ``J`` and column tuple ``I``."""
    J, I = tuple(J), tuple(I)
    if len(J) != len(I):
        raise ValueError("row and column index tuples must have equal length")
    rows = M.tolist() if isinstance(M, np.ndarray) else [list(r) for r in M]
    m = len(rows)
    n = len(rows[0]) if m else 0
    if any(not 1 <= j <= m for j in J) or any(not 1 <= i <= n for i in I):
        raise IndexError(f"minor indices {J} x {I} outside a {m} x {n} matrix")
    if isinstance(M, np.ndarray):
        return float(np.linalg.det(M[np.ix_([j - 1 for j in J], [i - 1 for i in I])])) if J else 1.0
    return _det([[rows[j - 1][i - 1] for i in I] for j in J])


def pullback_linear(L, alpha: KForm) -> KForm:
    """Pull a form on ``R^m`` back through the linear map ``L`` (``m x n``).

    The ``dx_I`` coefficient is ``sum_J alpha_J * minor(J, I, L)``.
    """
    rows = L.tolist() if isinstance(L, np.ndarray) else [list(r) for r in L]
    m = len(rows)
    n = len(rows[0]) if m else 0
    if alpha.dim != m:
        raise DimensionMismatch(f"{alpha.dim}-dimensional form through a {m} x {n} map")
    k = alpha.degree
    if k > min(m, n):
        raise ValueError(f"degree {k} exceeds min({m}, {n})")
    out = {}
    for I in index_sets(k, n):
        total = 0
        for J, a in alpha.coeffs.items():
            total = total + a * minor(J, I, L if isinstance(L, np.ndarray) else rows)
        out[I] = total
    return KForm(n, out, k, "dx")


# -- left-invariant forms -----------------------------------------------------

def eta_wedge(alg_or_q, indices: Iterable[int], coeff=Fraction(1)) -> KForm:
    q = alg_or_q.q if isinstance(alg_or_q, StratifiedAlgebra) else int(alg_or_q)
    return monomial(q, tuple(indices), coeff, "eta")


def omit_one(q: int, s: int, coeff=Fraction(1)) -> KForm:
    """``eta_1 ^ ... ^ eta_s-hat ^ ... ^ eta_q``."""
    return eta_wedge(q, [i for i in range(1, q + 1) if i != s], coeff)


def maurer_cartan(alg: StratifiedAlgebra, k: int) -> KForm:
    """``d eta_k = sum_{j < i, d_i < d_k} c^k_{j,i} eta_i ^ eta_j``."""
    if not 1 <= k <= alg.q:
        raise IndexError(f"eta index {k} outside 1..{alg.q}")
    dk = alg.degree(k)
    terms = {}
    for i in range(1, alg.q + 1):
        if alg.degree(i) >= dk:
            continue
        for j in range(1, i):
            c = alg.c(j, i, k)
            if c:
                terms[(i, j)] = terms.get((i, j), 0) + c
    return KForm(alg.q, terms, 2, "eta")


def d_invariant(alg: StratifiedAlgebra, form: KForm) -> KForm:
    """Exterior derivative of a constant-coefficient ``eta`` form (Leibniz rule)."""
    if form.basis != "eta" or form.dim != alg.q:
        raise ValueError("d_invariant acts on eta-forms of the algebra's dimension")
    out = KForm(alg.q, {}, form.degree + 1, "eta")
    for key, c in form.coeffs.items():
        for pos, r in enumerate(key):
            pieces = [eta_wedge(alg, key[:pos])] if pos else []
            pieces.append(maurer_cartan(alg, r))
            if pos + 1 < len(key):
                pieces.append(eta_wedge(alg, key[pos + 1:]))
            term = wedge(*pieces) if len(pieces) > 1 else pieces[0]
            out = out + ((-1) ** pos * c) * term
    return out


def span_form_value(xis: Sequence[Sequence], s: int):
    """``eta_1 ^ .. eta_s-hat .. ^ eta_q (xi_1 ^ ... ^ xi_{q-1})`` for vectors in basis coordinates."""
    xis = [list(x) for x in xis]
    q = len(xis[0])
    if len(xis) != q - 1:
        raise DimensionMismatch(f"need q - 1 = {q - 1} vectors, got {len(xis)}")
    if not 1 <= s <= q:
        raise IndexError(f"s = {s} outside 1..{q}")
    cols = _columns_to_matrix(xis)
    return _det([cols[i] for i in range(q) if i != s - 1])


def span_test(alg_or_q, s: int, xis: Sequence[Sequence], tol: float = 1e-12) -> bool:
    """Whether the ``(q-1)``-form omitting ``eta_s`` vanishes on ``xi_1 ^ ... ^ xi_{q-1}``.

    For independent ``xi`` this is equivalent to ``X_s`` lying in their span.
    Dependent input raises :class:`DependentInput` because the form then
    vanishes regardless of membership.
    """
    xis = [list(x) for x in xis]
    q = alg_or_q.q if isinstance(alg_or_q, StratifiedAlgebra) else int(alg_or_q)
    if q < 3:
        raise ValueError("the omit-one criterion needs q >= 3")
    if any(len(x) != q for x in xis):
        raise DimensionMismatch(f"vectors must have length {q}")
    exact = all(isinstance(v, (int, Fraction)) for x in xis for v in x)
    if exact:
        independent = _exact.rank(_exact.frac_matrix(xis)) == len(xis)
    else:
        arr = np.asarray(xis, dtype=float)
        independent = np.linalg.matrix_rank(arr, tol=tol * max(1.0, np.abs(arr).max())) == len(xis)
    if not independent:
        raise DependentInput("xi vectors are linearly dependent")
    value = span_form_value(xis, s)
    return value == 0 if exact else abs(value) <= tol


# -- the theta construction -----------------------------------------------------

@dataclass(frozen=True)
class GammaSolution:
    """Coefficients with ``X_s = sum gamma_{k,l} [X_k, X_l]`` over ``d_k = 1``, ``d_l = kappa``, ``k < l``."""

    s: int
    kappa: int
    coefficients: dict

    def __getitem__(self, kl):
        return self.coefficients.get(tuple(kl), Fraction(0))

    def delta_residual(self, alg: StratifiedAlgebra) -> dict[int, Fraction]:
        """Nonzero entries of ``sum gamma c^r_{k,l} - delta_{s,r}`` over ``d_r > kappa``."""
        out = {}
        for r in range(1, alg.q + 1):
            if alg.degree(r) <= self.kappa:
                continue
            total = sum((g * alg.c(k, l, r) for (k, l), g in self.coefficients.items()), Fraction(0))
            total -= int(r == self.s)
            if total:
                out[r] = total
        return out


def _gamma_pairs(alg: StratifiedAlgebra, kappa: int) -> list[tuple[int, int]]:
    return [(k, l) for k in alg.layer(1) for l in alg.layer(kappa) if k < l]


def _theta_index(alg: StratifiedAlgebra, s: int) -> int:
    if alg.commutative:
        raise ValueError("the theta construction needs a noncommutative group (step >= 2)")
    if not 1 <= s <= alg.q:
        raise IndexError(f"s = {s} outside 1..{alg.q}")
    kappa = alg.degree(s) - 1
    if kappa < 1:
        raise ValueError(f"X_{s} lies in the first layer; need d_s >= 2")
    return kappa


def gamma_coefficients(alg: StratifiedAlgebra, s: int) -> GammaSolution:
    """Exact solution of ``sum gamma_{k,l} c^r_{k,l} = delta_{s,r}`` for all ``d_r > kappa``.

    Gaussian elimination with first-pivot choice; free unknowns are zero.
    """
    kappa = _theta_index(alg, s)
    pairs = _gamma_pairs(alg, kappa)
    rows = [r for r in range(1, alg.q + 1) if alg.degree(r) > kappa]
    mat = [[alg.c(k, l, r) for (k, l) in pairs] for r in rows]
    rhs = [Fraction(int(r == s)) for r in rows]
    sol = _exact.solve(mat, rhs)
    if sol is None:
        raise InternalError(f"X_{s} is not in [V_1, V_{kappa}]; validated algebras cannot get here")
    gamma = GammaSolution(s, kappa, {kl: g for kl, g in zip(pairs, sol) if g})
    if gamma.delta_residual(alg):
        raise InternalError("gamma solution does not satisfy the delta identity")
    return gamma


def theta_sign(m: int, k: int, l: int) -> int:
    """``(-1)^h`` with ``(-1)^h eta_{1..m minus k,l} ^ eta_l ^ eta_k = eta_1 ^ ... ^ eta_m``."""
    seq = [i for i in range(1, m + 1) if i not in (k, l)] + [l, k]
    return permutation_sign(seq)


def theta_form(alg: StratifiedAlgebra, s: int, gamma: GammaSolution | None = None) -> KForm:
    """The ``(m_kappa - 2)``-form built from gamma with the ordering signs."""
    kappa = _theta_index(alg, s)
    gamma = gamma or gamma_coefficients(alg, s)
    m = alg.layer_offsets[kappa]
    out = KForm(alg.q, {}, m - 2, "eta")
    for (k, l), g in gamma.coefficients.items():
        rest = [i for i in range(1, m + 1) if i not in (k, l)]
        out = out + eta_wedge(alg, rest, theta_sign(m, k, l) * g)
    return out


def theta_product(alg: StratifiedAlgebra, s: int, r: int) -> tuple[KForm, KForm]:
    """Both sides of ``theta_s ^ d eta_r ^ eta_{m_kappa+1..m_{d_r-1}} = delta_{r,s} eta_{1..m_{d_r-1}}``."""
    kappa = _theta_index(alg, s)
    if not 1 <= r <= alg.q or alg.degree(r) <= kappa:
        raise ValueError(f"need d_r > kappa = {kappa} for r = {r}")
    off = alg.layer_offsets
    top = off[alg.degree(r) - 1]
    pieces = [theta_form(alg, s), maurer_cartan(alg, r)]
    middle = range(off[kappa] + 1, top + 1)
    if len(middle):
        pieces.append(eta_wedge(alg, middle))
    lhs = wedge(*pieces)
    rhs = eta_wedge(alg, range(1, top + 1), Fraction(int(r == s)))
    return lhs, rhs


def theta_product_check(alg: StratifiedAlgebra, s: int, r: int) -> bool:
    lhs, rhs = theta_product(alg, s, r)
    return lhs == rhs


def chain_form(alg: StratifiedAlgebra, s: int) -> tuple[KForm, KForm, int]:
    """``theta_s ^ d(eta_{m_kappa+1} ^ ... ^ eta_q)`` with its expected value.

    Returns ``(product, omit_one(q, s), sign)`` where ``product`` should
    equal ``sign * omit_one(q, s)`` with ``sign = (-1)^(s - m_kappa + 1)``.
    """
    kappa = _theta_index(alg, s)
    m = alg.layer_offsets[kappa]
    xi = eta_wedge(alg, range(m + 1, alg.q + 1))
    product = wedge(theta_form(alg, s), d_invariant(alg, xi))
    return product, omit_one(alg.q, s), (-1) ** (s - m + 1)
