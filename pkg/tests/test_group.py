from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from carnot.algebra import CATALOG_NAMES, resolve_group
from carnot.group import (
    bch_product,
    coframe,
    dilation,
    dynkin_words,
    frame,
    frame_polynomial,
    inverse,
    quasi_distance,
    quasi_norm,
    triangle_constant,
)

rationals = st.fractions(min_value=-3, max_value=3, max_denominator=5)


def test_heisenberg_product_example(heisenberg):
    assert bch_product(heisenberg, [1, 0, 0], [0, 1, 0]) == [1, 1, Fraction(1, 2)]
    assert bch_product(heisenberg, [0, 1, 0], [1, 0, 0]) == [1, 1, Fraction(-1, 2)]


def test_dynkin_low_order():
    words = dict(dynkin_words(2))
    assert words[(0,)] == 1 and words[(1,)] == 1
    # [x, y] and [y, x] terms combine to the familiar 1/2 [x, y]
    assert words[(0, 1)] - words.get((1, 0), 0) == Fraction(1, 2)


def _heis_matrix(z):
    # exp of the strictly upper triangular representation of x X + y Y + t T
    x, y, t = z
    return expm(np.array([[0, x, t], [0, 0, y], [0, 0, 0]], dtype=float))


@given(st.lists(st.floats(-2, 2), min_size=6, max_size=6))
def test_heisenberg_matches_matrix_group(v):
    alg = resolve_group("heisenberg")
    x, y = np.array(v[:3]), np.array(v[3:])
    z = bch_product(alg, x, y)
    np.testing.assert_allclose(_heis_matrix(x) @ _heis_matrix(y), _heis_matrix(z), atol=1e-10)


@pytest.mark.parametrize("name", CATALOG_NAMES)
def test_frame_generates_right_flow(name):
    # the flow of a left-invariant field X is t -> z * exp(t X)
    alg = resolve_group(name)
    rng = np.random.default_rng(3)
    z0, v = rng.uniform(-1, 1, alg.q), rng.uniform(-1, 1, alg.q)

    def rhs(_, z):
        return frame(alg, z) @ v

    sol = solve_ivp(rhs, (0, 1), z0, rtol=1e-11, atol=1e-12)
    np.testing.assert_allclose(sol.y[:, -1], bch_product(alg, z0, v), atol=1e-8)


@pytest.mark.parametrize("name", CATALOG_NAMES)
def test_frame_is_linear_part_of_left_translation(name):
    alg = resolve_group(name)
    z = [Fraction(k + 1, 3) * (-1) ** k for k in range(alg.q)]
    F = frame(alg, z)
    for i in range(alg.q):
        e = [Fraction(int(j == i)) for j in range(alg.q)]
        # z * (s e) is polynomial in s; its s-derivative at 0 is the i-th column
        eps = Fraction(1, 10**6)
        plus = bch_product(alg, z, [eps * c for c in e])
        minus = bch_product(alg, z, [-eps * c for c in e])
        diff = [(p - m) / (2 * eps) for p, m in zip(plus, minus)]
        col = [F[r][i] for r in range(alg.q)]
        assert all(abs(d - c) < Fraction(1, 10**10) for d, c in zip(diff, col))


@pytest.mark.parametrize("name", CATALOG_NAMES)
def test_frame_bracket_matches_structure_constants(name):
    alg = resolve_group(name)
    zs, F, _ = frame_polynomial(alg)
    fields = [F[:, i] for i in range(alg.q)]

    def lie(a, b):
        return sympy.Matrix([
            sum(a[j] * sympy.diff(b[r], zs[j]) - b[j] * sympy.diff(a[r], zs[j]) for j in range(alg.q))
            for r in range(alg.q)
        ])

    for i in range(alg.q):
        for j in range(i + 1, alg.q):
            expected = sympy.zeros(alg.q, 1)
            for k in range(alg.q):
                c = alg.c(i + 1, j + 1, k + 1)
                if c:
                    expected += sympy.Rational(c.numerator, c.denominator) * fields[k]
            assert (lie(fields[i], fields[j]) - expected).applyfunc(sympy.expand) == sympy.zeros(alg.q, 1)


@given(st.sampled_from(CATALOG_NAMES), st.data())
def test_coframe_inverts_frame(name, data):
    alg = resolve_group(name)
    z = data.draw(st.lists(rationals, min_size=alg.q, max_size=alg.q))
    prod = np.array(coframe(alg, z), dtype=object).dot(np.array(frame(alg, z), dtype=object))
    assert (prod == np.eye(alg.q, dtype=int)).all()


@given(st.sampled_from(CATALOG_NAMES), st.data())
def test_associativity_exact(name, data):
    alg = resolve_group(name)
    vec = st.lists(rationals, min_size=alg.q, max_size=alg.q)
    x, y, z = data.draw(vec), data.draw(vec), data.draw(vec)
    assert bch_product(alg, bch_product(alg, x, y), z) == bch_product(alg, x, bch_product(alg, y, z))


@given(st.sampled_from(CATALOG_NAMES), st.data())
def test_inverse_and_identity(name, data):
    alg = resolve_group(name)
    x = data.draw(st.lists(rationals, min_size=alg.q, max_size=alg.q))
    assert bch_product(alg, x, inverse(alg, x)) == [0] * alg.q
    assert bch_product(alg, x, [0] * alg.q) == x


@given(st.sampled_from(CATALOG_NAMES), st.data(), st.fractions(min_value=Fraction(1, 4), max_value=4))
def test_dilation_is_automorphism(name, data, r):
    alg = resolve_group(name)
    vec = st.lists(rationals, min_size=alg.q, max_size=alg.q)
    x, y = data.draw(vec), data.draw(vec)
    lhs = dilation(alg, bch_product(alg, x, y), r)
    assert lhs == bch_product(alg, dilation(alg, x, r), dilation(alg, y, r))


@given(st.sampled_from(CATALOG_NAMES), st.data(), st.floats(0.1, 10))
def test_quasi_norm_homogeneous(name, data, r):
    alg = resolve_group(name)
    w = np.array(data.draw(st.lists(st.floats(-2, 2), min_size=alg.q, max_size=alg.q)))
    assert quasi_norm(alg, dilation(alg, w, r)) == pytest.approx(r * quasi_norm(alg, w), rel=1e-12, abs=1e-300)


@given(st.sampled_from(CATALOG_NAMES), st.data())
def test_distance_left_invariant_and_symmetric(name, data):
    alg = resolve_group(name)
    vec = st.lists(st.floats(-1, 1), min_size=alg.q, max_size=alg.q)
    g, x, y = (np.array(data.draw(vec)) for _ in range(3))
    d = quasi_distance(alg, x, y)
    assert quasi_distance(alg, bch_product(alg, g, x), bch_product(alg, g, y)) == pytest.approx(d, abs=1e-9)
    assert quasi_distance(alg, y, x) == pytest.approx(d, abs=1e-12)


def test_triangle_constant_finite(heisenberg):
    c = triangle_constant(heisenberg, n_triples=2000)
    assert 1.0 <= c < 3.0


def test_batched_products(engel):
    rng = np.random.default_rng(0)
    x, y = rng.normal(size=(7, engel.q)), rng.normal(size=(7, engel.q))
    batch = bch_product(engel, x, y)
    for a, b, c in zip(x, y, batch):
        np.testing.assert_allclose(bch_product(engel, a, b), c, atol=1e-12)
    assert coframe(engel, x).shape == (7, engel.q, engel.q)


def test_dilation_rejects_nonpositive(heisenberg):
    with pytest.raises(ValueError):
        dilation(heisenberg, [1, 0, 0], 0)


@given(st.sampled_from(CATALOG_NAMES), st.data())
def test_horizontal_frame_annihilated_by_upper_coframe(name, data):
    alg = resolve_group(name)
    z = data.draw(st.lists(rationals, min_size=alg.q, max_size=alg.q))
    F, C = frame(alg, z), coframe(alg, z)
    m1 = alg.strata_dims[0]
    for r in range(m1, alg.q):
        for i in range(m1):
            assert sum(C[r][k] * F[k][i] for k in range(alg.q)) == 0


def test_heisenberg_triangle_constant_at_most_two(heisenberg):
    assert triangle_constant(heisenberg, n_triples=10_000, seed=0) <= 2.0
