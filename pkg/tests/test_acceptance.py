"""Acceptance gate: one PASS/FAIL line per criterion, printed at the end of the run."""
import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from carnot import _exact
from carnot.algebra import check_invariants, iter_pairs, resolve_group, spec_of
from carnot.dimension import DEFAULT_SCALES, run_preset
from carnot.errors import DependentInput, PreconditionDefect
from carnot.forms import (
    d_invariant,
    eta_wedge,
    gamma_coefficients,
    span_test,
    theta_form,
    theta_product_check,
)
from carnot.grid import generate, vanishing_chain_check
from carnot.group import bch_product, coframe, frame
from carnot.sphere import QuadratureGrid, SphereChartAtlas, oriented_integral

GROUPS = ("heisenberg", "heisenberg(2)", "engel", "free_step2(3)")


def record(log, number, title, checks, elapsed, limit=None):
    failed = [name for name, ok in checks if not ok]
    if limit is not None and elapsed >= limit:
        failed.append(f"runtime {elapsed:.1f}s >= {limit}s")
    status = "PASS" if not failed else "FAIL"
    line = f"[{status}] criterion {number}: {title} ({elapsed:.2f}s)"
    if failed:
        line += " -- " + "; ".join(failed)
    log.append(line)
    print(line)
    assert not failed, line


def rational_vec(rng, q, den=7, size=5):
    return [Fraction(rng.randint(-size * den, size * den), rng.randint(1, den)) for _ in range(q)]


def test_criterion_1_exact_algebra(acceptance_log):
    rng = random.Random(1)
    checks = []
    t0 = time.perf_counter()
    for name in GROUPS:
        alg = resolve_group(name)
        for res in check_invariants(spec_of(alg)):
            checks.append((f"{name} {res.name}", res.passed))
        ok = True
        for _ in range(10):
            z = rational_vec(rng, alg.q)
            ok &= _exact.matmul(coframe(alg, z, check=False), frame(alg, z)) == _exact.identity(alg.q)
        checks.append((f"{name} coframe*frame", ok))
        ok = True
        for _ in range(100):
            x, y, z = (rational_vec(rng, alg.q) for _ in range(3))
            ok &= bch_product(alg, bch_product(alg, x, y), z) == bch_product(alg, x, bch_product(alg, y, z))
        checks.append((f"{name} associativity", ok))
        ok = all(d_invariant(alg, d_invariant(alg, eta_wedge(alg, [k]))).is_zero()
                 for k in range(1, alg.q + 1))
        checks.append((f"{name} d∘d", ok))
    record(acceptance_log, 1, "exact algebra suite", checks, time.perf_counter() - t0, 10)


def test_criterion_2_theta_identities(acceptance_log):
    checks = []
    t0 = time.perf_counter()
    for name in GROUPS:
        alg = resolve_group(name)
        pairs = list(iter_pairs(alg))
        checks.append((f"{name} has pairs", bool(pairs)))
        for s, r in pairs:
            checks.append((f"{name} (s={s}, r={r})", theta_product_check(alg, s, r)))
    heis = resolve_group("heisenberg")
    theta = theta_form(heis, 3)
    checks.append(("heisenberg theta_3 = -gamma",
                   theta.degree == 0 and theta.scalar() == -gamma_coefficients(heis, 3)[(1, 2)]))
    record(acceptance_log, 2, "theta product identities", checks, time.perf_counter() - t0, 5)


def test_criterion_3_span_oracle(acceptance_log):
    rng = random.Random(3)
    checks = []
    t0 = time.perf_counter()
    for name in GROUPS:
        alg = resolve_group(name)
        q = alg.q
        agree = tuples = 0
        while tuples < 500:
            # bias towards special position so both verdicts occur often
            xis = [[rng.choice([0, 0, 1, -1, 2, Fraction(1, 2)]) for _ in range(q)] for _ in range(q - 1)]
            if _exact.rank(_exact.frac_matrix(xis)) < q - 1:
                with pytest.raises(DependentInput):
                    span_test(alg, 1, xis)
                continue
            tuples += 1
            verdicts = []
            for s in range(1, q + 1):
                e = [Fraction(int(i == s - 1)) for i in range(q)]
                member = _exact.rank(_exact.frac_matrix(xis + [e])) == q - 1
                verdicts.append(span_test(alg, s, xis) == member)
            agree += all(verdicts)
        checks.append((f"{name} {agree}/500", agree == 500))
    record(acceptance_log, 3, "form vanishing equals span membership", checks, time.perf_counter() - t0)


def _identity(x):
    return np.array(x, dtype=float, copy=True)


def _poly(seed=11, n=3, m=3, degree=4):
    rng = np.random.default_rng(seed)
    exps = np.array([e for e in np.ndindex(*(degree + 1,) * n) if sum(e) <= degree])
    coef = rng.normal(size=(m, len(exps)))
    return lambda x: np.prod(x[..., None, :] ** exps, axis=-1) @ coef.T


def test_criterion_4_oriented_integrals(acceptance_log):
    checks = []
    t0 = time.perf_counter()
    area = oriented_integral(_identity, lambda x: x[..., 0], (2,), (0.0, 0.0), 1.0, quad=QuadratureGrid(10_000))
    checks.append((f"circle area err {abs(area - math.pi):.1e}", abs(area - math.pi) < 1e-6))
    vol = oriented_integral(_identity, lambda x: x[..., 0], (2, 3), (0.0, 0.0, 0.0), 1.0)
    checks.append((f"ball volume err {abs(vol - 4 * math.pi / 3):.1e}", abs(vol - 4 * math.pi / 3) < 1e-4))
    f = _poly()
    Ns = [8, 16, 32, 64]
    res = [abs(oriented_integral(f, None, (1, 2), (0.13, -0.2, 0.3), 0.9, quad=QuadratureGrid(N, "midpoint")))
           for N in Ns]
    order = -np.polyfit(np.log(Ns), np.log(res), 1)[0]
    checks.append((f"closedness order {order:.2f}", order >= 1.9))
    g = lambda x: np.cos(x[..., 0]) + x[..., 1] * x[..., 2]
    a = oriented_integral(f, g, (1, 3), (0.1, 0.2, -0.1), 0.8, atlas=SphereChartAtlas(3, band=0.2))
    b = oriented_integral(f, g, (1, 3), (0.1, 0.2, -0.1), 0.8,
                          atlas=SphereChartAtlas(3, theta_max=math.pi / 2 + 0.4, band=0.35))
    checks.append((f"partition swap {abs(a - b):.1e}", abs(a - b) < 1e-6))
    record(acceptance_log, 4, "oriented integral suite", checks, time.perf_counter() - t0, 30)


def test_criterion_5_vanishing_chain(acceptance_log):
    heis = resolve_group("heisenberg")
    checks = []
    t0 = time.perf_counter()
    rep = vanishing_chain_check(generate("legendrian_lift", h=1e-3), heis, tol=1e-6)
    checks.append((f"f*eta_3 {rep.step1['max']:.1e}", rep.step1["max"] < 1e-6))
    checks.append((f"f*(eta_1^eta_2) {rep.step2_direct[3]['max']:.1e}", rep.step2_direct[3]["max"] < 1e-4))
    checks.append(("chain identity exact", rep.identity_exact[3]))
    checks.append((f"rank histogram {rep.rank_histogram}", rep.max_rank <= 1))
    plane = generate("linear", domain=((-1, 1), (-1, 1)), resolution=(201, 201),
                     matrix=[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    try:
        vanishing_chain_check(plane, heis)
        checks.append(("plane raises PreconditionDefect", False))
    except PreconditionDefect as exc:
        d = exc.defect
        u, v = np.moveaxis(plane.points(), -1, 0)
        err = np.max(np.abs(d.values - 0.5 * np.hypot(v, -u))[d.interior])
        checks.append((f"plane defect err {err:.1e}", err < 1e-6))
    record(acceptance_log, 5, "vanishing chain desk check", checks, time.perf_counter() - t0)


def test_criterion_6_dimension(acceptance_log):
    heis = resolve_group("heisenberg")
    checks = []
    t0 = time.perf_counter()
    cube = run_preset("cube", heis, DEFAULT_SCALES)
    checks.append((f"cube homogeneous {cube.homogeneous.slope:.3f}", abs(cube.homogeneous.slope - 4.0) <= 0.2))
    checks.append((f"cube euclidean {cube.euclidean.slope:.3f}", abs(cube.euclidean.slope - 3.0) <= 0.15))
    plane = run_preset("vertical-plane", heis, DEFAULT_SCALES)
    checks.append((f"plane homogeneous {plane.homogeneous.slope:.3f}", abs(plane.homogeneous.slope - 3.0) <= 0.25))
    checks.append((f"plane verdict {plane.verdict}", plane.verdict == "PASS"))
    checks.append((f"plane euclidean {plane.euclidean.slope:.3f}", abs(plane.euclidean.slope - 2.0) <= 0.15))
    leg = run_preset("legendrian-cylinder", heis, DEFAULT_SCALES)
    checks.append((f"legendrian {leg.homogeneous.slope:.3f}", abs(leg.homogeneous.slope - 1.0) <= 0.2))
    checks.append((f"legendrian verdict {leg.verdict}", leg.verdict == "INAPPLICABLE"))
    record(acceptance_log, 6, "box-counting dimension experiments", checks, time.perf_counter() - t0, 60)


def test_criterion_7_scope_note(acceptance_log):
    line = ("[NOTE] criterion 7: almost-everywhere statements over all Sobolev maps and positivity of "
            "the (Q-1)-dimensional measure are not checked numerically; criteria 1-6 are the gate")
    acceptance_log.append(line)
    print(line)
