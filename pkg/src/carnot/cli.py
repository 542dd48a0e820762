"""Command-line front end.

Exit codes: 0 success, 1 a check failed, 2 bad input (parse or I/O),
3 the command needs a noncommutative group.
"""
from __future__ import annotations

import argparse
import sys
import time
import warnings
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import CATALOG_NAMES, StratifiedAlgebra, iter_pairs, resolve_group, validate
from .errors import AlgebraError, DimensionMismatch, PreconditionDefect
from .dimension import worker_count

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_COMMUTATIVE = 0, 1, 2, 3


class InputError(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def _load_group(source: str) -> StratifiedAlgebra:
    try:
        return resolve_group(source)
    except AlgebraError:
        raise
    except (OSError, KeyError, ValueError, TypeError) as exc:
        raise InputError(f"cannot load group {source!r}: {exc}") from exc


def _group_source(args) -> str:
    src = getattr(args, "source", None) or args.group
    if src is None:
        raise InputError("no group given; use --group NAME or a TOML path")
    return src


# -- commands ---------------------------------------------------------------------

def cmd_validate(args) -> int:
    from .algebra import catalog, load_spec

    src = _group_source(args)
    try:
        spec = load_spec(src) if (src.endswith(".toml") or Path(src).is_file()) else catalog(src)
        results = validate(spec)
    except AlgebraError as exc:
        print(f"FAIL {exc}")
        return EXIT_FAIL
    except (DimensionMismatch, ValueError) as exc:
        print(f"error: {exc}")
        return EXIT_INPUT
    except (OSError, KeyError, ValueError, TypeError, IndexError) as exc:
        print(f"error: cannot parse {src!r}: {exc}")
        return EXIT_INPUT
    print(f"group {spec.name}: q = {sum(spec.strata_dims)}, step = {len(spec.strata_dims)}, "
          f"strata = {list(spec.strata_dims)}")
    ok = True
    for res in results:
        print(f"{'PASS' if res.passed else 'FAIL'} {res.name}" + (f": {res.detail}" if res.detail else ""))
        ok &= res.passed
    return EXIT_OK if ok else EXIT_FAIL


def _header(alg: StratifiedAlgebra) -> None:
    print(f"group {alg.name}: q = {alg.q}, step = {alg.step}, strata = {list(alg.strata_dims)}, Q = {alg.Q}")


def cmd_frames(args) -> int:
    from .group import coframe, frame, frame_polynomial

    alg = _load_group(_group_source(args))
    _header(alg)
    if args.point:
        z = [Fraction(t) for t in args.point.split(",")]
        fr, co = frame(alg, z), coframe(alg, z)
        print("frame at", "(" + ", ".join(map(str, z)) + ")")
        for i in range(alg.q):
            print("  X_%d = (%s)" % (i + 1, ", ".join(_fmt(fr[k][i]) for k in range(alg.q))))
        for r in range(alg.q):
            print("  eta_%d = (%s)" % (r + 1, ", ".join(_fmt(c) for c in co[r])))
        return EXIT_OK
    zs, fr, co = frame_polynomial(alg)
    for i in range(alg.q):
        terms = [f"({fr[k, i]}) d/d{zs[k]}" for k in range(alg.q) if fr[k, i] != 0]
        print(f"X_{i + 1} = " + " + ".join(terms))
    for r in range(alg.q):
        terms = [f"({co[r, k]}) d{zs[k]}" for k in range(alg.q) if co[r, k] != 0]
        print(f"eta_{r + 1} = " + " + ".join(terms))
    return EXIT_OK


def cmd_mc_table(args) -> int:
    from .forms import d_invariant, maurer_cartan

    alg = _load_group(_group_source(args))
    _header(alg)
    ok = True
    for k in range(1, alg.q + 1):
        form = maurer_cartan(alg, k)
        dd = d_invariant(alg, form)
        ok &= dd.is_zero()
        print(f"d eta_{k} = {'0' if form.is_zero() else form}    d(d eta_{k}) = {'0' if dd.is_zero() else dd}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_theta(args) -> int:
    from .forms import gamma_coefficients, theta_form, theta_product_check

    alg = _load_group(_group_source(args))
    if alg.commutative:
        print(f"group {alg.name} is commutative; theta forms require step >= 2")
        return EXIT_COMMUTATIVE
    _header(alg)
    ok = True
    seen = set()
    print(f"{'s':>3} {'r':>3}  verdict")
    for s, r in iter_pairs(alg):
        good = theta_product_check(alg, s, r)
        ok &= good
        print(f"{s:>3} {r:>3}  {'PASS' if good else 'FAIL'}")
        seen.add(s)
    for s in sorted(seen):
        gam = gamma_coefficients(alg, s)
        coeffs = ", ".join(f"gamma({k},{l}) = {c}" for (k, l), c in sorted(gam.coefficients.items()))
        print(f"theta_{s} = {theta_form(alg, s, gam)}    [{coeffs}]")
    return EXIT_OK if ok else EXIT_FAIL


CHAIN_PRESETS = ("legendrian-cylinder", "plane", "constant", "random")


def _chain_map(args, alg):
    from .grid import generate, load_gridmap

    if args.input:
        return load_gridmap(args.input)
    h = args.h
    if args.preset in (None, "legendrian-cylinder"):
        return generate("legendrian_lift", h=h or 1e-3, radius=1.0)
    if args.preset == "plane":
        mat = np.zeros((alg.q, alg.q - 1))
        mat[: alg.q - 1] = np.eye(alg.q - 1)
        return generate("linear", domain=((-1.0, 1.0),) * (alg.q - 1), h=h or 1e-2, matrix=mat.tolist())
    if args.preset == "constant":
        return generate("constant", domain=((0.0, 1.0),) * (alg.q - 1), h=h or 1e-2, value=[0.5] * alg.q)
    if args.preset == "random":
        return generate("random_trig", domain=((0.0, 1.0),) * (alg.q - 1), h=h or 1e-2,
                        n=alg.q - 1, m=alg.q, seed=args.seed)
    raise InputError(f"unknown chain preset {args.preset!r}; choose from {CHAIN_PRESETS}")


def cmd_chain(args) -> int:
    from .grid import vanishing_chain_check

    alg = _load_group(_group_source(args))
    if alg.commutative:
        print(f"group {alg.name} is commutative; the chain check requires step >= 2")
        return EXIT_COMMUTATIVE
    gm = _chain_map(args, alg)
    tol = args.tol if args.tol is not None else 1e-6
    _header(alg)
    print(f"map: {gm.generator or 'samples'}; resolution {list(gm.resolution)}; seed {args.seed}")
    try:
        rep = vanishing_chain_check(gm, alg, args.kappa, tol=tol)
    except PreconditionDefect as exc:
        print(f"PRECONDITION-DEFECT {exc}")
        print(f"  defect max {exc.defect.max:.6g}, mean {exc.defect.mean:.6g}, "
              f"share above tol {exc.defect.fraction_above:.4f}")
        return EXIT_FAIL
    print(f"step 1: max {rep.step1['max']:.3e}  mean {rep.step1['mean']:.3e}")
    print(f"pullback of d(Xi): max {rep.d_xi['max']:.3e}")
    for s in sorted(rep.step2_via_theta):
        via, direct = rep.step2_via_theta[s], rep.step2_direct[s]
        print(f"s = {s}: theta route max {via['max']:.3e}, direct max {direct['max']:.3e}, "
              f"exact identity {'PASS' if rep.identity_exact[s] else 'FAIL'}")
    print("rank histogram: " + ", ".join(f"{k}: {v}" for k, v in sorted(rep.rank_histogram.items())))
    ok = rep.step2_holds() and all(rep.identity_exact.values())
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAIL


def _weight(name: str):
    if name in ("1", "one"):
        return None
    if name.startswith("x") and name[1:].isdigit():
        i = int(name[1:]) - 1
        return lambda x: x[..., i]
    if name.startswith("x") and name.endswith("^2") and name[1:-2].isdigit():
        i = int(name[1:-2]) - 1
        return lambda x: x[..., i] ** 2
    raise InputError(f"unknown weight {name!r}; use 1, xK or xK^2")


def cmd_integrate_sphere(args) -> int:
    from .grid import analytic_map
    from .sphere import (QuadratureGrid, hadamard_bound, oriented_integral, stokes_sides)

    n = args.n
    if n < 2:
        raise InputError("n must be at least 2")
    center = [float(t) for t in args.center.split(",")] if args.center else [0.0] * n
    if len(center) != n:
        raise InputError(f"center needs {n} coordinates")
    if args.map == "identity":
        f = analytic_map("identity")
        m = n
    elif args.map == "random":
        m = args.m or n
        f = analytic_map("random_trig", {"n": n, "m": m, "seed": args.seed})
    else:
        raise InputError(f"unknown map {args.map!r}; use identity or random")
    L = tuple(int(t) for t in args.L.split(",")) if args.L else tuple(range(2, n + 1))
    g = _weight(args.weight)
    quad = QuadratureGrid(args.resolution or (10_000 if n == 2 else 48), args.rule)
    value = oriented_integral(f, g, L, center, args.radius, quad=quad)
    print(f"n = {n}, map = {args.map}, L = {list(L)}, weight = {args.weight}, radius = {args.radius}, "
          f"rule = {quad.rule}, resolution = {quad.resolution}, seed = {args.seed}")
    print(f"oriented integral = {value:.12g}")
    print(f"hadamard bound = {hadamard_bound(f, g, center, args.radius, quad):.12g}")
    if g is not None:
        a, b = stokes_sides(f, g, L, center, args.radius, quad)
        print(f"volume side = {b:.12g}, stokes residual = {abs(a - b):.3e}")
    return EXIT_OK


def cmd_dim(args) -> int:
    from .dimension import PRESETS, gromov_experiment, run_preset
    from .validation import parse_scales

    alg = _load_group(_group_source(args))
    scales = parse_scales(args.scales) if args.scales else None
    kw = {} if scales is None else {"scales": scales}
    tol = args.tol if args.tol is not None else 0.25
    if args.input:
        from .grid import load_gridmap

        gm = load_gridmap(args.input)
        report = gromov_experiment(gm, alg, tol=tol, seed=args.seed, label=str(args.input), **kw)
    else:
        preset = args.preset or "vertical-plane"
        if preset not in PRESETS:
            raise InputError(f"unknown preset {preset!r}; choose from {PRESETS}")
        report = run_preset(preset, alg, tol=tol, seed=args.seed, **kw)
    primary = report.homogeneous if args.metric == "homogeneous" else report.euclidean
    _header(alg)
    print(f"preset {report.label}; metric {args.metric}; seed {args.seed}")
    print(f"{'eps':>12} {'N_homogeneous':>14} {'N_euclidean':>12}")
    for e, a, b in report.rows():
        print(f"{e:>12.6g} {a:>14d} {b:>12d}")
    print(f"slope {primary.slope:.4f} (rms residual {primary.residual:.4f})")
    print(f"verdict {report.verdict}" + (f"  [{report.caveat}]" if report.caveat else ""))
    if args.out:
        out = Path(args.out)
        try:
            out.write_text(report.to_csv())
            out.with_suffix(".toml").write_text(report.to_toml())
        except OSError as exc:
            raise InputError(f"cannot write {out}: {exc}") from exc
    return EXIT_FAIL if report.verdict == "FAIL" else EXIT_OK


def cmd_selftest(args) -> int:
    """Quick exact suites over the catalog groups."""
    import random

    from .forms import d_invariant, maurer_cartan, span_test, theta_product_check
    from .group import bch_product, coframe, frame
    from . import _exact

    rng = random.Random(args.seed)
    ok = True

    def line(name, good, started):
        nonlocal ok
        ok &= good
        print(f"{'PASS' if good else 'FAIL'} {name} ({time.perf_counter() - started:.2f}s)")

    for name in CATALOG_NAMES:
        t0 = time.perf_counter()
        alg = resolve_group(name)
        good = all(r.passed for r in validate(alg))
        for _ in range(5):
            z = [Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(alg.q)]
            good &= _exact.matmul(coframe(alg, z, check=False), frame(alg, z)) == _exact.identity(alg.q)
        for _ in range(10):
            x, y, w = ([Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(alg.q)] for _ in range(3))
            good &= bch_product(alg, bch_product(alg, x, y), w) == bch_product(alg, x, bch_product(alg, y, w))
        good &= all(d_invariant(alg, maurer_cartan(alg, k)).is_zero() for k in range(1, alg.q + 1))
        line(f"{name}: structure, frames, BCH, d^2 = 0", good, t0)
        t0 = time.perf_counter()
        line(f"{name}: theta products", all(theta_product_check(alg, s, r) for s, r in iter_pairs(alg)), t0)
        t0 = time.perf_counter()
        good = True
        for _ in range(50):
            xis = [[Fraction(rng.randint(-3, 3)) for _ in range(alg.q)] for _ in range(alg.q - 1)]
            if _exact.rank(xis) < alg.q - 1:
                continue
            for s in range(1, alg.strata_dims[0] + 1):
                e = [Fraction(int(i == s - 1)) for i in range(alg.q)]
                good &= span_test(alg, s, xis) == (_exact.rank(xis + [e]) == alg.q - 1)
        line(f"{name}: span criterion vs rank", good, t0)
    print(f"seed {args.seed}")
    return EXIT_OK if ok else EXIT_FAIL


# -- parser ----------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="carnot", description="Stratified group toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, source=False):
        sp.add_argument("--group", help="catalog name or TOML spec path")
        if source:
            sp.add_argument("source", nargs="?", help="TOML spec path (alternative to --group)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float)
        sp.add_argument("--out")
        return sp

    sp = common(sub.add_parser("validate", help="check a group specification"), source=True)
    sp.set_defaults(func=cmd_validate)
    sp = common(sub.add_parser("frames", help="left-invariant frame and coframe"), source=True)
    sp.add_argument("--point", help="comma-separated rational coordinates")
    sp.set_defaults(func=cmd_frames)
    sp = common(sub.add_parser("mc-table", help="Maurer-Cartan differentials"), source=True)
    sp.set_defaults(func=cmd_mc_table)
    sp = common(sub.add_parser("theta", help="theta forms and their product identity"), source=True)
    sp.set_defaults(func=cmd_theta)
    sp = common(sub.add_parser("chain", help="vanishing chain on a sampled map"))
    sp.add_argument("--preset", choices=CHAIN_PRESETS)
    sp.add_argument("--input", help="grid map file (.csv, .bin or generator .toml)")
    sp.add_argument("--kappa", type=int, default=1)
    sp.add_argument("--h", type=float, help="grid step")
    sp.set_defaults(func=cmd_chain)
    sp = common(sub.add_parser("integrate-sphere", help="oriented integral over a sphere"))
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--m", type=int)
    sp.add_argument("--map", default="identity")
    sp.add_argument("--L", help="comma-separated component indices")
    sp.add_argument("--weight", default="x1")
    sp.add_argument("--center")
    sp.add_argument("--radius", type=float, default=1.0)
    sp.add_argument("--resolution", type=int)
    sp.add_argument("--rule", choices=("gauss", "midpoint"), default="gauss")
    sp.set_defaults(func=cmd_integrate_sphere)
    sp = common(sub.add_parser("dim", help="box-counting dimension experiment"))
    sp.add_argument("--preset")
    sp.add_argument("--input", help="grid map file")
    sp.add_argument("--scales", help="a:b for 2^-a..2^-b")
    sp.add_argument("--metric", choices=("homogeneous", "euclidean"), default="homogeneous")
    sp.set_defaults(func=cmd_dim)
    sp = common(sub.add_parser("selftest", help="quick exact identity suites"))
    sp.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    caught: list = []
    try:
        try:
            worker_count()
        except ValueError as exc:
            raise InputError(str(exc)) from None
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            code = args.func(args)
    except InputError as exc:
        print(f"error: {exc}")
        return EXIT_INPUT
    except AlgebraError as exc:
        print(f"FAIL {exc}")
        return EXIT_FAIL
    except (DimensionMismatch, ValueError) as exc:
        print(f"error: {exc}")
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}")
        return EXIT_INPUT
    for w in caught:
        print(f"warning: {w.message}")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
