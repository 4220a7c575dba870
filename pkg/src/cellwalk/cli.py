"""Command-line front end: validate, generate, walk, trace, density, nsi."""

from __future__ import annotations

import argparse
import csv
import sys
from fractions import Fraction
from pathlib import Path

from .complex import (
    DegenerateCell,
    ManifestError,
    boundary_matrix,
    check_upper_k_connected,
    check_upper_k_regular,
    degree_quantities,
    dumps_complex,
    load_complex,
)
from .generators import parse_generator
from .operators import build_B
from .spectral import (
    DENSITY_WINDOW,
    WALK_WINDOW,
    IrregularComplex,
    NonPositiveResidual,
    default_lambdas,
    estimate_nsi_walk,
    nsi_from_density,
    spectral_density,
    trace_power_series,
)
from .walk import WalkRunConfig, build_transitions, exact_return_series, simulate

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _window(text: str, cast=float):
    try:
        a, b = (cast(s) for s in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must look like A:B, got {text!r}") from None
    if not 0 <= a < b:
        raise argparse.ArgumentTypeError(f"window needs 0 <= A < B, got {text!r}")
    return a, b


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=header, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow(r)


RETURN_HEADER = ["n", "p_plus", "p_minus", "p", "stderr", "method"]
DENSITY_HEADER = ["lambda", "F"]
NSI_HEADER = ["alpha_hat", "b2_hat", "slope_stderr", "window", "method"]


def _complex(args):
    if args.complex and args.generate:
        raise UsageError("give either --complex or --generate, not both")
    if args.complex:
        return load_complex(Path(args.complex))
    if args.generate:
        return _generated(args.generate)
    raise UsageError("one of --complex PATH or --generate SPEC is required")


def _generated(spec: str):
    try:
        return parse_generator(spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _degree(args, X) -> int:
    if args.degree is not None:
        return args.degree
    # default: the highest degree carrying a walk
    return max(X.dim - 1, 0)


def cmd_validate(args) -> int:
    X = _complex(args)
    failed = False
    print(f"group: {X.group.kind} rank {X.group.rank}; dimension {X.dim}")
    for k in range(1, X.dim):
        if X.orbits(k) and X.orbits(k + 1) and X.orbits(k - 1):
            dd = boundary_matrix(X, k - 1) @ boundary_matrix(X, k)
            ok = dd.total_support() == 0
            failed |= not ok
            print(f"d_{k} d_{k + 1} = 0: {'PASS' if ok else 'FAIL'}")
    degrees = [args.degree] if args.degree is not None else range(X.dim)
    checked = 0
    for k in degrees:
        if not X.orbits(k):
            print(f"degree {k}: no cells")
            failed |= args.degree is not None
            continue
        try:
            dd = degree_quantities(X, k, allow_absorbing=args.allow_absorbing)
        except DegenerateCell as exc:
            print(f"degree {k}: walk undefined ({exc})")
            failed |= args.degree is not None
            continue
        checked += 1
        conn = check_upper_k_connected(X, k)
        reg = check_upper_k_regular(X, k, dd)
        print(f"degree {k}: d_+={_vals(dd.d_plus)} d_+2={_vals(dd.d_plus2)} d_-={_vals(dd.d_minus)}"
              f" S_k={dd.S_k} q0={dd.q0}")
        print(f"  upper {k}-connected: {'PASS' if conn.connected else 'FAIL'} ({conn.reason})")
        if reg.regular:
            pm, p2 = reg.d_plus_d_minus, reg.d_plus2
            print(f"  upper {k}-regular: PASS  C1(q) = {pm}/({pm} q + {p2} (1-q))"
                  f"  C2(q) = (1-q)/({pm} q + {p2} (1-q))")
        else:
            print(f"  upper {k}-regular: FAIL")
        failed |= not (conn.connected and reg.regular)
    if not checked:
        print("no degree with a defined walk")
        failed = True
    print("PASS" if not failed else "FAIL")
    return EXIT_FAIL if failed else EXIT_OK


def _vals(d: dict) -> str:
    vals = sorted(set(d.values()))
    return str(vals[0]) if len(vals) == 1 else "{" + ",".join(map(str, vals)) + "}"


def cmd_generate(args) -> int:
    if not args.spec:
        raise UsageError("generate needs a SPEC")
    text = dumps_complex(_generated(args.spec))
    if args.out:
        out = Path(args.out)
        if out.suffix != ".json":
            out = out / "complex.json"
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
        print(f"wrote {out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _out_dir(args) -> Path:
    return Path(args.out or ".")


def cmd_walk(args) -> int:
    X = _complex(args)
    k = _degree(args, X)
    table = build_transitions(X, k, args.q, allow_absorbing=args.allow_absorbing)
    start = args.start or table.orbits[0]
    cfg = WalkRunConfig(args.q, args.steps, args.walkers, args.seed, start)
    mc = simulate(table, cfg)
    n_exact = min(args.steps, args.exact_until)
    ex = exact_return_series(table, n_exact, start=start, exact=False)
    rows = list(mc.rows()) + list(ex.rows())
    path = _out_dir(args) / "returns.csv"
    write_csv(path, RETURN_HEADER, rows)
    worst = max((abs(float(mc.p[n]) - float(ex.p[n])) / mc.stderr[n]
                 for n in range(n_exact + 1) if mc.stderr[n] > 0), default=0.0)
    print(f"walk: degree {k}, q={args.q}, start {start}, N={args.walkers}, seed={args.seed}")
    print(f"p_hat({args.steps}) = {float(mc.p[-1]):.6g} +- {mc.stderr[-1]:.2g};"
          f" max |p_hat - exact|/stderr over n <= {n_exact}: {worst:.3g}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_trace(args) -> int:
    X = _complex(args)
    k = _degree(args, X)
    Bq = build_B(X, k, args.q, allow_absorbing=args.allow_absorbing)
    series = trace_power_series(Bq, args.steps, args.exact_until)
    path = _out_dir(args) / "trace.csv"
    write_csv(path, RETURN_HEADER, series.rows())
    print(f"trace: degree {k}, q={args.q}, p({args.steps}) = {float(series.p[-1]):.12g}")
    print(f"wrote {path}")
    return EXIT_OK


def _density(args, X, k):
    return spectral_density(X, k, default_lambdas(), M=args.quad_m)


def cmd_density(args) -> int:
    X = _complex(args)
    k = _degree(args, X)
    dens = _density(args, X, k)
    path = _out_dir(args) / "density.csv"
    write_csv(path, DENSITY_HEADER, [{"lambda": repr(r["lambda"]), "F": repr(r["F"])}
                                     for r in dens.rows()])
    est = nsi_from_density(dens, args.window)
    print(f"density: degree {k}, M={dens.M}, cells={dens.cells}")
    print(f"b2_hat = {dens.F0:.6g}; alpha_hat = {est.alpha_hat:.4g} +- {est.alpha_stderr:.2g}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_nsi(args) -> int:
    X = _complex(args)
    k = _degree(args, X)
    dens = _density(args, X, k)
    dens_est = nsi_from_density(dens, args.window)
    b2 = dens.F0 if args.b2 is None else args.b2
    rows = [dens_est.row()]
    print(f"nsi: degree {k}")
    print(f"  density: b2_hat = {dens.F0:.6g}, alpha_hat = {dens_est.alpha_hat:.4g}"
          f" +- {dens_est.alpha_stderr:.2g} on lambda in [{args.window[0]:g}, {args.window[1]:g}]")
    status = EXIT_OK
    try:
        res = estimate_nsi_walk(X, k, args.q, b2, window=args.walk_window,
                                exact_until=args.exact_until)
        w = res.estimate
        rows.append(w.row())
        print(f"  walk: C1(q) = {res.C1q}, alpha_hat = {w.alpha_hat:.4g} +- {w.alpha_stderr:.2g}"
              f" on n in [{w.window[0]:g}, {w.window[1]:g}] with b2 = {b2:.6g}")
        print(f"  agreement: |difference| = {abs(w.alpha_hat - dens_est.alpha_hat):.3g}")
    except (IrregularComplex, NonPositiveResidual) as exc:
        print(f"  walk: not available ({exc})")
        status = EXIT_FAIL
    path = _out_dir(args) / "nsi.csv"
    write_csv(path, NSI_HEADER, rows)
    print(f"wrote {path}")
    return status


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--complex", help="path to a complex manifest (JSON)")
    common.add_argument("--generate", metavar="SPEC",
                        help="builtin complex: grid2d, grid:D, cayley_suspension:D:K, simplicial:0,1,2;...")
    common.add_argument("--degree", type=int, help="walk degree k (default: dim - 1)")
    common.add_argument("--q", type=_fraction, default=Fraction(9, 10), help="laziness q (default 9/10)")
    common.add_argument("--steps", type=int, default=50, help="number of steps n")
    common.add_argument("--walkers", type=int, default=100_000, help="Monte Carlo walkers N")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--start", help="start orbit for walk (default: first k-orbit)")
    common.add_argument("--quad-m", type=int, default=None, help="torus grid points per dimension")
    common.add_argument("--window", type=_window, default=DENSITY_WINDOW,
                        help="lambda window A:B for the density fit (default 0.01:0.1)")
    common.add_argument("--walk-window", type=lambda s: _window(s, int), default=WALK_WINDOW,
                        help="n window A:B for the walk fit (default 50:400)")
    common.add_argument("--b2", type=float, default=None,
                        help="known L2-Betti number for the walk fit (default: density estimate)")
    common.add_argument("--out", help="output directory (generate: file or directory)")
    common.add_argument("--allow-absorbing", action="store_true",
                        help="send walkers on cells with d_+ d_- = 0 to Theta")
    common.add_argument("--exact-until", type=int, default=64,
                        help="largest n computed in exact arithmetic")

    parser = argparse.ArgumentParser(prog="cellwalk", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("validate", parents=[common], help="check a manifest")
    p.add_argument("path", nargs="?", help="manifest path (same as --complex)")
    p.set_defaults(func=cmd_validate)
    p = sub.add_parser("generate", parents=[common], help="emit a builtin complex manifest")
    p.add_argument("spec", nargs="?")
    p.set_defaults(func=cmd_generate)
    for name, func, text in [("walk", cmd_walk, "Monte Carlo return quantities"),
                             ("trace", cmd_trace, "exact trace series of B_q^n"),
                             ("density", cmd_density, "spectral density function"),
                             ("nsi", cmd_nsi, "Novikov-Shubin estimates from density and walk")]:
        p = sub.add_parser(name, parents=[common], help=text)
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if getattr(args, "path", None):
        if args.complex:
            print("error: give the manifest once", file=sys.stderr)
            return EXIT_USAGE
        args.complex = args.path
    try:
        return args.func(args)
    except (ManifestError, UsageError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
