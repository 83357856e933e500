"""Command-line front end: ``fspec <subcommand> ...``.

Exit codes: 0 success, 1 oracle comparison failure, 2 diagnostics failure,
3 invalid input.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import applications as app
from .energy import compute_energy_table
from .estimate import DEFAULT_THETAS, MIN_SHELLS, diagnostics, estimate_spectrum
from .io import (
    COMPARE_HEADER,
    ENERGY_HEADER,
    ORACLE_HEADER,
    PLOT_HEADER,
    SPECTRUM_HEADER,
    format_float,
    parse_descriptors,
    read_spectrum_csv,
    write_csv,
)
from .measures import MeasureError
from .oracle import EXACT, oracle_by_name
from .transforms import default_grid, eval_transform, sample_grid

EXIT_OK, EXIT_COMPARE, EXIT_DIAGNOSTICS, EXIT_INPUT = 0, 1, 2, 3
DEFAULT_TOL = 0.05

log = logging.getLogger("fspec")


def parse_theta_grid(text: str | None, include_zero: bool = True) -> np.ndarray:
    """``"a:b:step"`` or a comma list; default ``0, 0.05, ..., 1``."""
    if text is None:
        th = np.array(((0.0,) if include_zero else ()) + DEFAULT_THETAS)
    elif ":" in text:
        a, b, step = (float(v) for v in text.split(":"))
        n = int(round((b - a) / step))
        th = np.round(a + step * np.arange(n + 1), 12)
    else:
        th = np.array([float(v) for v in text.split(",") if v.strip()])
    if th.size == 0 or np.any((th < 0) | (th > 1)):
        raise MeasureError("theta values must lie in [0, 1]")
    return np.unique(th)


def parse_params(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep:
            raise MeasureError(f"parameter {item!r} is not key=value")
        try:
            out[key] = int(val)
        except ValueError:
            out[key] = float(val)
    return out


def load_curve(source: str) -> app.CurveAlgebra:
    """Curve from a spectrum CSV path, ``oracle:FAMILY:k=v,...`` or ``linear:C``."""
    if source.startswith("oracle:"):
        _, family, *rest = source.split(":", 2)
        params = parse_params(rest[0].split(",")) if rest and rest[0] else {}
        return app.CurveAlgebra.from_oracle(oracle_by_name(family, **params), label=family)
    if source.startswith("linear:"):
        return app.CurveAlgebra.linear(float(source.split(":", 1)[1]))
    path = Path(source)
    if not path.exists():
        raise MeasureError(f"curve {source!r} is neither a file nor an oracle:/linear: source")
    th, est, ci, _ = read_spectrum_csv(path)
    return app.CurveAlgebra.from_points(th, est, ci, label=path.stem)


def _grid(args, measure):
    kw = {}
    if args.grid_shells is not None:
        if args.grid_shells < 1:
            raise MeasureError("--grid-shells must be >= 1")
        kw["shells"] = args.grid_shells
    return default_grid(measure, **kw)


def _cache(args):
    return args.cache if args.cache is not None else False


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _single(args):
    descs = parse_descriptors(args.measure)
    return descs[0]


# ----------------------------------------------------------------------------
# subcommands


def cmd_transform(args):
    desc = _single(args)
    m = desc.measure
    if args.at:
        rows = []
        for text in args.at:
            z = np.array([float(v) for v in text.split(",")])
            v, e = eval_transform(m, z)
            rows.append((*z, v.real, v.imag, e))
        header = [f"z{i + 1}" for i in range(m.ambient_dim)] + ["re", "im", "err_bound"]
        path = write_csv(_out(args) / "transform.csv", header, rows)
    else:
        s = sample_grid(m, _grid(args, m), threads=args.threads, cache=_cache(args))
        header = [f"z{i + 1}" for i in range(m.ambient_dim)] + ["re", "im", "err_bound", "weight", "shell"]
        rows = (( *s.z[i], s.values[i].real, s.values[i].imag, s.err[i], s.weights[i], s.shell[i])
                for i in range(s.z.shape[0]))
        path = write_csv(_out(args) / "transform.csv", header, rows)
    print(path)
    return EXIT_OK


def cmd_energy(args):
    desc = _single(args)
    m = desc.measure
    th = parse_theta_grid(args.theta_grid)
    samples = sample_grid(m, _grid(args, m), threads=args.threads, cache=_cache(args))
    table = compute_energy_table(samples, th, tuple(args.s))
    print(write_csv(_out(args) / "energy.csv", ENERGY_HEADER, table.rows()))
    return EXIT_OK


def _spectrum(args, measure):
    grid = _grid(args, measure)
    if grid.shells < MIN_SHELLS:
        raise MeasureError(f"spectrum runs need at least {MIN_SHELLS} shells")
    th = parse_theta_grid(args.theta_grid)
    return estimate_spectrum(measure, th, grid, threads=args.threads, cache=_cache(args), as_set=args.as_set)


def _write_spectrum(out: Path, curve, measure):
    write_csv(out / "spectrum.csv", SPECTRUM_HEADER, curve.rows())
    write_csv(out / "energy.csv", ENERGY_HEADER, curve.table.rows())
    report = diagnostics(curve, measure)
    (out / "diagnostics.txt").write_text(str(report) + "\n")
    return report


def cmd_spectrum(args):
    desc = _single(args)
    curve = _spectrum(args, desc.measure)
    out = _out(args)
    report = _write_spectrum(out, curve, desc.measure)
    for row in curve.rows():
        print(",".join(format_float(v) for v in row))
    print(report)
    return EXIT_OK if report.ok else EXIT_DIAGNOSTICS


def cmd_oracle(args):
    oracle = oracle_by_name(args.family, **parse_params(args.param))
    th = parse_theta_grid(args.theta_grid)
    rows = list(oracle.rows(th))
    if args.out:
        print(write_csv(_out(args) / "oracle.csv", ORACLE_HEADER, rows))
    else:
        print(",".join(ORACLE_HEADER))
        for r in rows:
            print(",".join(format_float(v) for v in r))
    return EXIT_OK


def compare_rows(curve_thetas, estimates, oracle, tol):
    """Rows of ``COMPARE_HEADER``; lower-bound rows only fail when the estimate leaves the band."""
    rows = []
    for th, est in zip(curve_thetas, estimates):
        kind = oracle.kind(th)
        lo, hi = oracle.band(th)
        if kind == EXACT:
            gap = est - lo
            ok = abs(gap) <= tol
        else:
            # one-sided: distance outside [lo, hi]
            gap = min(est - lo, 0.0) + max(est - hi, 0.0)
            ok = abs(gap) <= tol
        rows.append((th, est, lo, kind, gap, tol, ok))
    return rows


def cmd_compare(args):
    oracle = oracle_by_name(args.oracle, **parse_params(args.param))
    out = _out(args)
    if args.spectrum:
        th, est, _, _ = read_spectrum_csv(args.spectrum)
        report = None
    else:
        if not args.measure:
            raise MeasureError("compare needs a measure descriptor or --spectrum")
        desc = _single(args)
        curve = _spectrum(args, desc.measure)
        report = _write_spectrum(out, curve, desc.measure)
        th, est = curve.thetas, curve.values
    rows = compare_rows(th, est, oracle, args.tol)
    write_csv(out / "compare.csv", COMPARE_HEADER, rows)
    exact = [abs(r[4]) for r in rows if r[3] == EXACT]
    gaps = np.array([r[4] for r in rows])
    failed = [r for r in rows if r[3] == EXACT and not r[6]]
    print(f"compare: n={len(rows)} max_gap={np.max(np.abs(gaps)):.6g} "
          f"rms_gap={math.sqrt(np.mean(gaps**2)):.6g} exact_max_gap={max(exact, default=0.0):.6g} "
          f"tol={args.tol:g} {'FAIL' if failed else 'OK'}")
    if failed:
        return EXIT_COMPARE
    if report is not None and not report.ok:
        print(report)
        return EXIT_DIAGNOSTICS
    return EXIT_OK


def cmd_convolve(args):
    curve = load_curve(args.curve)
    th = parse_theta_grid(args.theta_grid)
    conv = app.convolve_spectrum(curve, args.k)
    other = load_curve(args.with_curve) if args.with_curve else None
    header = ["theta", "value", "improves", "improve_margin", "improve_witness"]
    if other is not None:
        header += ["lower_bound", "lower_bound_witness"]
    rows = []
    for t in th:
        row = [t, conv(t)]
        if t > 0:
            dec = app.convolution_improves(curve, t, tol=args.tol)
            row += [dec.result, dec.margin, dec.witness]
        else:
            row += ["", "", ""]
        if other is not None:
            row += list(app.convolution_lower_bound(curve, other, t))
        rows.append(row)
    print(write_csv(_out(args) / "convolve.csv", header, rows))
    lim = app.iterated_convolution_limit(curve)
    print(f"iterated convolution: {lim.regime}; limit={lim.limit:.6g}")
    print(f"sobolev improving threshold s*={app.sobolev_improving(curve):.6g}")
    return EXIT_OK


def cmd_sumset(args):
    cx = load_curve(args.curve)
    rep = app.sumset_bounds(cx, None, args.dimh_y, args.d, tol=args.tol, measure_level=not args.as_set)
    rows = [
        ("dimension_bound", True, rep.dimension_bound, rep.dimension_witness),
        ("positive_measure", rep.positive_measure.result, rep.positive_measure.margin, rep.positive_measure.witness),
        ("interior", rep.interior.result, rep.interior.margin, rep.interior.witness),
        ("classical", True, rep.classical, 0.0),
    ]
    write_csv(_out(args) / "sumset.csv", ("conclusion", "decision", "margin", "witness"), rows)
    print(f"sumset: {rep.conclusion} (lambda={rep.dimension_witness:.2f}); classical bound {rep.classical:.6g}\n"
          f"caveat: {rep.caveat}")
    return EXIT_OK


def cmd_distance(args):
    if args.measure:
        m = _single(args).measure
        samples = sample_grid(m, _grid(args, m), threads=args.threads, cache=_cache(args))
        rep = app.fourth_moment_check(samples, delta=args.delta)
    else:
        if not args.curve:
            raise MeasureError("distance needs a curve or --measure")
        rep = app.distance_set_check(load_curve(args.curve), args.d, tol=args.tol)
    bound = "" if rep.dimension_bound is None else rep.dimension_bound
    write_csv(_out(args) / "distance.csv", ("decision", "margin", "witness", "statistic", "dimension_bound"),
              [(rep.decision, rep.margin, "" if rep.witness is None else rep.witness, rep.statistic, bound)])
    print(rep)
    return EXIT_OK


def cmd_plotdata(args):
    th = parse_theta_grid(args.theta_grid)
    rows = []
    for item in args.curves:
        name, sep, src = item.partition("=")
        if not sep or ":" in name or "/" in name:
            name, src = "", item
        if src.startswith("oracle:"):
            _, family, *rest = src.split(":", 2)
            oracle = oracle_by_name(family, **(parse_params(rest[0].split(",")) if rest and rest[0] else {}))
            name = name or family
            for t in th:
                lo, hi = oracle.band(t)
                rows.append((name, t, oracle.eval(t)))
                if not oracle.is_exact(t):
                    rows.append((f"{name}_lower", t, lo))
                    if math.isfinite(hi):
                        rows.append((f"{name}_upper", t, hi))
        else:
            c_th, est, ci, _ = read_spectrum_csv(src)
            name = name or Path(src).stem
            for t, v, h in zip(c_th, est, ci):
                rows += [(name, t, v), (f"{name}_lower", t, max(v - h, 0.0)), (f"{name}_upper", t, v + h)]
    print(write_csv(_out(args) / "plotdata.csv", PLOT_HEADER, rows))
    return EXIT_OK


# ----------------------------------------------------------------------------
# parser


def _common(p, measure: bool = True, optional: bool = False):
    if measure:
        p.add_argument("measure", nargs="?" if optional else None, help="YAML measure descriptor")
    p.add_argument("--grid-shells", type=int, default=None, help="number J of dyadic shells")
    p.add_argument("--theta-grid", default=None, help="comma list or start:stop:step")
    p.add_argument("--as-set", action="store_true", help="clip estimates to [0, d] (set spectrum)")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--cache", nargs="?", const=True, default=None,
                   help="reuse transform samples; optional directory (default $FSPEC_CACHE_DIR)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fspec", description="Fourier spectrum estimation and oracles.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="evaluate the Fourier transform")
    _common(p)
    p.add_argument("--at", action="append", help="frequency as comma-separated coordinates")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("energy", help="energy table on the shell grid")
    _common(p)
    p.add_argument("--s", type=float, action="append", default=None, help="energy exponent(s)")
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("spectrum", help="estimate the Fourier spectrum")
    _common(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("oracle", help="closed-form spectrum")
    _common(p, measure=False)
    p.add_argument("family")
    p.add_argument("--param", action="append", help="key=value")
    p.set_defaults(func=cmd_oracle, out=None)

    p = sub.add_parser("compare", help="estimate and compare against an oracle")
    _common(p, optional=True)
    p.add_argument("--oracle", required=True)
    p.add_argument("--param", action="append", help="key=value")
    p.add_argument("--spectrum", help="existing spectrum CSV instead of a new estimate")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("convolve", help="spectrum of k-fold convolutions")
    _common(p, measure=False)
    p.add_argument("curve", help="spectrum CSV, oracle:FAMILY:k=v,... or linear:C")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--with", dest="with_curve", help="second curve for the mixed lower bound")
    p.set_defaults(func=cmd_convolve)

    p = sub.add_parser("sumset", help="sumset bounds from a spectrum curve")
    _common(p, measure=False)
    p.add_argument("curve")
    p.add_argument("--dimh-y", type=float, required=True)
    p.add_argument("--d", type=int, required=True)
    p.set_defaults(func=cmd_sumset)

    p = sub.add_parser("distance", help="distance-set criteria")
    _common(p, measure=False)
    p.add_argument("curve", nargs="?")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--measure", help="descriptor for the fourth-moment check")
    p.add_argument("--delta", type=float, default=0.1)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("plotdata", help="long-format plot data")
    _common(p, measure=False)
    p.add_argument("curves", nargs="+", help="[name=]CSV or [name=]oracle:FAMILY:k=v,...")
    p.set_defaults(func=cmd_plotdata)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "s", None) is None and args.command == "energy":
        args.s = [0.5]
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command in ("convolve", "sumset", "distance") and args.tol == DEFAULT_TOL:
        args.tol = None  # curve-derived tolerance
    try:
        return args.func(args)
    except (MeasureError, OSError) as exc:
        print(f"fspec: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
