"""Command-line front end.

Exit codes: 0 success, 1 numerical failure, 2 configuration or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__, pipeline, report
from .config import PRESETS, ConfigError, dumps, resolve
from .lyapunov import InsufficientData, certify
from .moments import PhysicalityError
from .reconstruct import EmbeddedOrbit, EmbeddingError, EmbeddingParams, embed
from .simcore import DriveRangeError, IntegrationError

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG = 0, 1, 2

NUMERIC_ERRORS = (IntegrationError, PhysicalityError, InsufficientData, DriveRangeError,
                  FloatingPointError, ArithmeticError)


class InputError(ValueError):
    pass


def _fit(text: Optional[str]):
    if text is None:
        return None
    try:
        lo, hi = (int(v) for v in text.split(":"))
    except ValueError:
        raise InputError(f"--fit: expected START:END, got {text!r}") from None
    return lo, hi


def _embedding(args) -> EmbeddingParams:
    try:
        return EmbeddingParams(args.tau, args.m)
    except ValueError as exc:
        raise InputError(f"--tau/--m: {exc}") from None


def _read_series(path):
    try:
        return report.read_series_csv(path)
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from None
    except ValueError as exc:
        raise InputError(str(exc)) from None


def cmd_run(args) -> int:
    cfg = resolve(args.config)
    out = Path(args.out or Path("runs") / cfg.name)
    res = pipeline.run(cfg)
    head = report.provenance(cfg)
    report.write_series_csv(out / "series.csv", res.series, head)
    report.write_orbit_csv(out / "orbit.csv", res.orbit, head)
    report.write_verdict_json(out / "verdict.json", res.verdict, head, res.diagnostics)
    if not args.no_figures:
        if res.orbit.m == 4:
            report.render_orbit_svg(out / "orbit.svg", res.orbit, head)
        report.render_divergence(out / "divergence.svg", res.verdict.estimate, head)
    e = res.verdict.estimate
    print(f"{cfg.name}: {res.verdict.verdict} (exponent {e.exponent:.4g} +/- {e.stderr:.2g} /ns, "
          f"r2 {e.r2:.3f}); wrote {out}")
    if res.diagnostics.get("tau_snap_ns"):
        print(f"note: tau snapped by {res.diagnostics['tau_snap_ns']:.3g} ns to the sample grid")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = resolve(args.config)
    path = cfg.find(args.param)
    grid = pipeline.parse_grid(args.grid)
    rows = pipeline.sweep(cfg, path, grid, workers=args.workers)
    out = Path(args.out or Path("runs") / f"{cfg.name}-sweep")
    head = report.provenance(cfg, [f"sweep {path} over {args.grid}"])
    report.write_sweep_csv(out / "sweep.csv", path, rows, head)
    if not args.no_figures:
        report.render_sweep(out / "sweep.svg", path, rows, head)
    for r in rows:
        print(f"{r.value:<12.6g} {r.exponent:>12.4g} {r.verdict}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_embed(args) -> int:
    series = _read_series(args.series)
    orbit = embed(series, _embedding(args), snap=True)
    head = report.provenance(extra=[f"source {args.series}", f"tau_ns {orbit.tau!r}", f"m {orbit.m}"])
    out = args.output or Path(args.series).with_name("orbit.csv")
    report.write_orbit_csv(out, orbit, head)
    print(f"{len(orbit)} points (lag {orbit.lag} samples); wrote {out}")
    return EXIT_OK


def cmd_lle(args) -> int:
    series = _read_series(args.series)
    kw = {"snap": True, "fit": _fit(args.fit)}
    if args.theiler is not None:
        kw["theiler"] = args.theiler
    if args.horizon is not None:
        kw["horizon"] = args.horizon
    verdict = certify(series, _embedding(args), **kw)
    rec = verdict.as_dict()
    if args.output:
        head = report.provenance(extra=[f"source {args.series}", f"tau_ns {args.tau!r}", f"m {args.m}"])
        report.write_verdict_json(args.output, verdict, head)
    print(json.dumps({k: report._clean(v) for k, v in rec.items()}, sort_keys=True))
    return EXIT_OK


def cmd_export(args) -> int:
    src = Path(args.input)
    try:
        with open(src) as fh:
            first = next((ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")), "")
    except OSError as exc:
        raise InputError(f"{src}: cannot read ({exc.strerror})") from None
    if first.startswith("t_ns"):
        if args.tau is None:
            raise InputError("--tau is required to export a series")
        orbit = embed(_read_series(src), _embedding(args), snap=True)
    else:
        try:
            pts = report.read_orbit_csv(src, args.m)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        if len(pts) == 0:
            raise report.EmptyInput(f"{src}: empty orbit")
        orbit = EmbeddedOrbit(pts, 1, float("nan"), float("nan"), 0.0, 1.0)
    head = report.provenance(extra=[f"source {src}"])
    suffix = ".svg" if args.format == "svg" else ".csv"
    out = Path(args.output) if args.output else src.with_name(src.stem + "-orbit" + suffix)
    if args.format == "svg":
        report.render_orbit_svg(out, orbit, head)
    else:
        report.write_orbit_csv(out, orbit, head)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_echo(args) -> int:
    sys.stdout.write(dumps(resolve(args.config)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="optochaos", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"optochaos {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def emb(sp, tau_required=True):
        sp.add_argument("--tau", type=float, required=tau_required, help="delay in ns")
        sp.add_argument("--m", type=int, default=4, help="embedding dimension (default 4)")

    r = sub.add_parser("run", help="simulate, embed and certify one scenario")
    r.add_argument("config", help=f"scenario file or preset ({', '.join(PRESETS)})")
    r.add_argument("--out", help="output directory (default runs/<name>)")
    r.add_argument("--no-figures", action="store_true", help="skip the SVG figures")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="repeat a scenario over a parameter grid")
    s.add_argument("config")
    s.add_argument("--param", required=True, help="parameter name, e.g. Gamma_q or quantum.Gamma_q")
    s.add_argument("--grid", required=True, help="a,b,c or log:lo:hi:n")
    s.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    s.add_argument("--out", help="output directory (default runs/<name>-sweep)")
    s.add_argument("--no-figures", action="store_true")
    s.set_defaults(func=cmd_sweep)

    e = sub.add_parser("embed", help="delay-embed a series CSV")
    e.add_argument("series")
    emb(e)
    e.add_argument("-o", "--output")
    e.set_defaults(func=cmd_embed)

    l_ = sub.add_parser("lle", help="largest Lyapunov exponent and verdict of a series CSV")
    l_.add_argument("series")
    emb(l_)
    l_.add_argument("--theiler", type=int, help="temporal exclusion in samples")
    l_.add_argument("--horizon", type=int, help="divergence curve length in samples")
    l_.add_argument("--fit", help="fit range START:END in curve samples")
    l_.add_argument("-o", "--output", help="also write a verdict JSON")
    l_.set_defaults(func=cmd_lle)

    x = sub.add_parser("export", help="write an orbit as CSV or an SVG projection")
    x.add_argument("input", help="orbit CSV, or series CSV together with --tau")
    x.add_argument("--format", choices=("csv", "svg"), required=True)
    emb(x, tau_required=False)
    x.add_argument("-o", "--output")
    x.set_defaults(func=cmd_export)

    c = sub.add_parser("echo", help="print the resolved scenario")
    c.add_argument("config")
    c.set_defaults(func=cmd_echo)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InputError, report.EmptyInput) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except EmbeddingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
