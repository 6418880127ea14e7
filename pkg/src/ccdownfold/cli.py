"""Command line: ``ccdownfold run ...`` and ``ccdownfold sweep ...``.

Exit codes: 0 success, 2 convergence failure, 3 input error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .bench import RunConfig, load_config, parse_active, rows_to_csv, run_pipeline, sweep_geometries
from .casci import DavidsonOptions
from .ccsd import CcsdOptions
from .errors import ConvergenceError, DownfoldError

EXIT_OK, EXIT_CONVERGENCE, EXIT_INPUT = 0, 2, 3


def _common(p):
    p.add_argument("--orbitals", choices=("rhf", "mp2no"), default=None)
    p.add_argument("--active", action="append", type=parse_active, metavar="N|i,j,k",
                   help="active-space size or explicit 0-based orbital list (repeatable)")
    p.add_argument("--variants", default=None, help="comma-separated subset of A1..A7")
    p.add_argument("--nelec", type=int, default=None)
    p.add_argument("--reference-energy", type=float, default=None)
    p.add_argument("--full-ci", dest="full_ci", action="store_true", default=None,
                   help="always compute the full-space CI reference")
    p.add_argument("--no-full-ci", dest="full_ci", action="store_false")
    p.add_argument("--keep-going", action="store_true", default=None)
    p.add_argument("--ccsd-r-tol", type=float, default=None)
    p.add_argument("--davidson-tol", type=float, default=None)
    p.add_argument("--nroots", type=int, default=None)
    p.add_argument("--format", choices=("json", "csv", "text"), default=None,
                   help="output format (default: from the --out suffix, else text)")
    p.add_argument("--out", default=None)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    ap = argparse.ArgumentParser(prog="ccdownfold", description="CC downfolding driver")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="one fixture, grid of active spaces x variants")
    run.add_argument("--fcidump", default=None)
    run.add_argument("--config", default=None, help="plain-text key = value file")
    run.add_argument("--export-heff", default=None, metavar="DIR")
    _common(run)
    sw = sub.add_parser("sweep", help="one fixture per geometry; CSV rows for PES plots")
    sw.add_argument("fcidumps", nargs="*")
    _common(sw)
    return ap


def _config(args, fcidump, base: RunConfig | None = None) -> RunConfig:
    cfg = base or RunConfig(fcidump)
    if fcidump:
        cfg.fcidump_path = fcidump
    if args.orbitals:
        cfg.orbital_mode = args.orbitals
    if args.active:
        cfg.active = list(args.active)
    if args.variants:
        cfg.variants = tuple(v.strip() for v in args.variants.split(",") if v.strip())
    for key in ("nelec", "reference_energy", "full_ci", "keep_going"):
        val = getattr(args, key)
        if val is not None:
            setattr(cfg, {"nelec": "n_electrons"}.get(key, key), val)
    if args.ccsd_r_tol is not None:
        cfg.ccsd = CcsdOptions(**{**vars(cfg.ccsd), "r_tol": args.ccsd_r_tol})
    if args.davidson_tol is not None or args.nroots is not None:
        d = vars(cfg.davidson).copy()
        if args.davidson_tol is not None:
            d["tol"] = args.davidson_tol
        if args.nroots is not None:
            d["nroots"] = args.nroots
        cfg.davidson = DavidsonOptions(**d)
    if getattr(args, "export_heff", None):
        cfg.export_dir = args.export_heff
    return cfg.validate()


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _fmt(args):
    if args.format:
        return args.format
    suffix = Path(args.out).suffix.lower() if args.out else ""
    return {".json": "json", ".csv": "csv"}.get(suffix, "text")


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            base = load_config(args.config) if args.config else None
            if base is None and not args.fcidump:
                raise DownfoldError("run needs --fcidump or --config")
            cfg = _config(args, args.fcidump, base)
            report = run_pipeline(cfg)
            fmt = _fmt(args)
            _emit({"json": lambda: report.to_json(canonical=True) + "\n", "csv": report.to_csv,
                   "text": report.to_text}[fmt](), args.out)
            # with --keep-going, convergence failures are error rows, not a failed run
            return EXIT_OK
        cfgs = [_config(args, f) for f in args.fcidumps]
        _, rows = sweep_geometries(cfgs)
        _emit(rows_to_csv(rows), args.out)
        return EXIT_OK
    except ConvergenceError as exc:
        print("convergence failure: %s" % exc, file=sys.stderr)
        return EXIT_CONVERGENCE
    except (DownfoldError, OSError) as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
