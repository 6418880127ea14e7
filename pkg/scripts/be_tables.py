"""Beryllium energy and correlation-percentage tables for A1..A7.

    python scripts/be_tables.py [FCIDUMP] [--sizes 5 6 9] [--json out.json]
"""
import argparse
from pathlib import Path

from ccdownfold.bench import RunConfig, run_pipeline
from ccdownfold.variants import VARIANTS

DEFAULT = Path(__file__).resolve().parents[1] / "tests" / "data" / "be_ccpvdz.fcidump"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("fcidump", nargs="?", default=str(DEFAULT))
    ap.add_argument("--sizes", type=int, nargs="+", default=[5, 6, 9])
    ap.add_argument("--json", default=None)
    args = ap.parse_args()

    rep = run_pipeline(RunConfig(args.fcidump, active=list(args.sizes), variants=VARIANTS))
    print(rep.to_text())
    if rep.e_fci is not None:
        print("% correlation energy (signed share / 1 - |error| share)")
        print("%-6s" % "" + "".join("%18d" % s for s in args.sizes))
        for v in VARIANTS:
            cells = []
            for s in args.sizes:
                (r,) = [r for r in rep.rows if r["variant"] == v and r["active_size"] == s]
                cells.append("%8.1f /%7.1f" % (r["correlation_percent"], r["accuracy_percent"]))
            print("%-6s" % v + "".join("%18s" % c for c in cells))
    print("total %.1f s" % rep.timings["total"])
    if args.json:
        Path(args.json).write_text(rep.to_json())


if __name__ == "__main__":
    main()
