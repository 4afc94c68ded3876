"""Command-line interface.

Subcommands: report, verify-hessians, verify-comparison, index, bounds,
sweep.  Exit status is 0 iff every hard check passed (non-strict runs still
report failures but only --strict turns soft warnings into failures).
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config
from .scenario import run_scenario, sweep, sweep_csv

_SUITE_SETS = {
    "report": None,  # as configured
    "verify-hessians": ("geometry", "hessians"),
    "verify-comparison": ("geometry", "comparison"),
    "index": ("geometry", "spectra"),
    "bounds": ("geometry", "spectra", "bounds"),
}


def _add_common(p):
    p.add_argument("config", help="scenario TOML file")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the seed")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--strict", action="store_true",
                   help="treat soft warnings as failures")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="capstab",
                                 description="capillary cmc stability lab")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in _SUITE_SETS:
        p = sub.add_parser(name)
        _add_common(p)
    p = sub.add_parser("sweep")
    _add_common(p)
    p.add_argument("--axis", required=True, choices=["theta", "h", "grid", "seed"])
    p.add_argument("--values", required=True,
                   help="comma-separated axis values")
    args = ap.parse_args(argv)

    try:
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.strict:
            overrides["strict"] = True
        cfg = load_config(args.config, overrides=overrides or None)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.command == "sweep":
        values = [v for v in args.values.split(",") if v]
        if not values:
            rows = []
        else:
            typed = [float(v) if args.axis in ("theta", "h") else int(v)
                     for v in values]
            rows = sweep(cfg, args.axis, typed, out_dir=args.out,
                         workers=args.workers)
        out = (args.out or cfg.out_dir)
        import pathlib
        pathlib.Path(out).mkdir(parents=True, exist_ok=True)
        path = str(pathlib.Path(out) / f"{cfg.name}_sweep_{args.axis}.csv")
        sweep_csv(rows, path)
        print(f"wrote {path} ({len(rows)} rows)")
        ok = all(r["all_passed"] for r in rows) if rows else True
        return 0 if ok else 1

    if _SUITE_SETS[args.command] is not None:
        import dataclasses
        cfg = dataclasses.replace(cfg, suites=_SUITE_SETS[args.command])
    report = run_scenario(cfg, out_dir=args.out)
    n_fail = sum(1 for c in report["checks"] if not c["passed"])
    for c in report["checks"]:
        status = "PASS" if c["passed"] else "FAIL"
        print(f"[{status}] {c['name']}: value={c['value']:.6g} "
              f"tol={c['tolerance']:.3g} ({c['kind']})")
    print(f"{'OK' if n_fail == 0 else 'FAILED'}: "
          f"{len(report['checks']) - n_fail}/{len(report['checks'])} checks passed; "
          f"report hash {report['provenance']['config_hash']}")
    return 0 if n_fail == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
