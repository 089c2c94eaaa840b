"""Command-line runner for convergence studies.

Usage:
  shellgamma run --config <path-or-builtin-name> [--out <path>]
                 [--h-list a,b,c] [--quad-order N]
  shellgamma list-scenarios

Exit codes: 0 all tolerances met, 1 a tolerance failed, 2 configuration or
runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError, ShellGammaError
from .studies import (BUILTIN_SCENARIOS, run_study, validate_config,
                      write_report)

_SCENARIO_NOTES = {
    "plate-gamma": "plate, out-of-plane sine isometry, energy vs limit functional",
    "sphere-gamma": "unit sphere cap, rigid isometry, stretching-only limit",
    "plate-expansion": "stretching/bending expansion orders on the plate",
    "sphere-expansion": "stretching/bending expansion orders on the sphere cap",
    "cylinder-expansion": "stretching/bending expansion orders on the cylinder",
    "q2-isotropic": "tangential relaxation vs closed form and brute force",
    "load-align": "rotation-maximized load action vs random sampling",
}


def _load_config(spec, h_list=None, quad_order=None, out=None):
    if spec in BUILTIN_SCENARIOS:
        doc = json.loads(json.dumps(BUILTIN_SCENARIOS[spec]))
    else:
        try:
            with open(spec, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(
                f"{spec!r} is neither a readable file nor a builtin scenario "
                f"({sorted(BUILTIN_SCENARIOS)})")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {spec}: {exc}")
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    if h_list is not None:
        try:
            doc["h_schedule"] = [float(tok) for tok in h_list.split(",") if tok]
        except ValueError:
            raise ConfigError(f"--h-list must be comma-separated floats, got {h_list!r}")
    if quad_order is not None:
        doc.setdefault("quadrature", {})["surface_order"] = quad_order
    if out is not None:
        doc["output"] = out
    return validate_config(doc)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="shellgamma", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one study from a config")
    run_p.add_argument("--config", required=True,
                       help="path to a JSON study config, or a builtin scenario name")
    run_p.add_argument("--out", default=None, help="override the report CSV path")
    run_p.add_argument("--h-list", default=None,
                       help="comma-separated h values overriding the schedule")
    run_p.add_argument("--quad-order", type=int, default=None,
                       help="override the surface quadrature order")

    sub.add_parser("list-scenarios", help="list builtin scenario names")

    args = parser.parse_args(argv)

    if args.command == "list-scenarios":
        for name in sorted(BUILTIN_SCENARIOS):
            print(f"{name:20s} {_SCENARIO_NOTES.get(name, '')}")
        return 0

    try:
        cfg = _load_config(args.config, h_list=args.h_list,
                           quad_order=args.quad_order, out=args.out)
        report = run_study(cfg)
        csv_path, summary_path = write_report(report, cfg.output)
    except (ShellGammaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    print(f"study: {report.kind}")
    for key in sorted(report.summary):
        print(f"  {key}: {report.summary[key]}")
    print(f"report: {csv_path}")
    print(f"summary: {summary_path}")
    if report.error is not None:
        print(f"error: {report.error}", file=sys.stderr)
        return 2
    print("result: PASS" if report.passed else "result: FAIL")
    return 0 if report.passed else 1


def entrypoint():
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
