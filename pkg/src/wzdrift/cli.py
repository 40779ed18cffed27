"""Command-line harness: ``wzdrift run <config>`` executes one scenario,
``wzdrift sweep <config>`` runs the velocity sweep with scaling fits.

Exit codes: 0 success, 2 config error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .config import parse_config
from .errors import ConfigError, NumericalError
from .runner import run_scenario, run_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wzdrift",
        description="Deviation of exact quantum evolution from parallel "
                    "transport on a degenerate level, per scenario run or "
                    "velocity sweep.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "execute one scenario and write its trace CSV"),
                            ("sweep", "run every sweep velocity and fit scaling slopes")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="path to the config file")
        p.add_argument("--out-dir", help="override the [run] out_dir")
        p.add_argument("--dt", type=float, help="override the [run] dt")
        p.add_argument("--velocity", type=float, help="override the [protocol] velocity")
        if name == "run":
            p.add_argument("--emit-gamma", action="store_true",
                           help="also dump the linearization matrix and its "
                                "spectrum at the protocol start")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        text = open(args.config, encoding="utf-8").read()
    except OSError as exc:
        print(f"error: ConfigError: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(text)
        if args.dt is not None or args.velocity is not None:
            overrides = {}
            if args.dt is not None:
                overrides["dt"] = args.dt
            if args.velocity is not None:
                overrides["velocity"] = args.velocity
            cfg = replace(cfg, **overrides)
    except ConfigError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "run":
            _, summary = run_scenario(cfg, out_dir=args.out_dir,
                                      emit_gamma=args.emit_gamma)
            print(f"mean_d_perp={summary['mean_d_perp']:.8e} "
                  f"max_d_par={summary['max_d_par']:.8e} "
                  f"predicted_offset={summary['predicted_offset']:.8e} "
                  f"trace={summary['trace_path']}")
        else:
            result = run_sweep(cfg, out_dir=args.out_dir)
            print(f"slope_mean_perp={result['slope_mean_perp']:.4f} "
                  f"(r2={result['r2_mean_perp']:.4f}) "
                  f"slope_max_par={result['slope_max_par']:.4f} "
                  f"(r2={result['r2_max_par']:.4f}) "
                  f"summary={result['summary_path']}")
    except ConfigError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
