#!/usr/bin/env python3
"""Run one deviation scenario from the command line without a config file.

Example:
    python scripts/deviation_run.py --velocity 1e-3 --z-end 40 --out runs/demo
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from wzdrift.config import RunConfig
from wzdrift.runner import run_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--velocity", type=float, default=1e-3)
    ap.add_argument("--x", type=float, default=1.0)
    ap.add_argument("--z-start", type=float, default=0.0)
    ap.add_argument("--z-end", type=float, default=40.0)
    ap.add_argument("--dt", type=float, default=0.01)
    ap.add_argument("--sample-interval", type=float, default=1.0)
    ap.add_argument("--scenario", choices=("on_patch_start", "offset_start"),
                    default="on_patch_start")
    ap.add_argument("--out", default="runs/script")
    args = ap.parse_args()

    cfg = RunConfig(
        model_params={"omega0": 1.0, "k_l": 1.0,
                      "cos_xi": 2.0 ** 0.5 - 1.0, "x": args.x, "z": 0.0},
        start=args.z_start,
        end=args.z_end,
        velocity=args.velocity,
        dt=args.dt,
        sample_interval=args.sample_interval,
        scenario=args.scenario,
        out_dir=args.out,
    )
    trace, summary = run_scenario(cfg)
    print(f"samples: {trace.times.size}")
    print(f"mean d_perp:      {summary['mean_d_perp']:.6e}")
    print(f"max d_par:        {summary['max_d_par']:.6e}")
    print(f"predicted offset: {summary['predicted_offset']:.6e}")
    print(f"trace written to  {summary['trace_path']}")


if __name__ == "__main__":
    main()
