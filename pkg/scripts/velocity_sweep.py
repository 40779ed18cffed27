#!/usr/bin/env python3
"""Velocity sweep with scaling fits: one on-patch run per velocity, then
log-log slopes of the deviation statistics.

Example:
    python scripts/velocity_sweep.py --velocities 2.5e-4 5e-4 1e-3 2e-3
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from wzdrift.config import RunConfig
from wzdrift.runner import run_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--velocities", type=float, nargs="+",
                    default=[2.5e-4, 5e-4, 1e-3, 2e-3])
    ap.add_argument("--x", type=float, default=1.0)
    ap.add_argument("--z-end", type=float, default=40.0)
    ap.add_argument("--dt", type=float, default=0.01)
    ap.add_argument("--out", default="runs/sweep_script")
    ap.add_argument("--workers", type=int, default=0)
    args = ap.parse_args()

    cfg = RunConfig(
        model_params={"omega0": 1.0, "k_l": 1.0,
                      "cos_xi": 2.0 ** 0.5 - 1.0, "x": args.x, "z": 0.0},
        end=args.z_end,
        dt=args.dt,
        out_dir=args.out,
        velocities=tuple(args.velocities),
        workers=args.workers,
    )
    result = run_sweep(cfg)
    print(f"slope(mean d_perp) = {result['slope_mean_perp']:.4f} "
          f"(r2 = {result['r2_mean_perp']:.6f})")
    print(f"slope(max d_par)   = {result['slope_max_par']:.4f} "
          f"(r2 = {result['r2_max_par']:.6f})")
    print(f"tables written to  {result['summary_path']} and {result['scaling_path']}")


if __name__ == "__main__":
    main()
