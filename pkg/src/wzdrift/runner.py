"""Scenario execution: exact run vs transported reference, deviation trace
CSVs, velocity sweeps with scaling fits."""

from __future__ import annotations

import csv
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np

from .config import RunConfig
from .deviation import (
    DeviationTrace,
    decompose_deviation,
    first_order_offset,
    scaling_exponent,
    trace_statistic,
    wz_tangent_transformed,
)
from .errors import ValidationError
from .hilbert import ParamHamiltonian, StateVector
from .models import get_model
from .phasespace import patch_linearization, to_phase_point
from .transport import Protocol, WZTrajectory, integrate_schrodinger, integrate_wz

TRACE_HEADER = ("t", "R", "d_perp", "d_par", "norm_err", "predicted_offset")
N_PREDICTION_NODES = 17


def build_model(cfg: RunConfig) -> ParamHamiltonian:
    return get_model(cfg.model_name).build(cfg.model_params, cfg.scan)


def build_protocol(cfg: RunConfig) -> Protocol:
    """Protocol with the duration snapped to a whole number of sample
    intervals so the exact and transported grids coincide."""
    duration = cfg.duration
    n_samples = max(1, int(round(duration / cfg.sample_interval)))
    fixed_name = "x" if cfg.scan == "z" else "z"
    return Protocol(cfg.scan, cfg.start, cfg.velocity,
                    n_samples * cfg.sample_interval,
                    cfg.model_params.get(fixed_name, 0.0))


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _atomic_write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_trace_csv(trace: DeviationTrace, path: Path) -> None:
    rows = (
        tuple(_fmt(v) for v in row)
        for row in zip(trace.times, trace.r_values, trace.d_perp, trace.d_par,
                       trace.norm_err, trace.predicted_offset)
    )
    _atomic_write_csv(path, TRACE_HEADER, rows)


def predicted_offsets(hdef: ParamHamiltonian, wz: WZTrajectory, velocity: float,
                      n_nodes: int = N_PREDICTION_NODES) -> np.ndarray:
    """Magnitude of the averaged first-order offset along the run.

    The linearization is refreshed at ``n_nodes`` evenly spaced samples and
    interpolated linearly in between (for translation-covariant models it is
    constant anyway).
    """
    n = wz.times.size
    nodes = np.unique(np.linspace(0, n - 1, min(n_nodes, n)).astype(int))
    mags = np.empty(nodes.size)
    for i, j in enumerate(nodes):
        dev = offset_at_index(hdef, wz, j, velocity)
        mags[i] = np.linalg.norm(dev.as_state)
    return np.interp(np.arange(n), nodes, mags)


def offset_at_index(hdef: ParamHamiltonian, wz: WZTrajectory, index: int,
                    velocity: float):
    """First-order offset prediction at one trajectory sample."""
    r = float(wz.r_values[index])
    pp = to_phase_point(StateVector(wz.states[index]))
    spectrum = patch_linearization(hdef, r, pp)
    tangent = wz_tangent_transformed(spectrum, wz, r)
    return first_order_offset(spectrum, tangent, velocity)


def run_scenario(cfg: RunConfig, out_dir: Optional[str] = None,
                 emit_gamma: bool = False) -> tuple[DeviationTrace, dict]:
    """Execute one scenario run and write its trace CSV.

    Returns the trace and a summary dict (mean d_perp over the statistic
    window, max d_par, the prediction at the start, output path).
    """
    hdef = build_model(cfg)
    prot = build_protocol(cfg)
    c0 = np.asarray(cfg.c0, dtype=complex)
    c0 = c0 / np.linalg.norm(c0)
    wz = integrate_wz(hdef, prot, c0, dt=cfg.sample_interval)
    predicted = predicted_offsets(hdef, wz, cfg.velocity)

    if cfg.scenario == "offset_start":
        dev = offset_at_index(hdef, wz, 0, cfg.velocity)
        psi0 = StateVector(wz.states[0] + dev.displacement_for(wz.states[0]))
    else:
        psi0 = StateVector(wz.states[0])

    exact = integrate_schrodinger(hdef, prot, psi0, cfg.dt,
                                  sample_interval=cfg.sample_interval)
    meta = {
        "model": cfg.model_name,
        "scan": cfg.scan,
        "start": cfg.start,
        "end": prot.end,
        "velocity": cfg.velocity,
        "dt": cfg.dt,
        "sample_interval": cfg.sample_interval,
        "scenario": cfg.scenario,
        "distance_mode": cfg.distance_mode,
    }
    trace = decompose_deviation(exact, wz, mode=cfg.distance_mode,
                                predicted=predicted, meta=meta)

    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    trace_path = out / "trace.csv"
    write_trace_csv(trace, trace_path)
    if emit_gamma:
        _emit_gamma(hdef, wz, out)
    summary = {
        "mean_d_perp": trace_statistic(trace, "mean_perp"),
        "max_d_par": trace_statistic(trace, "max_par"),
        "predicted_offset": float(predicted[0]),
        "norm_drift": exact.norm_drift,
        "trace_path": str(trace_path),
    }
    return trace, summary


def _emit_gamma(hdef: ParamHamiltonian, wz: WZTrajectory, out: Path) -> None:
    pp = to_phase_point(StateVector(wz.states[0]))
    spectrum = patch_linearization(hdef, float(wz.r_values[0]), pp)
    _atomic_write_csv(
        out / "gamma_matrix.csv",
        [f"col{j}" for j in range(spectrum.gamma.shape[1])],
        (tuple(_fmt(v) for v in row) for row in spectrum.gamma),
    )
    _atomic_write_csv(
        out / "gamma_spectrum.csv",
        ("re_d", "im_d", "abs_d", "is_zero_mode"),
        ((_fmt(d.real), _fmt(d.imag), _fmt(abs(d)),
          "1" if i < spectrum.n_zero else "0")
         for i, d in enumerate(spectrum.eigenvalues)),
    )


def _sweep_worker(args) -> tuple[float, DeviationTrace, dict]:
    cfg, out_dir = args
    trace, summary = run_scenario(cfg, out_dir=out_dir)
    return cfg.velocity, trace, summary


def run_sweep(cfg: RunConfig, out_dir: Optional[str] = None) -> dict:
    """One on-patch-start run per sweep velocity, in a worker pool, followed
    by log-log scaling fits of the deviation statistics."""
    if not cfg.velocities:
        raise ValidationError("[sweep] velocities: required for the sweep command")
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    jobs = []
    for v in cfg.velocities:
        sub = replace(cfg, velocity=v, scenario="on_patch_start")
        jobs.append((sub, str(out / f"run_v{v:.6g}")))
    workers = cfg.workers or min(len(jobs), os.cpu_count() or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_worker, jobs))
    else:
        results = [_sweep_worker(job) for job in jobs]

    by_velocity = {v: (trace, summary) for v, trace, summary in results}
    rows = []
    traces = []
    for v in cfg.velocities:
        trace, summary = by_velocity[v]
        traces.append(trace)
        rows.append((_fmt(v), _fmt(summary["mean_d_perp"]), _fmt(summary["max_d_par"])))
    _atomic_write_csv(out / "summary.csv",
                      ("velocity", "mean_d_perp", "max_d_par"), rows)

    slope_perp, r2_perp = scaling_exponent(traces, "mean_perp")
    slope_par, r2_par = scaling_exponent(traces, "max_par")
    _atomic_write_csv(
        out / "scaling.csv",
        ("statistic", "slope", "r_squared"),
        (("mean_perp", _fmt(slope_perp), _fmt(r2_perp)),
         ("max_par", _fmt(slope_par), _fmt(r2_par))),
    )
    return {
        "summary_path": str(out / "summary.csv"),
        "scaling_path": str(out / "scaling.csv"),
        "slope_mean_perp": slope_perp,
        "r2_mean_perp": r2_perp,
        "slope_max_par": slope_par,
        "r2_max_par": r2_par,
    }
