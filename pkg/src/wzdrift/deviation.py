"""First-order deviation from parallel transport on the degenerate subspace.

The transported state's velocity is perpendicular to the instantaneous patch;
transformed into the eigenbasis of the fixed-point linearization, its in-patch
slots vanish and the nonzero-mode slots, divided by the linearization
eigenvalues and scaled by the drive speed, give the averaged offset of the
oscillating deviation.  An independent sum-over-states response formula
cross-checks the whole pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    AdiabaticityLost,
    DefectiveMatrix,
    DimensionMismatch,
    GapClosure,
    PoorFit,
    SingularNZBlock,
)
from .hilbert import (
    DegenerateFrame,
    ParamHamiltonian,
    _as_amplitudes,
    spectral_decompose,
)
from .phasespace import GammaSpectrum
from .transport import Trajectory, WZTrajectory

TANGENT_STEP = 1e-5
MIN_GAP = 1e-6


@dataclass(frozen=True)
class TransformedVector:
    """A phase-space vector expressed in the eigenbasis of a Gamma matrix,
    zero-mode slots first."""

    components: np.ndarray
    reference: GammaSpectrum

    @property
    def in_patch(self) -> np.ndarray:
        return self.components[:self.reference.n_zero]

    @property
    def nz(self) -> np.ndarray:
        return self.components[self.reference.n_zero:]


@dataclass(frozen=True)
class DeviationVector:
    """First-order deviation: identically zero in-patch block, nonzero-mode
    block, and the wavefunction-space displacement it maps to."""

    in_patch: np.ndarray
    nz: np.ndarray
    as_state: np.ndarray
    reference: GammaSpectrum
    imag_residue: float = 0.0

    def displacement_for(self, psi) -> np.ndarray:
        """The displacement rotated to the global phase of ``psi`` (the chart
        works in a pivot-real gauge)."""
        amps = _as_amplitudes(psi)
        pivot = self.reference.chart.pivot
        return self.as_state * np.exp(1j * np.angle(amps[pivot]))


@dataclass(frozen=True)
class DeviationTrace:
    """Per-sample deviation record of one scenario run."""

    times: np.ndarray
    r_values: np.ndarray
    d_perp: np.ndarray
    d_par: np.ndarray
    norm_err: np.ndarray
    predicted_offset: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.times.size
        for name in ("r_values", "d_perp", "d_par", "norm_err", "predicted_offset"):
            if getattr(self, name).size != n:
                raise DimensionMismatch(f"{name} length != times length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")


def transported_state_derivative(hdef: ParamHamiltonian, r: float, psi,
                                 hr: float = TANGENT_STEP) -> np.ndarray:
    """d/dR of the parallel continuation of an on-patch state.

    Project-and-renormalize onto the degenerate cluster at R +- hr is the
    parallel transport of the ray to first order, so the central difference
    converges at O(hr^2) to the transported state's velocity, which is
    perpendicular to the patch.
    """
    amps = _as_amplitudes(psi)

    def continued(r_probe: float) -> np.ndarray:
        h = hdef.eval(r_probe)
        dec = spectral_decompose(h, hdef.deg_energy, hdef.cluster_tol(h),
                                 hdef.deg_multiplicity)
        v = dec.eigenvectors[:, dec.degenerate_cluster]
        proj = v @ (v.conj().T @ amps)
        return proj / np.linalg.norm(proj)

    return (continued(r + hr) - continued(r - hr)) / (2.0 * hr)


def wz_tangent_transformed(spectrum: GammaSpectrum, wz: WZTrajectory, r: float,
                           hr: float = TANGENT_STEP) -> TransformedVector:
    """Transported-trajectory velocity in the linearization eigenbasis.

    The trajectory state at R is parallel-continued to R +- hr, the central
    difference is mapped through the chart differential at the expansion
    point, and U is applied at fixed R.  The in-patch slots of the result
    vanish up to differencing error.
    """
    if spectrum.chart is None:
        raise ValueError("spectrum carries no chart; build it with patch_linearization")
    idx = wz.index_of_r(r)
    psi = wz.states[idx]
    dpsi = transported_state_derivative(wz.hdef, r, psi, hr)
    dxi = spectrum.chart.differential(psi, dpsi)
    return TransformedVector(spectrum.transform @ dxi, spectrum)


def first_order_offset(spectrum: GammaSpectrum, tangent: TransformedVector,
                       v: float) -> DeviationVector:
    """Averaged first-order deviation for drive speed v.

    The nonzero-mode block is the inverse diagonal linearization applied to
    the nonzero-mode tangent components times v; the in-patch block is set to
    exactly zero; the result is transformed back and mapped to a wavefunction
    displacement at the expansion point.
    """
    if tangent.reference is not spectrum:
        raise ValueError("tangent was computed against a different spectrum")
    if spectrum.chart is None:
        raise ValueError("spectrum carries no chart; build it with patch_linearization")
    d_nz = spectrum.nz_eigenvalues
    # guard against a mis-specified zero_tol smuggling numerical zero modes
    # into the inverted block
    floor = max(spectrum.zero_tol, 1e-6 * np.abs(spectrum.eigenvalues).max())
    if np.any(np.abs(d_nz) <= floor):
        raise SingularNZBlock(
            f"nonzero-mode eigenvalue below tolerance {floor:.3e}; "
            "degeneracy bookkeeping failed")
    n_zero = spectrum.n_zero
    delta = np.zeros(spectrum.eigenvalues.size, dtype=complex)
    delta[n_zero:] = tangent.nz / d_nz * v
    dxi_c = spectrum.inverse_transform @ delta
    scale = np.abs(dxi_c.real).max()
    residue = float(np.abs(dxi_c.imag).max() / scale) if scale > 0 else 0.0
    if residue > 1e-6:
        raise DefectiveMatrix(
            f"back-transformed deviation has imaginary residue {residue:.3e}; "
            "conjugate eigenvalue pairing is broken")
    dpsi = spectrum.chart.displacement(dxi_c.real)
    return DeviationVector(delta[:n_zero].real, delta[n_zero:], dpsi,
                           spectrum, residue)


def spectral_first_order_offset(hdef: ParamHamiltonian, r: float,
                                frame: DegenerateFrame, wz_state, v: float,
                                hr: float = TANGENT_STEP) -> np.ndarray:
    """Independent oracle: sum-over-states first-order adiabatic response
    computed entirely in the quantum representation.

    delta_psi = i v sum_{m not in cluster} |m> <m|d_R psi> / (E_m - E_deg).
    """
    amps = _as_amplitudes(wz_state)
    if v == 0.0:
        return np.zeros_like(amps)
    h = hdef.eval(r)
    dec = spectral_decompose(h, hdef.deg_energy, hdef.cluster_tol(h),
                             hdef.deg_multiplicity)
    outside = np.setdiff1d(np.arange(hdef.dim), dec.degenerate_cluster)
    gaps = dec.eigenvalues[outside] - hdef.deg_energy
    if np.abs(gaps).min() <= MIN_GAP:
        raise GapClosure(f"nondegenerate gap {np.abs(gaps).min():.3e} <= {MIN_GAP}")
    dpsi = transported_state_derivative(hdef, r, amps, hr)
    vecs = dec.eigenvectors[:, outside]
    weights = 1j * v * (vecs.conj().T @ dpsi) / gaps
    return vecs @ weights


def decompose_deviation(exact: Trajectory, wz: WZTrajectory,
                        frames: Optional[np.ndarray] = None,
                        mode: str = "raw",
                        predicted: Optional[np.ndarray] = None,
                        meta: Optional[dict] = None) -> DeviationTrace:
    """Per-sample deviation split: perpendicular distance to the patch and
    the distance from the patch projection to the transported state."""
    if frames is None:
        frames = wz.frames
    n = exact.times.size
    if wz.times.size != n or np.abs(exact.times - wz.times).max() > 1e-9 * (1 + exact.times[-1]):
        raise DimensionMismatch("exact and transported trajectories are on different grids")
    psis = exact.states
    coeff = np.einsum("bnk,bn->bk", frames.conj(), psis)
    in_patch = np.einsum("bnk,bk->bn", frames, coeff)
    weight = np.linalg.norm(in_patch, axis=1)
    if weight.min() < 0.5:
        raise AdiabaticityLost(
            f"patch overlap dropped to {weight.min():.3f}; state left the patch")
    d_perp = np.linalg.norm(psis - in_patch, axis=1)
    proj = in_patch / weight[:, None]
    if mode == "raw":
        d_par = np.linalg.norm(proj - wz.states, axis=1)
    elif mode == "phase_aligned":
        ov = np.einsum("bn,bn->b", proj.conj(), wz.states)
        mag = np.abs(ov)
        phase = np.where(mag > 0, np.conj(ov) / np.where(mag > 0, mag, 1.0), 1.0)
        d_par = np.linalg.norm(proj - phase[:, None] * wz.states, axis=1)
    else:
        raise ValueError(f"unknown distance mode {mode!r}")
    norm_err = np.abs(np.linalg.norm(psis, axis=1) - 1.0)
    if predicted is None:
        predicted = np.zeros(n)
    return DeviationTrace(exact.times.copy(), exact.r_values.copy(),
                          d_perp, d_par, norm_err, np.asarray(predicted, dtype=float),
                          dict(meta or {}))


def trace_statistic(trace: DeviationTrace, statistic: str) -> float:
    """Summary statistic of one trace.

    mean_perp averages d_perp over the second half of an on-patch-start run
    (the oscillation needs a transient to establish) and over the full run
    otherwise; max_par is the run maximum of d_par.
    """
    if statistic == "mean_perp":
        lo = trace.times.size // 2 if trace.meta.get("scenario") == "on_patch_start" else 0
        return float(trace.d_perp[lo:].mean())
    if statistic == "max_par":
        return float(trace.d_par.max())
    raise ValueError(f"unknown statistic {statistic!r}")


def scaling_exponent(traces: Sequence[DeviationTrace], statistic: str) -> tuple[float, float]:
    """Least-squares slope of log(statistic) against log(velocity).

    Raises PoorFit when the velocity spread is too small to anchor the fit or
    when r^2 < 0.95 (noise-dominated statistic).
    """
    if len(traces) < 3:
        raise PoorFit(f"need at least 3 velocities, got {len(traces)}")
    vels = np.array([t.meta["velocity"] for t in traces], dtype=float)
    if np.any(vels <= 0):
        raise PoorFit("scaling fit needs positive velocities")
    if vels.max() / vels.min() < 5.0:
        raise PoorFit(
            f"velocity spread {vels.max() / vels.min():.2f}x too small; "
            "span several octaves for a stable exponent")
    stats = np.array([trace_statistic(t, statistic) for t in traces])
    if np.any(stats <= 0):
        raise PoorFit("statistic vanished on some run; enlarge the scan interval")
    x = np.log(vels)
    y = np.log(stats)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        raise PoorFit("statistic does not vary across velocities")
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot
    if r2 < 0.95:
        raise PoorFit(f"r^2 = {r2:.3f} < 0.95; statistic is noise-dominated, "
                      "extend the scan interval")
    return float(slope), r2


def dominant_frequency(times: np.ndarray, signal: np.ndarray,
                       min_omega: float = 0.1) -> float:
    """Angular frequency of the periodogram peak of a uniformly sampled
    signal (Hann window, mean removed, low-frequency bins excluded)."""
    times = np.asarray(times, dtype=float)
    signal = np.asarray(signal, dtype=float)
    dt = times[1] - times[0]
    x = (signal - signal.mean()) * np.hanning(signal.size)
    power = np.abs(np.fft.rfft(x)) ** 2
    omega = 2.0 * np.pi * np.fft.rfftfreq(signal.size, d=dt)
    valid = omega >= min_omega
    if not np.any(valid):
        raise ValueError("signal too short to resolve the requested band")
    return float(omega[valid][np.argmax(power[valid])])
