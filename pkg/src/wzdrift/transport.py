"""Time evolution engines: exact fixed-step integration of the Schrodinger
equation along a linear parameter scan, and parallel (Wilczek-Zee) transport
of a coefficient vector over the gauge-continued degenerate frames."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from . import _kernels
from .errors import (
    DegeneracyCountMismatch,
    DimensionMismatch,
    FrameContinuityLoss,
    StepTooLarge,
)
from .hilbert import (
    DegenerateFrame,
    ParamHamiltonian,
    _as_amplitudes,
    continue_frame,
    degenerate_frame,
)

NORM_DRIFT_LIMIT = 1e-8
MAX_DT_HNORM = 0.05
CONNECTION_STEP = 1e-5

FrameField = Callable[[float], DegenerateFrame]


@dataclass(frozen=True)
class Protocol:
    """Linear scan R(t) = start + velocity * t of one model coordinate."""

    scan_coordinate: str
    start: float
    velocity: float
    duration: float
    fixed_coordinate_value: float = 0.0

    def __post_init__(self):
        if self.velocity == 0.0:
            raise ValueError("scan velocity must be nonzero")
        if self.duration <= 0.0:
            raise ValueError("scan duration must be positive")

    @classmethod
    def from_range(cls, scan_coordinate: str, start: float, end: float,
                   velocity: float, fixed_coordinate_value: float = 0.0) -> "Protocol":
        duration = (end - start) / velocity
        if duration <= 0.0:
            raise ValueError(
                f"velocity {velocity} cannot reach end {end} from start {start}")
        return cls(scan_coordinate, start, velocity, duration, fixed_coordinate_value)

    @property
    def end(self) -> float:
        return self.start + self.velocity * self.duration

    def r_of_t(self, t):
        return self.start + self.velocity * np.asarray(t)


@dataclass(frozen=True)
class Trajectory:
    """Sampled exact evolution; norm drift is measured, never corrected."""

    times: np.ndarray
    r_values: np.ndarray
    states: np.ndarray
    dt: float
    norm_drift: float


@dataclass(frozen=True)
class WZTrajectory:
    """Parallel-transported evolution on the degenerate subspace: coefficient
    vectors, the gauge-continued frames, and the assembled states."""

    hdef: ParamHamiltonian
    times: np.ndarray
    r_values: np.ndarray
    coefficients: np.ndarray
    frames: np.ndarray
    states: np.ndarray
    connection_asym: float
    norm_drift: float

    def frame_at(self, index: int) -> DegenerateFrame:
        return DegenerateFrame(float(self.r_values[index]), self.frames[index],
                               self.hdef.deg_energy)

    def frame_list(self) -> list[DegenerateFrame]:
        return [self.frame_at(i) for i in range(self.times.size)]

    def index_of_r(self, r: float) -> int:
        idx = int(np.argmin(np.abs(self.r_values - r)))
        if abs(self.r_values[idx] - r) > 1e-9 * (1.0 + abs(r)):
            raise ValueError(f"R={r} is not on the trajectory grid")
        return idx


def _spectral_norm_bound(hdef: ParamHamiltonian, prot: Protocol) -> float:
    probes = [prot.start, prot.start + 0.5 * prot.velocity * prot.duration, prot.end]
    return max(np.abs(np.linalg.eigvalsh(hdef.eval(r))).max() for r in probes)


def _steps_for(prot: Protocol, dt: float, sample_interval: Optional[float]) -> tuple[int, int]:
    if dt <= 0:
        raise ValueError("dt must be positive")
    stride = 1 if sample_interval is None else max(1, int(round(sample_interval / dt)))
    n_steps = max(1, int(round(prot.duration / dt)))
    n_steps = max(stride, int(round(n_steps / stride)) * stride)
    return n_steps, stride


def _rk4_python(hdef: ParamHamiltonian, r0: float, v: float, dt: float,
                n_steps: int, stride: int, psi0: np.ndarray):
    n_samples = n_steps // stride + 1
    out = np.empty((n_samples, hdef.dim), dtype=complex)
    psi = psi0.astype(complex).copy()
    out[0] = psi
    h_next = hdef.eval(r0)
    si = 1
    max_drift = 0.0
    for step in range(n_steps):
        t = step * dt
        h1 = h_next
        h2 = hdef.eval(r0 + v * (t + 0.5 * dt))
        h3 = hdef.eval(r0 + v * (t + dt))
        k1 = -1j * (h1 @ psi)
        k2 = -1j * (h2 @ (psi + 0.5 * dt * k1))
        k3 = -1j * (h2 @ (psi + 0.5 * dt * k2))
        k4 = -1j * (h3 @ (psi + dt * k3))
        psi = psi + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        h_next = h3
        if (step + 1) % stride == 0:
            out[si] = psi
            si += 1
            max_drift = max(max_drift, abs(np.linalg.norm(psi) - 1.0))
    return out, max_drift


def integrate_schrodinger(hdef: ParamHamiltonian, prot: Protocol, psi0,
                          dt: float, sample_interval: Optional[float] = None) -> Trajectory:
    """Classic 4th-order fixed-step integration of i dpsi/dt = H(R(t)) psi.

    The step count is rounded to a whole number of sample strides, so the
    realized duration can differ from the protocol's by up to half a sample
    interval; the returned time grid is authoritative.  Norm drift beyond
    1e-8 raises StepTooLarge instead of being silently renormalized away.
    """
    psi0 = _as_amplitudes(psi0)
    if psi0.size != hdef.dim:
        raise DimensionMismatch(f"state dim {psi0.size} != model dim {hdef.dim}")
    hnorm = _spectral_norm_bound(hdef, prot)
    if dt * hnorm > MAX_DT_HNORM:
        raise StepTooLarge(
            f"dt*||H|| = {dt * hnorm:.3f} > {MAX_DT_HNORM}; reduce dt")
    n_steps, stride = _steps_for(prot, dt, sample_interval)
    if hdef.rk4_kernel is not None:
        states, drift = hdef.rk4_kernel(prot.start, prot.velocity, dt,
                                        n_steps, stride, psi0)
    else:
        states, drift = _rk4_python(hdef, prot.start, prot.velocity, dt,
                                    n_steps, stride, psi0)
    if drift > NORM_DRIFT_LIMIT:
        raise StepTooLarge(
            f"norm drift {drift:.3e} > {NORM_DRIFT_LIMIT}; dt={dt} too coarse "
            "for this scan")
    times = np.arange(states.shape[0]) * (stride * dt)
    return Trajectory(times, prot.r_of_t(times), states, dt, float(drift))


def _cluster_tolerance(hdef: ParamHamiltonian, h_stack: np.ndarray) -> float:
    return 1e-9 * (1.0 + np.abs(h_stack).max())


def cluster_vectors(hdef: ParamHamiltonian, r_values: np.ndarray,
                    chunk: int = 65536) -> np.ndarray:
    """Orthonormal bases of the degenerate cluster at each parameter value,
    shape (len(r_values), n, k); the per-node gauge is arbitrary."""
    r_values = np.asarray(r_values, dtype=float)
    k = hdef.deg_multiplicity
    out = np.empty((r_values.size, hdef.dim, k), dtype=complex)
    for lo in range(0, r_values.size, chunk):
        rs = r_values[lo:lo + chunk]
        h = hdef.matrices(rs)
        herm = np.abs(h - np.conj(np.swapaxes(h, -1, -2))).max()
        if herm > 1e-12:
            raise DimensionMismatch(f"model matrices not Hermitian: {herm:.2e}")
        evals, evecs = np.linalg.eigh(h)
        tol = _cluster_tolerance(hdef, h)
        mask = np.abs(evals - hdef.deg_energy) < tol
        counts = mask.sum(axis=1)
        if not np.all(counts == k):
            bad = rs[counts != k][0]
            raise DegeneracyCountMismatch(
                f"cluster size {counts[counts != k][0]} != {k} at R={bad}")
        first = np.argmax(mask, axis=1)
        cols = first[:, None] + np.arange(k)[None, :]
        out[lo:lo + len(rs)] = np.take_along_axis(evecs, cols[:, None, :], axis=2)
    return out


def _overlaps(va: np.ndarray, vb: np.ndarray) -> np.ndarray:
    """Blocks va^dag vb for stacked (B, n, k) frames."""
    return np.einsum("bni,bnj->bij", va.conj(), vb)


def _initial_frame(hdef: ParamHamiltonian, r0: float,
                   initial_frame: Optional[DegenerateFrame]) -> DegenerateFrame:
    if initial_frame is not None:
        return initial_frame
    if hdef.analytic_frame_field is not None:
        return hdef.analytic_frame_field(r0)
    return degenerate_frame(hdef, r0)


def wz_connection(hdef: ParamHamiltonian, r: float,
                  frame: Union[DegenerateFrame, FrameField],
                  hr: float = CONNECTION_STEP,
                  return_asym: bool = False):
    """Connection matrix A_ab = <D_a| d/dR |D_b> by central differences.

    Given a DegenerateFrame, the probes at R +- hr are gauge-continued from
    it (anchored continuation); given a callable frame field, the field's own
    gauge is differenced.  The result is projected onto its anti-Hermitian
    part; the discarded Hermitian residue is O(hr^2).
    """
    if callable(frame):
        f0 = frame(r)
        fp = frame(r + hr).vectors
        fm = frame(r - hr).vectors
    else:
        f0 = frame
        vv = cluster_vectors(hdef, np.array([r + hr, r - hr]))
        fp = continue_frame(f0, vv[0], r + hr, hdef.deg_energy).vectors
        fm = continue_frame(f0, vv[1], r - hr, hdef.deg_energy).vectors
    raw = f0.vectors.conj().T @ (fp - fm) / (2.0 * hr)
    a = 0.5 * (raw - raw.conj().T)
    asym = float(np.abs(0.5 * (raw + raw.conj().T)).max())
    if return_asym:
        return a, asym
    return a


def _wz_python(hdef, prot, c0, dt, frame_field, hr):
    n = max(1, int(round(prot.duration / dt)))
    times = np.arange(n + 1) * dt
    r_nodes = prot.r_of_t(times)
    h_step = prot.velocity * dt
    frames = np.empty((n + 1, hdef.dim, hdef.deg_multiplicity), dtype=complex)
    cs = np.empty((n + 1, hdef.deg_multiplicity), dtype=complex)
    c = np.asarray(c0, dtype=complex)
    cs[0] = c
    frames[0] = frame_field(r_nodes[0]).vectors
    max_asym = 0.0
    max_drift = 0.0
    a_node, asym = wz_connection(hdef, r_nodes[0], frame_field, hr, return_asym=True)
    max_asym = max(max_asym, asym)
    for j in range(n):
        r_half = r_nodes[j] + 0.5 * h_step
        a_half, asym = wz_connection(hdef, r_half, frame_field, hr, return_asym=True)
        max_asym = max(max_asym, asym)
        a_next, asym = wz_connection(hdef, r_nodes[j + 1], frame_field, hr, return_asym=True)
        max_asym = max(max_asym, asym)
        k1 = -(a_node @ c)
        k2 = -(a_half @ (c + 0.5 * h_step * k1))
        k3 = -(a_half @ (c + 0.5 * h_step * k2))
        k4 = -(a_next @ (c + h_step * k3))
        c = c + (h_step / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        a_node = a_next
        cs[j + 1] = c
        frames[j + 1] = frame_field(r_nodes[j + 1]).vectors
        max_drift = max(max_drift, abs(np.linalg.norm(c) - 1.0))
    return times, r_nodes, cs, frames, max_asym, max_drift


def integrate_wz(hdef: ParamHamiltonian, prot: Protocol, c0, dt: float,
                 frame_field: Optional[FrameField] = None,
                 initial_frame: Optional[DegenerateFrame] = None,
                 hr: float = CONNECTION_STEP) -> WZTrajectory:
    """Parallel transport dc/dR = -A(R) c over the scan, RK4 in R.

    ``dt`` is the node spacing in time; the transport is integrated in R with
    steps velocity*dt, so a trajectory is reusable across velocities up to
    its time labels.  By default frames are gauge-continued by symmetric
    orthonormalization from the initial frame (for models with an analytic
    frame field, that field supplies the initial gauge); passing
    ``frame_field`` transports in that field's gauge instead.  With nonzero
    degenerate energy the assembled states carry the dynamical phase.
    """
    c0 = np.asarray(c0, dtype=complex)
    if c0.size != hdef.deg_multiplicity:
        raise DimensionMismatch(
            f"c0 has {c0.size} components, model degeneracy is {hdef.deg_multiplicity}")
    nrm = np.linalg.norm(c0)
    if abs(nrm - 1.0) > 1e-9:
        raise ValueError(f"|c0| = {nrm:.12f}, need a unit coefficient vector")

    if frame_field is not None:
        times, r_nodes, cs, frames, max_asym, max_drift = _wz_python(
            hdef, prot, c0, dt, frame_field, hr)
    else:
        n = max(1, int(round(prot.duration / dt)))
        times = np.arange(n + 1) * dt
        r_nodes = prot.r_of_t(times)
        r_half = r_nodes[:-1] + 0.5 * prot.velocity * dt
        v_nodes = cluster_vectors(hdef, r_nodes)
        v_half = cluster_vectors(hdef, r_half)
        v_nodes_p = cluster_vectors(hdef, r_nodes + hr)
        v_nodes_m = cluster_vectors(hdef, r_nodes - hr)
        v_half_p = cluster_vectors(hdef, r_half + hr)
        v_half_m = cluster_vectors(hdef, r_half - hr)
        w_adv = _overlaps(v_nodes[1:], v_nodes[:-1])
        w_half = _overlaps(v_half, v_nodes[:-1])
        w_main_p = _overlaps(v_nodes_p, v_nodes)
        w_main_m = _overlaps(v_nodes_m, v_nodes)
        w_half_p = _overlaps(v_half_p, v_half)
        w_half_m = _overlaps(v_half_m, v_half)
        f0 = _initial_frame(hdef, float(r_nodes[0]), initial_frame)
        g0_raw = v_nodes[0].conj().T @ f0.vectors
        g0, smin0 = _kernels._polar(np.ascontiguousarray(g0_raw))
        if smin0 < 0.99:
            raise ValueError(
                "initial frame does not span the degenerate cluster at the start")
        h_steps = np.full(n, prot.velocity * dt)
        g_all, c_all, max_asym, max_drift, smin = _kernels.wz_transport(
            w_adv, w_half, w_main_p, w_main_m, w_half_p, w_half_m,
            g0, c0, h_steps, hr)
        if smin < 0.5:
            raise FrameContinuityLoss(
                f"frame continuation singular value {smin:.3f} < 0.5; "
                "reduce the node spacing")
        frames = np.einsum("bnk,bkl->bnl", v_nodes, g_all)
        cs = c_all

    if max_drift > NORM_DRIFT_LIMIT:
        raise StepTooLarge(f"coefficient norm drift {max_drift:.3e} > {NORM_DRIFT_LIMIT}")
    states = np.einsum("bnk,bk->bn", frames, cs)
    if hdef.deg_energy != 0.0:
        states = states * np.exp(-1j * hdef.deg_energy * times)[:, None]
    return WZTrajectory(hdef, times, r_nodes, cs, frames, states,
                        float(max_asym), float(max_drift))


def wz_step(hdef: ParamHamiltonian, r: float, frame: DegenerateFrame, c,
            dr: float, hr: float = CONNECTION_STEP,
            frame_field: Optional[FrameField] = None) -> tuple[DegenerateFrame, np.ndarray]:
    """One RK4 parallel-transport step of size dr from (frame, c) at R."""
    c = np.asarray(c, dtype=complex)
    if frame_field is not None:
        a_node = wz_connection(hdef, r, frame_field, hr)
        a_half = wz_connection(hdef, r + 0.5 * dr, frame_field, hr)
        a_next = wz_connection(hdef, r + dr, frame_field, hr)
        frame_next = frame_field(r + dr)
    else:
        vv = cluster_vectors(hdef, np.array([r + 0.5 * dr, r + dr]))
        frame_half = continue_frame(frame, vv[0], r + 0.5 * dr, hdef.deg_energy)
        frame_next = continue_frame(frame, vv[1], r + dr, hdef.deg_energy)
        a_node = wz_connection(hdef, r, frame, hr)
        a_half = wz_connection(hdef, r + 0.5 * dr, frame_half, hr)
        a_next = wz_connection(hdef, r + dr, frame_next, hr)
    k1 = -(a_node @ c)
    k2 = -(a_half @ (c + 0.5 * dr * k1))
    k3 = -(a_half @ (c + 0.5 * dr * k2))
    k4 = -(a_next @ (c + dr * k3))
    return frame_next, c + (dr / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


def wz_orthogonality_residual(hdef: ParamHamiltonian, r: float,
                              frame: DegenerateFrame, c, dr: float,
                              hr: float = CONNECTION_STEP,
                              frame_field: Optional[FrameField] = None) -> float:
    """In-patch component of one transport increment, per unit dR.

    The increment of the transported state over a step dR has no first-order
    component on the patch, so the returned residual vanishes linearly in dR.
    """
    c = np.asarray(c, dtype=complex)
    psi0 = frame.vectors @ c
    frame_next, c_next = wz_step(hdef, r, frame, c, dr, hr, frame_field)
    dpsi = frame_next.vectors @ c_next - psi0
    return float(np.abs(frame.vectors.conj().T @ dpsi).max() / abs(dr))
