"""Core quantum objects: states, parametrized Hermitian operators, spectral
decomposition with degeneracy clustering, gauge-continued degenerate frames,
and state distances."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import (
    AdiabaticityLost,
    DegeneracyCountMismatch,
    DimensionMismatch,
    FrameContinuityLoss,
    NotHermitian,
)

HERMITICITY_TOL = 1e-12
EIGEN_RESIDUAL_TOL = 1e-10
MIN_CONTINUATION_SINGULAR_VALUE = 0.5
MIN_PATCH_OVERLAP = 0.5


def _as_amplitudes(psi) -> np.ndarray:
    if isinstance(psi, StateVector):
        return psi.amplitudes
    return np.asarray(psi, dtype=complex)


@dataclass(frozen=True)
class StateVector:
    """Normalized complex amplitude vector in a fixed basis."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size < 2:
            raise DimensionMismatch(f"need dim >= 2, got {amps.size}")
        norm = np.linalg.norm(amps)
        if norm < 1e-12:
            raise ValueError("cannot normalize a zero state")
        amps = amps / norm
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def overlap(self, other: "StateVector") -> complex:
        if other.dim != self.dim:
            raise DimensionMismatch(f"dims {self.dim} != {other.dim}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class ParamHamiltonian:
    """One-parameter family R -> H(R) with a protected degenerate level.

    ``eval`` returns the dense Hermitian matrix at a scalar parameter value.
    ``eval_batch`` (optional) vectorizes over a parameter array and is used by
    the sweep machinery; ``rk4_kernel`` (optional) is a compiled fixed-step
    integrator for long scans, see transport.integrate_schrodinger.
    """

    dim: int
    eval: Callable[[float], np.ndarray]
    deg_energy: float
    deg_multiplicity: int
    name: str = "model"
    eval_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None
    rk4_kernel: Optional[Callable] = None
    analytic_frame_field: Optional[Callable[[float], "DegenerateFrame"]] = None

    def matrices(self, r_values: np.ndarray) -> np.ndarray:
        """H(R) stacked over an array of parameter values."""
        r_values = np.asarray(r_values, dtype=float)
        if self.eval_batch is not None:
            return self.eval_batch(r_values)
        out = np.empty((r_values.size, self.dim, self.dim), dtype=complex)
        for i, r in enumerate(r_values.ravel()):
            out[i] = self.eval(r)
        return out.reshape(r_values.shape + (self.dim, self.dim))

    def cluster_tol(self, h: np.ndarray) -> float:
        # Degeneracy is exact in the supported models; the tolerance only
        # absorbs floating-point noise.
        return 1e-9 * (1.0 + np.abs(h).max())


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    degenerate_cluster: np.ndarray


@dataclass(frozen=True)
class DegenerateFrame:
    """Orthonormal basis of the degenerate subspace at parameter R.

    ``vectors`` has shape (n, k) with frame states as columns.
    """

    r: float
    vectors: np.ndarray
    deg_energy: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=complex)
        v.flags.writeable = False
        object.__setattr__(self, "vectors", v)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def k(self) -> int:
        return self.vectors.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.vectors @ self.vectors.conj().T

    def states(self) -> list[StateVector]:
        return [StateVector(self.vectors[:, a]) for a in range(self.k)]

    def coefficients(self, psi) -> np.ndarray:
        """Components of psi on the frame states."""
        return self.vectors.conj().T @ _as_amplitudes(psi)

    def assemble(self, c: np.ndarray) -> StateVector:
        return StateVector(self.vectors @ np.asarray(c, dtype=complex))


def check_hermitian(h: np.ndarray, tol: float = HERMITICITY_TOL) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    dev = np.abs(h - h.conj().T).max()
    if dev > tol:
        raise NotHermitian(f"max |H - H^dag| = {dev:.3e} > {tol:.0e}")
    return h


def spectral_decompose(h: np.ndarray, deg_energy: float, cluster_tol: float,
                       deg_multiplicity: Optional[int] = None) -> EigenDecomposition:
    """Full eigensystem of a Hermitian matrix with degeneracy clustering.

    The degenerate cluster collects the eigenvalue indices within
    ``cluster_tol`` of ``deg_energy``; if ``deg_multiplicity`` is given the
    cluster size is enforced.
    """
    h = check_hermitian(h)
    evals, evecs = np.linalg.eigh(h)
    cluster = np.flatnonzero(np.abs(evals - deg_energy) < cluster_tol)
    if deg_multiplicity is not None and cluster.size != deg_multiplicity:
        raise DegeneracyCountMismatch(
            f"found {cluster.size} levels within {cluster_tol:.1e} of "
            f"E={deg_energy}, expected {deg_multiplicity}")
    residual = np.abs(h @ evecs - evecs * evals).max()
    if residual > EIGEN_RESIDUAL_TOL:
        raise NotHermitian(f"eigen residual {residual:.3e} too large")
    return EigenDecomposition(evals, evecs, cluster)


def lowdin(m: np.ndarray, min_singular: float = MIN_CONTINUATION_SINGULAR_VALUE) -> np.ndarray:
    """Symmetric (polar-factor) orthonormalization of the columns of m."""
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    if s.min() < min_singular:
        raise FrameContinuityLoss(
            f"projected frame nearly singular (smin={s.min():.3f}); "
            "continuation step too large")
    return u @ vh


def degenerate_frame(hdef: ParamHamiltonian, r: float,
                     prev: Optional[DegenerateFrame] = None) -> DegenerateFrame:
    """Orthonormal frame of the degenerate cluster at R.

    With ``prev`` the gauge is continued: the new frame is the symmetric
    orthonormalization of the projected previous frame, which makes the
    overlap matrix with ``prev`` Hermitian positive (smoothest gauge per
    step). Without ``prev`` the raw eigenvector gauge is returned.
    """
    h = hdef.eval(r)
    dec = spectral_decompose(h, hdef.deg_energy, hdef.cluster_tol(h),
                             hdef.deg_multiplicity)
    v = dec.eigenvectors[:, dec.degenerate_cluster]
    if prev is None:
        return DegenerateFrame(r, v, hdef.deg_energy)
    if prev.dim != hdef.dim or prev.k != hdef.deg_multiplicity:
        raise DimensionMismatch("previous frame has incompatible shape")
    # project prev onto the new cluster span, then orthonormalize
    vectors = v @ lowdin(v.conj().T @ prev.vectors)
    return DegenerateFrame(r, vectors, hdef.deg_energy)


def continue_frame(frame: DegenerateFrame, cluster_vectors: np.ndarray,
                   r: float, deg_energy: float = 0.0) -> DegenerateFrame:
    """Gauge-continue ``frame`` into the span of ``cluster_vectors`` (n x k)."""
    vectors = cluster_vectors @ lowdin(cluster_vectors.conj().T @ frame.vectors)
    return DegenerateFrame(r, vectors, deg_energy)


def distance(psi1, psi2, mode: str = "raw") -> float:
    """Distance between two states.

    raw mode is the literal 2-norm of the amplitude difference (global-phase
    sensitive); phase_aligned minimizes over a global phase, equal to
    sqrt(2 - 2|<psi1|psi2>|) but evaluated as a vector difference at the
    optimal phase so that nearby states do not lose precision.
    """
    a1 = _as_amplitudes(psi1)
    a2 = _as_amplitudes(psi2)
    if a1.shape != a2.shape:
        raise DimensionMismatch(f"shapes {a1.shape} != {a2.shape}")
    if mode == "raw":
        return float(np.linalg.norm(a1 - a2))
    if mode == "phase_aligned":
        ov = np.vdot(a1, a2)
        phase = ov / abs(ov) if abs(ov) > 0 else 1.0
        return float(np.linalg.norm(a1 - np.conj(phase) * a2))
    raise ValueError(f"unknown distance mode {mode!r}")


def project_to_patch(psi, frame: DegenerateFrame) -> tuple[StateVector, float]:
    """Projection of psi onto the degenerate subspace plus the perpendicular
    distance d_perp = ||(1-P) psi||."""
    amps = _as_amplitudes(psi)
    if amps.size != frame.dim:
        raise DimensionMismatch(f"state dim {amps.size} != frame dim {frame.dim}")
    coeff = frame.vectors.conj().T @ amps
    in_patch = frame.vectors @ coeff
    w = np.linalg.norm(in_patch)
    if w < MIN_PATCH_OVERLAP:
        raise AdiabaticityLost(f"patch overlap ||P psi|| = {w:.3f} < {MIN_PATCH_OVERLAP}")
    d_perp = float(np.linalg.norm(amps - in_patch))
    return StateVector(in_patch), d_perp
