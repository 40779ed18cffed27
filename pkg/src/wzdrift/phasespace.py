"""Classical-form phase space.

A normalized state with the overall phase removed is coordinatized by one
pivot component (kept real positive) and, per remaining basis component,
either an (angle, population) pair or an equivalent Cartesian pair.
Schrodinger dynamics becomes Hamilton's equations for the expectation value
H = <psi|H(R)|psi>; points of the degenerate subspace are fixed points, and
the linearization there (the Gamma matrix) carries the deviation theory.

The angle/population pair (p_i, q_i) is a polar-type chart and is singular at
q_i = 0.  Dark states of coupling-only Hamiltonians sit exactly on that locus
(zero excited-state population), so derivative work near a population boundary
switches the affected mode to the Cartesian pair (y_i, x_i) with
a_i = (x_i + i y_i)/sqrt(2).  The pair is canonical with y momentum-like and
x position-like, so the block structure of the linearization is unchanged,
and every chart-invariant contract (spectrum, zero modes, patch tangency) is
preserved while the Hamiltonian stays smooth.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from .errors import (
    BoundaryDegenerate,
    DefectiveMatrix,
    DimensionMismatch,
    NotAFixedPoint,
    PivotTooSmall,
    PopulationOverflow,
    ZeroModeCountMismatch,
)
from .hilbert import DegenerateFrame, ParamHamiltonian, StateVector, check_hermitian, _as_amplitudes

MIN_PIVOT_POPULATION = 0.1
POPULATION_TOL = 1e-12
BOUNDARY_MARGIN = 0.01
VF_STEP = 1e-5
GAMMA_STEP = 1e-4
FIXED_POINT_TOL = 1e-7
EIGVEC_COND_LIMIT = 1e8


@dataclass(frozen=True)
class PhasePoint:
    """Pivot-reduced phase-space point: relative phases p and populations q
    of the non-pivot components, in ascending basis order."""

    pivot: int
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        q = np.asarray(self.q, dtype=float)
        if p.shape != q.shape or p.ndim != 1:
            raise DimensionMismatch("p and q must be 1-d arrays of equal length")
        if q.min() < -POPULATION_TOL:
            raise BoundaryDegenerate(f"negative population {q.min():.3e}")
        if q.sum() > 1.0 + POPULATION_TOL:
            raise PopulationOverflow(f"sum q = {q.sum():.15f} > 1")
        p.flags.writeable = False
        q.flags.writeable = False
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def dim(self) -> int:
        return self.p.size + 1

    @property
    def pivot_population(self) -> float:
        return max(0.0, 1.0 - float(self.q.sum()))


def _nonpivot_order(dim: int, pivot: int) -> np.ndarray:
    return np.array([i for i in range(dim) if i != pivot])


def to_phase_point(psi, pivot: Optional[int] = None) -> PhasePoint:
    """Map a state to phase-space coordinates relative to a pivot component.

    Without an explicit pivot the largest-population component is used.  The
    phase of a zero-population component is set to 0 by convention.
    """
    amps = _as_amplitudes(psi)
    pops = np.abs(amps) ** 2
    if pivot is None:
        pivot = int(np.argmax(pops))
    if pops[pivot] < MIN_PIVOT_POPULATION:
        raise PivotTooSmall(
            f"pivot {pivot} population {pops[pivot]:.4f} < {MIN_PIVOT_POPULATION}; re-pivot")
    order = _nonpivot_order(amps.size, pivot)
    ref = np.angle(amps[pivot])
    p = np.angle(amps[order])
    p[pops[order] > 0] -= ref
    p = np.where(pops[order] > 0, np.mod(p + np.pi, 2 * np.pi) - np.pi, 0.0)
    return PhasePoint(pivot, p, pops[order])


def from_phase_point(pp: PhasePoint, global_phase: float = 0.0) -> StateVector:
    """Inverse mapping; the pivot component carries exp(i*global_phase)."""
    q_piv = 1.0 - pp.q.sum()
    if q_piv < -POPULATION_TOL:
        raise PopulationOverflow(f"sum q = {pp.q.sum():.15f} > 1")
    order = _nonpivot_order(pp.dim, pp.pivot)
    amps = np.zeros(pp.dim, dtype=complex)
    amps[pp.pivot] = np.sqrt(max(0.0, q_piv))
    amps[order] = np.sqrt(np.clip(pp.q, 0.0, None)) * np.exp(1j * pp.p)
    return StateVector(amps * np.exp(1j * global_phase))


def repivot(pp: PhasePoint, new_pivot: int) -> PhasePoint:
    """Exact re-mapping onto a different pivot; no change of state."""
    return to_phase_point(from_phase_point(pp), new_pivot)


ANGLE = "angle"
CARTESIAN = "cartesian"


@dataclass(frozen=True)
class CanonicalChart:
    """Canonical coordinates adapted to a base point.

    Coordinates are stacked xi = (P_1..P_m, Q_1..Q_m), m = dim-1, where for an
    angle-kind mode (P_i, Q_i) = (p_i, q_i) and for a cartesian-kind mode
    (P_i, Q_i) = (y_i, x_i).  Both pairings obey dP/dt = -dH/dQ,
    dQ/dt = +dH/dP, so matrices assembled in these blocks have the same
    structure in either kind.
    """

    pivot: int
    kinds: tuple
    base_pp: PhasePoint

    @classmethod
    def at(cls, pp: PhasePoint, style: str = "adaptive",
           margin: float = BOUNDARY_MARGIN) -> "CanonicalChart":
        if style == "cartesian":
            kinds = (CARTESIAN,) * pp.p.size
        elif style == "angle":
            kinds = (ANGLE,) * pp.p.size
        elif style == "adaptive":
            kinds = tuple(ANGLE if qi >= margin else CARTESIAN for qi in pp.q)
        else:
            raise ValueError(f"unknown chart style {style!r}")
        if pp.pivot_population < MIN_PIVOT_POPULATION:
            raise PivotTooSmall(
                f"pivot population {pp.pivot_population:.4f} too small for a chart")
        return cls(pp.pivot, kinds, pp)

    @property
    def m(self) -> int:
        return len(self.kinds)

    @property
    def dim(self) -> int:
        return self.m + 1

    @cached_property
    def order(self) -> np.ndarray:
        return _nonpivot_order(self.dim, self.pivot)

    @cached_property
    def base_amplitudes(self) -> np.ndarray:
        return from_phase_point(self.base_pp).amplitudes

    @cached_property
    def base_coords(self) -> np.ndarray:
        return self.coords(self.base_amplitudes)

    def _reduced(self, amps: np.ndarray) -> np.ndarray:
        """Rotate the global phase so the pivot amplitude is real positive."""
        piv = amps[self.pivot]
        if abs(piv) ** 2 < MIN_PIVOT_POPULATION:
            raise PivotTooSmall(
                f"pivot population {abs(piv)**2:.4f} < {MIN_PIVOT_POPULATION}")
        return amps * np.exp(-1j * np.angle(piv))

    def coords(self, psi) -> np.ndarray:
        amps = self._reduced(_as_amplitudes(psi))
        xi = np.empty(2 * self.m)
        for i, idx in enumerate(self.order):
            a = amps[idx]
            if self.kinds[i] == ANGLE:
                xi[i] = np.angle(a) if abs(a) > 0 else 0.0
                xi[self.m + i] = abs(a) ** 2
            else:
                xi[i] = np.sqrt(2.0) * a.imag
                xi[self.m + i] = np.sqrt(2.0) * a.real
        return xi

    def state(self, xi: np.ndarray, global_phase: float = 0.0) -> np.ndarray:
        """Amplitudes at chart coordinates xi (unit norm by construction)."""
        amps = np.zeros(self.dim, dtype=complex)
        q_total = 0.0
        for i, idx in enumerate(self.order):
            if self.kinds[i] == ANGLE:
                q = xi[self.m + i]
                if q < -POPULATION_TOL:
                    raise BoundaryDegenerate(f"population {q:.3e} < 0 in chart stencil")
                q = max(0.0, q)
                amps[idx] = np.sqrt(q) * np.exp(1j * xi[i])
            else:
                amps[idx] = (xi[self.m + i] + 1j * xi[i]) / np.sqrt(2.0)
                q = abs(amps[idx]) ** 2
            q_total += q
        if q_total > 1.0 + POPULATION_TOL:
            raise PopulationOverflow(f"sum q = {q_total:.15f} > 1 in chart stencil")
        amps[self.pivot] = np.sqrt(max(0.0, 1.0 - q_total))
        if global_phase != 0.0:
            amps = amps * np.exp(1j * global_phase)
        return amps

    def differential(self, ref, dpsi) -> np.ndarray:
        """Exact chart image of a Hilbert-space displacement at ``ref``.

        The global-phase direction maps to zero; norm-changing components are
        discarded through the population bookkeeping.
        """
        ref = _as_amplitudes(ref)
        d = _as_amplitudes(dpsi).astype(complex)
        phase = np.exp(-1j * np.angle(ref[self.pivot]))
        b = ref * phase
        db = d * phase
        # phase fix: keep the pivot amplitude real along the displacement
        db = db - 1j * (db[self.pivot].imag / b[self.pivot].real) * b
        dxi = np.empty(2 * self.m)
        for i, idx in enumerate(self.order):
            bi, dbi = b[idx], db[idx]
            if self.kinds[i] == ANGLE:
                if abs(bi) ** 2 < POPULATION_TOL:
                    raise BoundaryDegenerate(
                        f"angle-kind mode {idx} has zero population at the base point")
                dxi[i] = (dbi / bi).imag
                dxi[self.m + i] = 2.0 * (np.conj(bi) * dbi).real
            else:
                dxi[i] = np.sqrt(2.0) * dbi.imag
                dxi[self.m + i] = np.sqrt(2.0) * dbi.real
        return dxi

    def displacement(self, dxi: np.ndarray) -> np.ndarray:
        """Linearized inverse of :meth:`differential` at the base point.

        Returns the amplitude displacement in the pivot-real gauge of the
        base state; rotate by the phase of a reference state's pivot
        amplitude to compare against that state.
        """
        b = self.base_amplitudes
        damps = np.zeros(self.dim, dtype=complex)
        dq_total = 0.0
        for i, idx in enumerate(self.order):
            bi = b[idx]
            if self.kinds[i] == ANGLE:
                q = abs(bi) ** 2
                if q < POPULATION_TOL:
                    raise BoundaryDegenerate(
                        f"angle-kind mode {idx} has zero population at the base point")
                damps[idx] = bi * (1j * dxi[i]) + bi * dxi[self.m + i] / (2.0 * q)
                dq = dxi[self.m + i]
            else:
                damps[idx] = (dxi[self.m + i] + 1j * dxi[i]) / np.sqrt(2.0)
                dq = np.sqrt(2.0) * (bi.real * dxi[self.m + i] + bi.imag * dxi[i])
            dq_total += dq
        damps[self.pivot] = -dq_total / (2.0 * b[self.pivot].real)
        return damps


def classical_hamiltonian(hdef: ParamHamiltonian, r: float, pp: PhasePoint) -> float:
    """Expectation value <psi(pp)|H(R)|psi(pp)>, guaranteed real."""
    h = check_hermitian(hdef.eval(r))
    amps = from_phase_point(pp).amplitudes
    val = np.vdot(amps, h @ amps)
    # Hermiticity was checked above, so the imaginary part is roundoff only.
    return float(val.real)


def _expectation_fn(hdef: ParamHamiltonian, r: float, chart: CanonicalChart):
    h = check_hermitian(hdef.eval(r))
    if h.shape[0] != chart.dim:
        raise DimensionMismatch(f"H dim {h.shape[0]} != chart dim {chart.dim}")

    def f(xi: np.ndarray) -> float:
        amps = chart.state(xi)
        return float(np.vdot(amps, h @ amps).real)

    return f


def _gradient(f, xi0: np.ndarray, h: float) -> np.ndarray:
    g = np.empty(xi0.size)
    for i in range(xi0.size):
        xp = xi0.copy(); xp[i] += h
        xm = xi0.copy(); xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2.0 * h)
    return g


def _hessian(f, xi0: np.ndarray, h: float) -> np.ndarray:
    n = xi0.size
    s = np.empty((n, n))
    f0 = f(xi0)
    fp = np.empty(n)
    fm = np.empty(n)
    for i in range(n):
        xp = xi0.copy(); xp[i] += h
        xm = xi0.copy(); xm[i] -= h
        fp[i] = f(xp)
        fm[i] = f(xm)
        s[i, i] = (fp[i] - 2.0 * f0 + fm[i]) / h ** 2
    for i in range(n):
        for j in range(i + 1, n):
            xpp = xi0.copy(); xpp[i] += h; xpp[j] += h
            xpm = xi0.copy(); xpm[i] += h; xpm[j] -= h
            xmp = xi0.copy(); xmp[i] -= h; xmp[j] += h
            xmm = xi0.copy(); xmm[i] -= h; xmm[j] -= h
            s[i, j] = s[j, i] = (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4.0 * h ** 2)
    return s


def hamilton_vector_field(hdef: ParamHamiltonian, r: float, pp: PhasePoint,
                          h: float = VF_STEP) -> tuple[np.ndarray, np.ndarray]:
    """Hamiltonian flow (dp/dt, dq/dt) by central differences of the
    classical Hamiltonian.

    Modes whose population sits within the boundary margin of {0, 1} are
    differentiated in their Cartesian pair; the returned slots for such a
    mode carry the Cartesian pair rates, which vanish exactly when the flow
    is stationary there.
    """
    chart = CanonicalChart.at(pp, style="adaptive")
    f = _expectation_fn(hdef, r, chart)
    g = _gradient(f, chart.base_coords, h)
    m = chart.m
    dp = -g[m:]
    dq = g[:m]
    return dp, dq


def gamma_matrix(hdef: ParamHamiltonian, r: float, pp_bar: PhasePoint,
                 h: float = GAMMA_STEP) -> np.ndarray:
    """Linearization of the Hamiltonian flow at a degenerate fixed point.

    Assembled from central-difference second derivatives of the classical
    Hamiltonian in the smooth Cartesian chart at pp_bar, in the block layout
    [[-H_qp, -H_qq], [H_pp, H_pq]].  Singular because the patch directions
    are annihilated.
    """
    chart = _linearization_chart(pp_bar)
    return _gamma_in_chart(hdef, r, chart, h)


def _linearization_chart(pp_bar: PhasePoint) -> CanonicalChart:
    return CanonicalChart.at(pp_bar, style="cartesian")


def _gamma_in_chart(hdef: ParamHamiltonian, r: float, chart: CanonicalChart,
                    h: float = GAMMA_STEP) -> np.ndarray:
    f = _expectation_fn(hdef, r, chart)
    xi0 = chart.base_coords
    g = _gradient(f, xi0, h)
    scale = 1.0 + np.abs(hdef.eval(r)).max()
    if np.abs(g).max() > FIXED_POINT_TOL * scale:
        raise NotAFixedPoint(
            f"flow residual {np.abs(g).max():.3e} at the expansion point; "
            "the linearization is only valid on the degeneracy patch")
    s = _hessian(f, xi0, h)
    m = chart.m
    gamma = np.empty((2 * m, 2 * m))
    gamma[:m, :] = -s[m:, :]
    gamma[m:, :] = s[:m, :]
    return gamma


@dataclass(frozen=True)
class GammaSpectrum:
    """Spectral data of a Gamma matrix: eigenvalues ordered zero-modes-first,
    the row-eigenvector transform U with U Gamma U^-1 diagonal, and the chart
    that defines the coordinates (when built from one)."""

    gamma: np.ndarray
    eigenvalues: np.ndarray
    transform: np.ndarray
    zero_tol: float
    n_zero: int
    chart: Optional[CanonicalChart] = None
    eigvec_cond: float = 0.0
    recon_residual: float = 0.0

    @property
    def n_nonzero(self) -> int:
        return self.eigenvalues.size - self.n_zero

    @property
    def nz_eigenvalues(self) -> np.ndarray:
        return self.eigenvalues[self.n_zero:]

    @property
    def inverse_transform(self) -> np.ndarray:
        return np.linalg.inv(self.transform)


def gamma_spectrum(gamma: np.ndarray, zero_tol: Optional[float] = None,
                   expected_zero_modes: Optional[int] = None,
                   chart: Optional[CanonicalChart] = None) -> GammaSpectrum:
    """Complex eigendecomposition of Gamma with zero-mode bookkeeping.

    Eigenvalues are sorted zero-modes-first, then by ascending |Im d|; U is
    built from left-eigenvector rows so that U Gamma U^-1 is diagonal.
    """
    gamma = np.asarray(gamma, dtype=float)
    if gamma.ndim != 2 or gamma.shape[0] != gamma.shape[1] or gamma.shape[0] % 2:
        raise DimensionMismatch("gamma must be square with even dimension")
    d, v = np.linalg.eig(gamma)
    if zero_tol is None:
        dmax = np.abs(d).max()
        zero_tol = 1e-6 * dmax if dmax > 1e-12 * (1.0 + np.abs(gamma).max()) else np.inf
    is_zero = np.abs(d) < zero_tol
    n_zero = int(is_zero.sum())
    if expected_zero_modes is not None and n_zero != expected_zero_modes:
        raise ZeroModeCountMismatch(
            f"{n_zero} zero modes found, expected {expected_zero_modes} "
            f"(|d| threshold {zero_tol:.3e})")
    # zero modes first, then ascending oscillation frequency; the sign and
    # real-part keys only make the order deterministic
    perm = np.lexsort((d.real, -np.sign(d.imag), np.abs(d.imag), ~is_zero * 1))
    d = d[perm]
    v = v[:, perm]
    cond = np.linalg.cond(v)
    if cond > EIGVEC_COND_LIMIT:
        raise DefectiveMatrix(f"eigenvector condition number {cond:.3e} > {EIGVEC_COND_LIMIT:.0e}")
    u = np.linalg.inv(v)
    recon = np.abs(u @ gamma @ v - np.diag(d)).max()
    return GammaSpectrum(gamma, d, u, float(zero_tol), n_zero, chart,
                         float(cond), float(recon))


def patch_linearization(hdef: ParamHamiltonian, r: float, pp_bar: PhasePoint,
                        h: float = GAMMA_STEP,
                        zero_tol: Optional[float] = None) -> GammaSpectrum:
    """Gamma matrix and spectrum at a point of the degeneracy patch, with the
    chart attached so deviations can be mapped back to wavefunctions."""
    chart = _linearization_chart(pp_bar)
    gamma = _gamma_in_chart(hdef, r, chart, h)
    expected = 2 * (hdef.deg_multiplicity - 1)
    return gamma_spectrum(gamma, zero_tol, expected, chart)


def patch_tangents(chart: CanonicalChart, frame: DegenerateFrame) -> np.ndarray:
    """In-chart tangent directions of the degeneracy patch at the chart base.

    Returns a (2(k-1), 2m) array of real chart vectors spanning the patch
    tangent space (the global-phase direction maps to zero and is excluded).
    """
    base = chart.base_amplitudes
    coeff = frame.coefficients(base)
    # patch directions orthogonal to the base state within the subspace
    perp = frame.vectors - np.outer(base, coeff.conj())
    u, s, _ = np.linalg.svd(perp, full_matrices=False)
    tangents = []
    for col in np.flatnonzero(s > 1e-9):
        w = u[:, col]
        tangents.append(chart.differential(base, w))
        tangents.append(chart.differential(base, 1j * w))
    return np.array(tangents)
