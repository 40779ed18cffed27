"""The 4-level tripod model: three Rabi couplings from one excited state to
three ground states, with two exactly degenerate dark states at zero energy.

Basis order is (|0>, |1>, |2>, |3>) with the excited state first.  Units:
hbar = 1, energies in the Rabi scale, positions in inverse laser wavevectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .hilbert import DegenerateFrame, ParamHamiltonian

COS_XI_DEFAULT = math.sqrt(2.0) - 1.0


@dataclass(frozen=True)
class TripodParams:
    """Rabi scale, laser wavevector, mixing angle (via its cosine) and beam
    positions.  The default mixing angle satisfies cos(xi) = sqrt(2) - 1."""

    omega0: float = 1.0
    k_l: float = 1.0
    cos_xi: float = COS_XI_DEFAULT
    x: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        if self.omega0 <= 0:
            raise ValueError(f"omega0 must be positive, got {self.omega0}")
        if self.k_l <= 0:
            raise ValueError(f"k_l must be positive, got {self.k_l}")
        if not 0.0 < self.cos_xi < 1.0:
            raise ValueError("mixing angle must lie strictly inside (0, pi/2)")

    @property
    def sin_xi(self) -> float:
        return math.sqrt(1.0 - self.cos_xi ** 2)


def rabi_frequencies(params: TripodParams) -> tuple[complex, complex, complex]:
    """Couplings of the three ground states to the excited state: two
    counter-propagating beams along x, one beam along z."""
    w12 = params.omega0 * params.sin_xi / math.sqrt(2.0)
    w1 = w12 * np.exp(-1j * params.k_l * params.x)
    w2 = w12 * np.exp(1j * params.k_l * params.x)
    w3 = params.omega0 * params.cos_xi * np.exp(1j * params.k_l * params.z)
    return w1, w2, w3


def tripod_hamiltonian(params: TripodParams) -> np.ndarray:
    """4x4 Hermitian coupling matrix with zero diagonal; the spectrum is
    {-omega0, 0, 0, +omega0} independent of position."""
    w = rabi_frequencies(params)
    h = np.zeros((4, 4), dtype=complex)
    for n, wn in enumerate(w, start=1):
        h[0, n] = wn
        h[n, 0] = np.conj(wn)
    return h


def analytic_dark_states(params: TripodParams, r: float = 0.0) -> DegenerateFrame:
    """Closed-form orthonormal dark pair annihilated by the Hamiltonian.

    The gauge follows the plane-wave phases of the beams; the z-scan
    connection in this gauge is diagonal with entries +-i k_l cos(xi).
    """
    kl, x, z = params.k_l, params.x, params.z
    cx, sx = params.cos_xi, params.sin_xi
    kappa = kl * (1.0 - cx)
    tail = np.exp(-1j * kappa * z)
    t1 = np.exp(1j * kl * (x + z))
    t2 = np.exp(-1j * kl * (x - z))
    d1 = np.zeros(4, dtype=complex)
    d1[1] = t1 * tail / math.sqrt(2.0)
    d1[2] = -t2 * tail / math.sqrt(2.0)
    d2 = np.zeros(4, dtype=complex)
    d2[1] = cx * t1 * tail / math.sqrt(2.0)
    d2[2] = cx * t2 * tail / math.sqrt(2.0)
    d2[3] = -sx * tail
    return DegenerateFrame(r, np.column_stack([d1, d2]), 0.0)


_AXIS = {"x": 0, "z": 1}


def _batch_eval(params: TripodParams, scan: str):
    kl = params.k_l
    w12 = params.omega0 * params.sin_xi / math.sqrt(2.0)
    w3c = params.omega0 * params.cos_xi

    def eval_batch(r_values: np.ndarray) -> np.ndarray:
        r_values = np.atleast_1d(np.asarray(r_values, dtype=float))
        if scan == "z":
            x = np.full_like(r_values, params.x)
            z = r_values
        else:
            x = r_values
            z = np.full_like(r_values, params.z)
        h = np.zeros(r_values.shape + (4, 4), dtype=complex)
        e1 = np.exp(-1j * kl * x)
        e3 = np.exp(1j * kl * z)
        h[..., 0, 1] = w12 * e1
        h[..., 0, 2] = w12 * np.conj(e1)
        h[..., 0, 3] = w3c * e3
        h[..., 1, 0] = np.conj(h[..., 0, 1])
        h[..., 2, 0] = np.conj(h[..., 0, 2])
        h[..., 3, 0] = np.conj(h[..., 0, 3])
        return h

    return eval_batch


def scan_family(params: TripodParams, scan: str = "z") -> ParamHamiltonian:
    """One-parameter Hamiltonian family scanning x or z with the other
    coordinate held fixed; carries the compiled integrator kernel and the
    analytic dark-state gauge."""
    if scan not in _AXIS:
        raise ValueError(f"scan coordinate must be 'x' or 'z', got {scan!r}")
    fixed = params.z if scan == "x" else params.x
    axis = _AXIS[scan]

    def eval_single(r: float) -> np.ndarray:
        coords = {"x": params.x, "z": params.z, scan: r}
        return tripod_hamiltonian(replace(params, x=coords["x"], z=coords["z"]))

    def rk4_kernel(r0, v, dt, n_steps, stride, psi0):
        return _kernels.rk4_tripod(params.omega0, params.k_l, params.cos_xi,
                                   fixed, axis, r0, v, dt, n_steps, stride, psi0)

    def frame_field(r: float) -> DegenerateFrame:
        coords = {"x": params.x, "z": params.z, scan: r}
        return analytic_dark_states(
            replace(params, x=coords["x"], z=coords["z"]), r=r)

    return ParamHamiltonian(
        dim=4,
        eval=eval_single,
        deg_energy=0.0,
        deg_multiplicity=2,
        name="tripod",
        eval_batch=_batch_eval(params, scan),
        rk4_kernel=rk4_kernel,
        analytic_frame_field=frame_field,
    )
