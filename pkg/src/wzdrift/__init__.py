"""Numerics for quantum adiabatic evolution on degenerate levels: exact
integration, Wilczek-Zee parallel transport, and the first-order deviation
between them predicted from a classical phase-space linearization."""

from .config import RunConfig, parse_config
from .deviation import (
    DeviationTrace,
    DeviationVector,
    TransformedVector,
    decompose_deviation,
    dominant_frequency,
    first_order_offset,
    scaling_exponent,
    spectral_first_order_offset,
    trace_statistic,
    wz_tangent_transformed,
)
from .hilbert import (
    DegenerateFrame,
    EigenDecomposition,
    ParamHamiltonian,
    StateVector,
    degenerate_frame,
    distance,
    project_to_patch,
    spectral_decompose,
)
from .phasespace import (
    CanonicalChart,
    GammaSpectrum,
    PhasePoint,
    classical_hamiltonian,
    from_phase_point,
    gamma_matrix,
    gamma_spectrum,
    hamilton_vector_field,
    patch_linearization,
    patch_tangents,
    repivot,
    to_phase_point,
)
from .transport import (
    Protocol,
    Trajectory,
    WZTrajectory,
    integrate_schrodinger,
    integrate_wz,
    wz_connection,
    wz_orthogonality_residual,
    wz_step,
)
from .tripod import TripodParams, analytic_dark_states, scan_family, tripod_hamiltonian

__version__ = "0.1.0"
