import numpy as np
import pytest

from wzdrift.hilbert import spectral_decompose
from wzdrift.transport import wz_connection
from wzdrift.tripod import (
    COS_XI_DEFAULT,
    TripodParams,
    analytic_dark_states,
    rabi_frequencies,
    scan_family,
    tripod_hamiltonian,
)

# closed-form coupling magnitudes at the default mixing angle
SIN_XI = np.sqrt(2.0 * np.sqrt(2.0) - 2.0)
W12 = SIN_XI / np.sqrt(2.0)          # 0.643594...
KAPPA = COS_XI_DEFAULT               # 0.414214...


def test_param_validation():
    with pytest.raises(ValueError):
        TripodParams(omega0=-1.0)
    with pytest.raises(ValueError):
        TripodParams(cos_xi=1.2)


def test_hamiltonian_first_row_at_origin():
    h = tripod_hamiltonian(TripodParams())
    expected = np.array([0.0, 0.643594, 0.643594, 0.414214])
    assert np.abs(h[0] - expected).max() < 1e-6
    assert np.abs(np.diag(h)).max() == 0.0


def test_coupling_normalization():
    w = rabi_frequencies(TripodParams(x=2.1, z=-0.7))
    assert abs(sum(abs(wn) ** 2 for wn in w) - 1.0) < 1e-14


def test_spectrum_is_position_independent():
    rng = np.random.default_rng(42)
    for _ in range(100):
        params = TripodParams(x=rng.uniform(-10, 10), z=rng.uniform(-10, 10))
        evals = np.linalg.eigvalsh(tripod_hamiltonian(params))
        assert np.abs(evals - np.array([-1.0, 0.0, 0.0, 1.0])).max() < 1e-10


def test_phase_periodicity():
    base = tripod_hamiltonian(TripodParams(x=0.4, z=1.1))
    shifted = tripod_hamiltonian(TripodParams(x=0.4 + 2 * np.pi, z=1.1))
    assert np.abs(base - shifted).max() < 1e-12


def test_dark_states_annihilated():
    rng = np.random.default_rng(7)
    for _ in range(100):
        params = TripodParams(x=rng.uniform(-10, 10), z=rng.uniform(-10, 10))
        h = tripod_hamiltonian(params)
        fr = analytic_dark_states(params)
        assert np.abs(h @ fr.vectors).max() < 1e-12


def test_dark_states_orthonormal():
    rng = np.random.default_rng(9)
    for _ in range(20):
        fr = analytic_dark_states(TripodParams(x=rng.uniform(-5, 5), z=rng.uniform(-5, 5)))
        gram = fr.vectors.conj().T @ fr.vectors
        assert np.abs(gram - np.eye(2)).max() < 1e-12


def test_analytic_and_numeric_span_agree():
    rng = np.random.default_rng(13)
    for _ in range(25):
        params = TripodParams(x=rng.uniform(-10, 10), z=rng.uniform(-10, 10))
        h = tripod_hamiltonian(params)
        dec = spectral_decompose(h, 0.0, 1e-9, 2)
        v = dec.eigenvectors[:, dec.degenerate_cluster]
        p_num = v @ v.conj().T
        assert np.abs(p_num - analytic_dark_states(params).projector).max() < 1e-9


def test_z_scan_connection_is_diagonal():
    # frozen from the closed-form gauge: <D1|d_z D1> = +i k cos(xi),
    # <D2|d_z D2> = -i k cos(xi) (using cos^2 + cos - 1 = -cos at the default angle)
    hdef = scan_family(TripodParams(x=1.0), "z")
    a = wz_connection(hdef, 0.7, hdef.analytic_frame_field)
    expected = np.diag([1j * KAPPA, -1j * KAPPA])
    assert np.abs(a - expected).max() < 1e-8


def test_x_scan_connection_is_off_diagonal():
    # frozen from the closed-form gauge: <D1|d_x D2> = <D2|d_x D1> = i k cos(xi)
    hdef = scan_family(TripodParams(z=0.4, x=0.0), "x")
    a = wz_connection(hdef, -0.3, hdef.analytic_frame_field)
    expected = np.array([[0.0, 1j * KAPPA], [1j * KAPPA, 0.0]])
    assert np.abs(a - expected).max() < 1e-8


def test_scan_family_batch_matches_single():
    hdef = scan_family(TripodParams(x=0.5, z=-1.0), "x")
    rs = np.array([-2.0, 0.0, 3.5])
    batch = hdef.matrices(rs)
    for i, r in enumerate(rs):
        assert np.abs(batch[i] - hdef.eval(r)).max() < 1e-15
