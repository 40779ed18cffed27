import numpy as np
import pytest

from wzdrift.hilbert import ParamHamiltonian
from wzdrift.transport import Protocol
from wzdrift.tripod import TripodParams, analytic_dark_states, scan_family

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance pass lines even when stdout capture hides them."""
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def tripod_z():
    """z-scan family at the reference configuration (x = 1)."""
    return scan_family(TripodParams(x=1.0), "z")


@pytest.fixture(scope="session")
def tripod_x():
    return scan_family(TripodParams(z=0.0, x=0.0), "x")


@pytest.fixture
def dark_frame():
    def make(x=1.0, z=0.0, r=None):
        return analytic_dark_states(TripodParams(x=x, z=z), r=z if r is None else r)
    return make


def make_protected_doublet(n=6, gaps=(1.0, 1.7, 2.5, 3.3), deg_energy=0.0, seed=7):
    """Synthetic n-level model with an exactly protected 2-fold degenerate
    level: H(R) = V(R) D V(R)^dag with V a smoothly R-dependent unitary."""
    rng = np.random.default_rng(seed)

    def herm(scale):
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        return scale * (a + a.conj().T) / 2.0

    g0 = herm(1.0)
    g1 = herm(0.6)
    levels = np.concatenate([[deg_energy, deg_energy], deg_energy + np.asarray(gaps)])

    def eval_single(r: float) -> np.ndarray:
        w, u = np.linalg.eigh(g0 + r * g1)
        v = u @ (np.exp(-1j * w)[:, None] * u.conj().T)
        h = v @ (levels[:, None] * v.conj().T)
        return (h + h.conj().T) / 2.0

    return ParamHamiltonian(dim=n, eval=eval_single, deg_energy=deg_energy,
                            deg_multiplicity=2, name="protected_doublet")


@pytest.fixture(scope="session")
def doublet6():
    return make_protected_doublet()


def short_protocol(start=0.0, end=1.0, velocity=1e-2, scan="z", fixed=1.0):
    return Protocol.from_range(scan, start, end, velocity, fixed)
