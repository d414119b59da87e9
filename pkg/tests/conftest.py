import numpy as np
import pytest

from qmanopt import linalg
from qmanopt.hamiltonian import bundled_fixture
from qmanopt.manifold import StiefelPoint


def random_frame(n, p, rng):
    return StiefelPoint(linalg.random_orthonormal(n, p, rng))


def gapped_hamiltonian(n, seed, low=8, low_gap=1.0, bulk=8.5, eps=0.05):
    """Symmetric ``H`` with ``low`` well separated bottom eigenvalues.

    The spectrum is rotated by ``expm(eps * S)`` for a random skew ``S``, so
    the diagonal stays a good screening guess while the eigenvectors are
    dense.
    """
    from scipy.linalg import expm

    rng = np.random.default_rng(seed)
    lam = np.concatenate([low_gap * np.arange(low), bulk + 0.1 * np.arange(n - low)])
    Q = expm(eps * linalg.random_skew(n, rng))
    return linalg.sym(Q @ np.diag(lam) @ Q.T)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def h2_path():
    return bundled_fixture()


# verdict lines from test_acceptance.py, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
