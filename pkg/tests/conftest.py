import numpy as np
import pytest

from spinpair import _kernels
from spinpair.model import E01, E10, G00, PairSiteModel


@pytest.fixture(params=sorted(_kernels.BACKENDS))
def backend(request):
    return request.param


def random_hermitian(rng, n, scale=10.0):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (A + A.conj().T) / 2


def random_model(rng, parity="even", kappa=None, ising=False, both_active=True):
    """Random pair model with all three spectral states."""
    states = {}
    for s in (G00, E10, E01):
        if ising:
            g1 = np.diag([0, 0, rng.uniform(20, 250)])
            g2 = np.diag([0, 0, rng.uniform(20, 250)])
            J = np.diag([0, 0, rng.uniform(-250, 250)])
        else:
            g1 = rng.normal(scale=80.0, size=(3, 3))
            g2 = rng.normal(scale=80.0, size=(3, 3))
            J = rng.normal(scale=20.0, size=(3, 3))
        states[s] = dict(g1=g1, g2=g2, J=J)
    return PairSiteModel(
        states=states,
        nu10=rng.uniform(-5, 5),
        detuning=rng.uniform(-20, 20),
        kappa=rng.uniform(0, 2) if kappa is None else kappa,
        parity=parity,
        ion2_active=both_active,
        name="random",
    )


def random_field(rng, scale=1.0):
    return rng.normal(scale=scale, size=3)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
