import numpy as np
import pytest

from spinpair.interaction import (
    angstrom_to_m,
    blockade_shift,
    dipole_coupling,
    dipole_prefactor,
    dipole_only_ordering_violated,
    exchange_report,
    ghz_to_hz,
    hz_to_ghz,
    m_to_angstrom,
    min_exchange_scan,
)
from spinpair.tensors import decompose_coupling, rotation_matrix

G = np.diag([0.0, 0.0, 232.0])
SITE_B_J = {"00": 209.0, "10": 233.0, "01": 220.0}
SITE_B_G = {
    "00": (np.diag([0, 0, 232.0]), np.diag([0, 0, 232.0])),
    "10": (np.diag([0, 0, 188.0]), np.diag([0, 0, 232.0])),
    "01": (np.diag([0, 0, 232.0]), np.diag([0, 0, 188.0])),
}


def _oracle_zz(g1, g2, r_angstrom, cos_theta):
    # direct SI arithmetic: mu0/4pi * h * g1 g2 (1 - 3 cos^2) / r^3
    mu0_4pi = 1e-7
    h = 6.62607015e-34
    r = r_angstrom * 1e-10
    return mu0_4pi * h * (g1 * 1e9) * (g2 * 1e9) * (1 - 3 * cos_theta ** 2) / r ** 3 / 1e9


def test_site_b_along_z():
    J = dipole_coupling(G, G, [0, 0, 5.4])
    assert np.isclose(J[2, 2], _oracle_zz(232, 232, 5.4, 1.0), rtol=1e-12)
    assert np.isclose(J[2, 2], -45.298176, atol=1e-6)
    assert abs(abs(J[2, 2]) - 45.3) <= 0.2


def test_site_b_along_x():
    J = dipole_coupling(G, G, [5.4, 0, 0])
    assert np.isclose(J[2, 2], 22.649088, atol=1e-6)


def test_zero_tensor_gives_zero():
    assert np.all(dipole_coupling(G, np.zeros((3, 3)), [0, 0, 5]) == 0)


def test_too_close():
    with pytest.raises(ValueError):
        dipole_coupling(G, G, [0, 0, 0.3])


def test_inverse_cube_scaling():
    base = dipole_coupling(G, G, [0.3, 0.4, 1.0])
    for s in (2.0, 5.0, 10.0):
        assert np.allclose(dipole_coupling(G, G, s * np.array([0.3, 0.4, 1.0])), base / s ** 3,
                           rtol=1e-12, atol=0)


def test_unit_chokepoint_roundtrips():
    x = np.array([0.5, 3.25, 5.4])
    assert np.allclose(m_to_angstrom(angstrom_to_m(x)), x)
    assert np.allclose(hz_to_ghz(ghz_to_hz(x)), x)
    assert np.isclose(dipole_prefactor(1.0), 1e-7 * 6.62607015e-34 / 1e-30 * 1e18 / 1e9)


def test_identical_symmetric_tensors_give_symmetric_coupling():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(3, 3))
    M = A + A.T
    J = dipole_coupling(M, M, rng.normal(size=3) * 5)
    assert np.allclose(decompose_coupling(J).D, 0, atol=1e-12)


def test_ising_tensors_give_single_element():
    J = dipole_coupling(G, np.diag([0, 0, 188.0]), [1.0, 2.0, 4.0])
    mask = np.ones((3, 3), bool)
    mask[2, 2] = False
    assert np.all(J[mask] == 0)


def test_rotation_covariance():
    rng = np.random.default_rng(1)
    M1, M2 = rng.normal(size=(3, 3)), rng.normal(size=(3, 3))
    M1, M2 = M1 + M1.T, M2 + M2.T
    r = np.array([1.0, 2.0, 3.0])
    R = rotation_matrix([1, 1, 0], 0.4)
    J = dipole_coupling(M1, M2, r)
    Jr = dipole_coupling(R @ M1 @ R.T, R @ M2 @ R.T, R @ r)
    assert np.allclose(Jr, R @ J @ R.T, atol=1e-9)


def test_exchange_fraction_at_lattice_spacing():
    rep = exchange_report(SITE_B_J, SITE_B_G, [0, 0, 1], 5.4)
    assert rep.total_fraction >= 0.75
    assert rep.min_fraction >= 0.75
    assert rep.admissible
    assert not rep.flagged


def test_exchange_fraction_at_close_spacing():
    rep = exchange_report(SITE_B_J, SITE_B_G, [0, 0, 1], 3.25)
    assert abs(rep.total_fraction - 0.20) <= 0.05


def test_exchange_fraction_tends_to_one():
    rep = exchange_report(SITE_B_J, SITE_B_G, [0, 0, 1], 1e4)
    assert np.isclose(rep.total_fraction, 1.0, atol=1e-9)


def test_fraction_flagged_above_one():
    rep = exchange_report(SITE_B_J, SITE_B_G, [0, 0, 1], 1.5)
    assert rep.flagged and not rep.admissible


def test_scan():
    scan = min_exchange_scan(SITE_B_J, SITE_B_G, [0, 0, 1], np.linspace(3.0, 6.0, 61))
    assert len(scan.reports) == 61
    assert np.isclose(scan.r_admissible, (45.298176 * 5.4 ** 3 / 209.0) ** (1 / 3), rtol=1e-6)
    assert abs(scan.total_at_admissible - 0.2) <= 0.05
    assert scan.at(5.4).r_angstrom == pytest.approx(5.4)
    with pytest.raises(ValueError):
        min_exchange_scan(SITE_B_J, SITE_B_G, [0, 0, 1], [3.0, 5.0, 4.0])


def test_dipole_only_ordering():
    gz = {"00": (232, 232), "10": (188, 232), "01": (232, 188)}
    assert dipole_only_ordering_violated(SITE_B_J, gz)
    assert not dipole_only_ordering_violated({"00": 233, "10": 209, "01": 200}, gz)


def test_blockade():
    assert blockade_shift(209, 233, 220, 233 + 220 - 209) == 0
    assert blockade_shift(209, 233, 220, 209) == pytest.approx(-8.75)
    assert blockade_shift(100, 100, 100, 100) == 0
    assert blockade_shift(209, 233, 220, 209, spins="antiparallel") == pytest.approx(8.75)
    with pytest.raises(ValueError):
        blockade_shift(1, 2, 3, 4, spins="sideways")
